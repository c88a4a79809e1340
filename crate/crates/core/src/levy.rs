//! Additive free Lévy processes described by generator tuples.
//!
//! A tuple `(d, T, u, v, lambda)` on `k = R^d` defines the process
//!
//! ```text
//! X_t = Lambda(1_[0,t) (x) T) + a+(1_[0,t) (x) u) + a-(1_[0,t) (x) v) + t lambda
//! ```
//!
//! on the free Fock space over `L^2(R_+) (x) k`. Restricted to finitely many
//! disjoint intervals, only the normalized indicators of those intervals
//! matter, so each interval becomes one orthogonal copy of `k`.
//!
//! Cumulants of `X_t` are `k_1 = t lambda` and `k_n = t <v, T^(n-2) u>` for
//! `n >= 2`; the free-flavor version is checked against the Fock
//! realization in the test suite.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::fock::{annihilation, conservation, creation, free_embedding, FockOperator};
use crate::moments::{CumulantSequence, Flavor};
use crate::{Error, Result, C64};

/// Tolerance of the symmetry test on tuples.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Rank tolerance of the Krylov basis in [`minimal_tuple`].
pub const KRYLOV_RANK_TOL: f64 = 1e-10;
/// Relative singular value cutoff of the pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-10;
/// `T` is treated as zero below this entry size.
pub const ZERO_OPERATOR_TOL: f64 = 1e-10;
/// Relative tolerance of the compound-Poisson conditions.
pub const COMPOUND_POISSON_TOL: f64 = 1e-9;

/// Generator tuple `(d, T, u, v, lambda)` with real entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TupleRepr", into = "TupleRepr")]
pub struct GeneratorTuple {
    t: DMatrix<f64>,
    u: DVector<f64>,
    v: DVector<f64>,
    lambda: f64,
}

/// JSON layout: `{"d": 2, "T": [[..], [..]], "u": [..], "v": [..], "lambda": x}`.
/// `v` may be omitted for symmetric tuples.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TupleRepr {
    d: usize,
    #[serde(rename = "T")]
    t: Vec<Vec<f64>>,
    u: Vec<f64>,
    #[serde(default)]
    v: Option<Vec<f64>>,
    lambda: f64,
}

impl TryFrom<TupleRepr> for GeneratorTuple {
    type Error = Error;

    fn try_from(r: TupleRepr) -> Result<Self> {
        let d = r.d;
        if r.t.len() != d || r.t.iter().any(|row| row.len() != d) {
            return Err(Error::Shape(format!("field `T` must be a {d}x{d} matrix")));
        }
        let t = DMatrix::from_fn(d, d, |i, j| r.t[i][j]);
        let v = r.v.unwrap_or_else(|| r.u.clone());
        GeneratorTuple::new(t, DVector::from_vec(r.u), DVector::from_vec(v), r.lambda)
    }
}

impl From<GeneratorTuple> for TupleRepr {
    fn from(g: GeneratorTuple) -> Self {
        let d = g.dim();
        TupleRepr {
            d,
            t: (0..d).map(|i| g.t.row(i).iter().copied().collect()).collect(),
            u: g.u.iter().copied().collect(),
            v: Some(g.v.iter().copied().collect()),
            lambda: g.lambda,
        }
    }
}

impl GeneratorTuple {
    pub fn new(t: DMatrix<f64>, u: DVector<f64>, v: DVector<f64>, lambda: f64) -> Result<Self> {
        let d = t.nrows();
        if t.ncols() != d {
            return Err(Error::Shape(format!("field `T` is {}x{}, not square", d, t.ncols())));
        }
        if u.len() != d {
            return Err(Error::Shape(format!("field `u` has length {}, expected {d}", u.len())));
        }
        if v.len() != d {
            return Err(Error::Shape(format!("field `v` has length {}, expected {d}", v.len())));
        }
        let finite = t.iter().chain(u.iter()).chain(v.iter()).all(|x| x.is_finite());
        if !finite || !lambda.is_finite() {
            return Err(Error::Shape("tuple has non-finite entries".into()));
        }
        Ok(Self { t, u, v, lambda })
    }

    /// Tuple with `v = u`.
    pub fn symmetric(t: DMatrix<f64>, u: DVector<f64>, lambda: f64) -> Result<Self> {
        let v = u.clone();
        Self::new(t, u, v, lambda)
    }

    /// Pure drift `X_t = t lambda`.
    pub fn drift(lambda: f64) -> Self {
        Self {
            t: DMatrix::zeros(0, 0),
            u: DVector::zeros(0),
            v: DVector::zeros(0),
            lambda,
        }
    }

    /// Tuple of the compound Poisson process with finitely supported Lévy
    /// measure `sum_i w_i delta_{x_i}`: `k = L^2(mu)`, `T` multiplication
    /// by `x`, `u` the function `x`, `lambda = int x dmu`. In the orthonormal
    /// basis `1_{x_i} / sqrt(w_i)` the constant function 1 has coordinates
    /// `sqrt(w_i)` and satisfies `T 1 = u`.
    pub fn compound_poisson(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.iter().any(|&(x, w)| x == 0.0 || w <= 0.0) {
            return Err(Error::Precondition(
                "Lévy measure atoms need nonzero location and positive weight".into(),
            ));
        }
        let t = DMatrix::from_diagonal(&DVector::from_iterator(
            atoms.len(),
            atoms.iter().map(|a| a.0),
        ));
        let u = DVector::from_iterator(atoms.len(), atoms.iter().map(|&(x, w)| x * w.sqrt()));
        let lambda = atoms.iter().map(|&(x, w)| x * w).sum();
        Self::symmetric(t, u, lambda)
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn t(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `T = T*` and `u = v`, entrywise to [`SYMMETRY_TOL`].
    pub fn is_symmetric(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| (self.t[(i, j)] - self.t[(j, i)]).abs() <= SYMMETRY_TOL))
            && (&self.u - &self.v).amax() <= SYMMETRY_TOL
    }

    fn require_symmetric(&self) -> Result<()> {
        if !self.is_symmetric() {
            return Err(Error::Precondition(
                "tuple must be symmetric (T = T*, u = v)".into(),
            ));
        }
        Ok(())
    }
}

/// Disjoint time intervals `[s_i, t_i)` sampled from one process.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSpec {
    intervals: Vec<(f64, f64)>,
    tuple: GeneratorTuple,
}

impl IncrementSpec {
    pub fn new(intervals: Vec<(f64, f64)>, tuple: GeneratorTuple) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Intervals("no intervals given".into()));
        }
        for &(s, t) in &intervals {
            if !(s >= 0.0 && t > s && t.is_finite()) {
                return Err(Error::Intervals(format!("[{s}, {t}) is not a valid interval")));
            }
        }
        let mut sorted = intervals.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in sorted.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::Intervals(format!(
                    "[{}, {}) and [{}, {}) overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(Self { intervals, tuple })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn tuple(&self) -> &GeneratorTuple {
        &self.tuple
    }
}

fn complex_vector(x: &DVector<f64>, scale: f64) -> Vec<C64> {
    x.iter().map(|&a| C64::new(a * scale, 0.0)).collect()
}

/// The increments `X_{s_i t_i}` as operators on one truncated free Fock
/// space with one copy of `k` per interval:
/// `Lambda_i(T) + a+_i(sqrt(h) u) + a-_i(sqrt(h) v) + h lambda`, `h = t_i - s_i`.
pub fn realize_process(spec: &IncrementSpec, depth: usize) -> Result<Vec<FockOperator>> {
    let d = spec.tuple.dim();
    let blocks = vec![d; spec.intervals.len()];
    let (space, injections) = free_embedding(&blocks, depth)?;
    let t_complex = spec.tuple.t.map(|x| C64::new(x, 0.0));
    spec.intervals
        .iter()
        .zip(&injections)
        .map(|(&(s, t), inj)| {
            let h = t - s;
            let root = h.sqrt();
            let lam = conservation(&space, &inj.matrix(&t_complex)?)?;
            let up = creation(&space, &inj.vector(&complex_vector(&spec.tuple.u, root))?)?;
            let down = annihilation(&space, &inj.vector(&complex_vector(&spec.tuple.v, root))?)?;
            let drift = FockOperator::scalar(&space, C64::new(h * spec.tuple.lambda, 0.0));
            FockOperator::sum(&[&lam, &up, &down, &drift])
        })
        .collect()
}

/// `k_1 = t lambda`, `k_n = t <v, T^(n-2) u>` for `n >= 2`, tagged `flavor`.
pub fn tuple_cumulants(
    tuple: &GeneratorTuple,
    t: f64,
    flavor: Flavor,
    order: usize,
) -> Result<CumulantSequence> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("time {t} must be nonnegative")));
    }
    let mut values = Vec::with_capacity(order);
    if order >= 1 {
        values.push(t * tuple.lambda);
    }
    let mut krylov = tuple.u.clone();
    for _ in 2..=order {
        values.push(t * tuple.v.dot(&krylov));
        krylov = &tuple.t * krylov;
    }
    CumulantSequence::new(flavor, values)
}

/// Compresses the tuple to the smallest `T`-invariant subspace containing
/// `u` and `v`. The result has the same cumulants.
pub fn minimal_tuple(tuple: &GeneratorTuple) -> GeneratorTuple {
    let d = tuple.dim();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut pending: VecDeque<DVector<f64>> = VecDeque::from([tuple.u.clone(), tuple.v.clone()]);
    while let Some(candidate) = pending.pop_front() {
        if basis.len() == d {
            break;
        }
        let norm = candidate.norm();
        if norm == 0.0 {
            continue;
        }
        let mut r = candidate;
        // Two passes of classical Gram-Schmidt.
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn > KRYLOV_RANK_TOL * norm {
            let q = r / rn;
            pending.push_back(&tuple.t * &q);
            basis.push(q);
        }
    }
    let k = basis.len();
    let q = if k == 0 {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&basis)
    };
    let qt = q.transpose();
    GeneratorTuple {
        t: &qt * &tuple.t * &q,
        u: &qt * &tuple.u,
        v: &qt * &tuple.v,
        lambda: tuple.lambda,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TupleClass {
    Gaussian,
    /// `u = T omega` and `lambda = <omega, T omega>`.
    CompoundPoisson { omega: DVector<f64> },
    General,
}

impl TupleClass {
    pub fn name(&self) -> &'static str {
        match self {
            TupleClass::Gaussian => "gaussian",
            TupleClass::CompoundPoisson { .. } => "compound-poisson",
            TupleClass::General => "general",
        }
    }
}

/// Moore-Penrose pseudo-inverse of a real matrix with singular values below
/// `PINV_CUTOFF * sigma_max` discarded; also returns the projection onto the
/// retained column space.
fn pinv_and_range(t: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = t.nrows();
    if d == 0 {
        return (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
    }
    let svd = SVD::new(t.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let u = svd.u.as_ref().expect("computed U");
    let v_t = svd.v_t.as_ref().expect("computed V^T");
    let mut pinv = DMatrix::zeros(d, d);
    let mut range = DMatrix::zeros(d, d);
    if sigma_max == 0.0 {
        return (pinv, range);
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > PINV_CUTOFF * sigma_max {
            let uk = u.column(k);
            let vk = v_t.row(k).transpose();
            pinv += (&vk * uk.transpose()) / s;
            range += &uk * uk.transpose();
        }
    }
    (pinv, range)
}

/// Gaussian if the minimal tuple has `T = 0`, compound Poisson if the
/// least-squares `omega` with `T omega = u` satisfies both defining
/// equations, otherwise general. Requires a symmetric tuple.
pub fn classify(tuple: &GeneratorTuple) -> Result<TupleClass> {
    tuple.require_symmetric()?;
    let minimal = minimal_tuple(tuple);
    if minimal.dim() == 0 || minimal.t.amax() <= ZERO_OPERATOR_TOL {
        return Ok(TupleClass::Gaussian);
    }
    let (pinv, _) = pinv_and_range(&tuple.t);
    let omega = &pinv * &tuple.u;
    let t_omega = &tuple.t * &omega;
    let residual = (&t_omega - &tuple.u).norm();
    let energy = omega.dot(&t_omega);
    let solves = residual <= COMPOUND_POISSON_TOL * (1.0 + tuple.u.norm());
    let drift_matches =
        (tuple.lambda - energy).abs() <= COMPOUND_POISSON_TOL * (1.0 + tuple.lambda.abs());
    if solves && drift_matches {
        Ok(TupleClass::CompoundPoisson { omega })
    } else {
        Ok(TupleClass::General)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItoLevySplit {
    pub gaussian: GeneratorTuple,
    pub jump: GeneratorTuple,
    /// Whether `u_1` lies in the image of `T`. Always true in finite
    /// dimension, where the image is closed.
    pub exact: bool,
}

/// Splits a symmetric tuple into a Gaussian part and a compound-Poisson
/// jump part: `u = u_0 + u_1` with `u_0` in `ker T`, `u_1` in `im T`,
/// `T omega = u_1`; Gaussian `(span u_0, 0, u_0, lambda - <omega, T omega>)`
/// and jump `(k, T, u_1, <omega, T omega>)`. The cumulants of the parts add
/// up to those of the input.
pub fn ito_levy_split(tuple: &GeneratorTuple) -> Result<ItoLevySplit> {
    tuple.require_symmetric()?;
    let (pinv, range) = pinv_and_range(&tuple.t);
    let u1 = &range * &tuple.u;
    let u0 = &tuple.u - &u1;
    let omega = &pinv * &u1;
    let energy = omega.dot(&(&tuple.t * &omega));
    let u0_norm = u0.norm();
    let gaussian = if u0_norm > 0.0 {
        GeneratorTuple::symmetric(
            DMatrix::zeros(1, 1),
            DVector::from_element(1, u0_norm),
            tuple.lambda - energy,
        )?
    } else {
        GeneratorTuple::drift(tuple.lambda - energy)
    };
    let jump = GeneratorTuple::symmetric(tuple.t.clone(), u1, energy)?;
    Ok(ItoLevySplit {
        gaussian,
        jump,
        exact: true,
    })
}
