//! Lévy processes on the dual affine group, described through increments.
//!
//! An increment over `[s, t)` is a pair of operators. Increments over
//! abutting intervals compose like the affine group law
//! `(a1, b1)(a2, b2) = (a1 a2, a1 b2 + b1)`:
//!
//! * free case: `a_su = a_tu a_st`, `B_su = a_tu B_st a_tu* + B_tu`, with
//!   `A_su = a_su a_su*` positive;
//! * tensor case: `A_su = A_tu A_st`, `B_su = A_tu B_st + B_tu`.
//!
//! The free composition uses `B_tu` as the second term. Writing `B_st` there
//! instead breaks associativity and does not reduce to free Brownian motion
//! for `gamma = 1`; the associativity tests pin this down.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::fock::{annihilation, conservation, creation, max_basis, vacuum_expectation, vacuum_moments};
use crate::fock::{FockOperator, FockSpace};
use crate::mixed::{tensor_mixed_moment_with_cap, Letter, MarginalLaw, Word, DEFAULT_WORD_CAP};
use crate::moments::MomentSequence;
use crate::{Error, Result, C64};

/// Default number of atoms of the Azéma discretization.
pub const DEFAULT_STEPS: usize = 16;

/// Required shrink factor of successive differences in the convergence check.
pub const CONVERGENCE_FACTOR: f64 = 1.5;

/// Differences below this are treated as already converged.
pub const CONVERGED_TOL: f64 = 1e-12;

const ABUT_TOL: f64 = 1e-12;

/// Free increment `(a_st, B_st)` over `[s, t)`.
#[derive(Debug, Clone)]
pub struct AffineIncrementFree {
    a: FockOperator,
    b: FockOperator,
    s: f64,
    t: f64,
}

impl AffineIncrementFree {
    pub fn new(a: FockOperator, b: FockOperator, s: f64, t: f64) -> Result<Self> {
        if a.space() != b.space() {
            return Err(Error::MixedSpace);
        }
        if !(s <= t) {
            return Err(Error::Intervals(format!("[{s}, {t}) is reversed")));
        }
        Ok(Self { a, b, s, t })
    }

    /// `a = Id`, `B = 0`.
    pub fn identity(space: &Arc<FockSpace>, s: f64, t: f64) -> Result<Self> {
        Self::new(FockOperator::identity(space), FockOperator::zero(space), s, t)
    }

    pub fn a(&self) -> &FockOperator {
        &self.a
    }

    pub fn b(&self) -> &FockOperator {
        &self.b
    }

    /// `A = a a*`.
    pub fn big_a(&self) -> FockOperator {
        FockOperator::product(&[&self.a, &self.a.adjoint()]).expect("same space")
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.s, self.t)
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        self.a.space()
    }
}

fn check_abutting(t: f64, next_s: f64) -> Result<()> {
    if (t - next_s).abs() > ABUT_TOL * t.abs().max(1.0) {
        return Err(Error::Intervals(format!(
            "increments do not abut: first ends at {t}, second starts at {next_s}"
        )));
    }
    Ok(())
}

/// Composes `(a_st, B_st)` with the following increment `(a_tu, B_tu)`.
pub fn compose_free(st: &AffineIncrementFree, tu: &AffineIncrementFree) -> Result<AffineIncrementFree> {
    if st.space() != tu.space() {
        return Err(Error::MixedSpace);
    }
    check_abutting(st.t, tu.s)?;
    let a = FockOperator::product(&[&tu.a, &st.a])?;
    let conjugated = FockOperator::product(&[&tu.a, &st.b, &tu.a.adjoint()])?;
    let b = conjugated.plus(&tu.b)?;
    AffineIncrementFree::new(a, b, st.s, tu.t)
}

/// Smallest eigenvalue of `A = a a*`, from the materialized matrix.
pub fn min_eigenvalue_of_a(inc: &AffineIncrementFree) -> Result<f64> {
    let m = inc.big_a().matrix()?.to_dense();
    let eig = SymmetricEigen::new(m);
    Ok(eig.eigenvalues.min())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AffineLetter {
    A,
    B,
}

impl AffineLetter {
    fn generator(self) -> usize {
        match self {
            AffineLetter::A => 0,
            AffineLetter::B => 1,
        }
    }
}

/// Tensor increment over `[s, t)` given by the joint law of `(A_st, B_st)`
/// (generator 0 is `A`, generator 1 is `B`).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineIncrementTensor {
    law: MarginalLaw,
    s: f64,
    t: f64,
}

impl AffineIncrementTensor {
    pub fn new(law: MarginalLaw, s: f64, t: f64) -> Result<Self> {
        if !(s <= t) {
            return Err(Error::Intervals(format!("[{s}, {t}) is reversed")));
        }
        Ok(Self { law, s, t })
    }

    /// `A = 1`, `B = 0`, tabulated for words up to `max_len`.
    pub fn identity(s: f64, t: f64, max_len: usize) -> Result<Self> {
        Self::from_joint_atoms(&[(1.0, 0.0, 1.0)], s, t, max_len)
    }

    /// Law of a classical random pair `(A, B)` taking value `(a_i, b_i)`
    /// with probability proportional to `w_i`.
    pub fn from_joint_atoms(atoms: &[(f64, f64, f64)], s: f64, t: f64, max_len: usize) -> Result<Self> {
        let mass: f64 = atoms.iter().map(|a| a.2).sum();
        if atoms.is_empty() || atoms.iter().any(|a| a.2 < 0.0) || mass <= 0.0 {
            return Err(Error::Shape("joint atoms need nonnegative weights with positive mass".into()));
        }
        let mut law = MarginalLaw::new(0);
        for len in 1..=max_len {
            for bits in 0..(1usize << len) {
                let word: Vec<usize> = (0..len).map(|i| (bits >> i) & 1).collect();
                let n_b = word.iter().filter(|&&g| g == 1).count() as i32;
                let n_a = len as i32 - n_b;
                let value: f64 = atoms
                    .iter()
                    .map(|&(a, b, w)| w * a.powi(n_a) * b.powi(n_b))
                    .sum::<f64>()
                    / mass;
                law.insert(word, C64::new(value, 0.0))?;
            }
        }
        Self::new(law, s, t)
    }

    pub fn law(&self) -> &MarginalLaw {
        &self.law
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.s, self.t)
    }
}

/// Moment of a word in `(A_su, B_su)` for the composite of tensor independent
/// increments over `[s, t)` and `[t, u)`: each `A` becomes `A_tu A_st`, each
/// `B` becomes `A_tu B_st + B_tu`, and the expanded words are evaluated by
/// tensor independence.
pub fn compose_tensor_moments(
    w: &[AffineLetter],
    inc_st: &AffineIncrementTensor,
    inc_tu: &AffineIncrementTensor,
) -> Result<C64> {
    if w.len() > DEFAULT_WORD_CAP {
        return Err(Error::SizeLimit {
            what: "word length",
            got: w.len(),
            limit: DEFAULT_WORD_CAP,
        });
    }
    check_abutting(inc_st.t, inc_tu.s)?;
    const EARLY: usize = 1;
    const LATE: usize = 2;
    let laws = [inc_st.law.relabeled(EARLY), inc_tu.law.relabeled(LATE)];
    let a = AffineLetter::A.generator();
    let b = AffineLetter::B.generator();
    let mut terms: Vec<Vec<Letter>> = vec![Vec::new()];
    for letter in w {
        match letter {
            AffineLetter::A => {
                for term in &mut terms {
                    term.extend([Letter::new(LATE, a), Letter::new(EARLY, a)]);
                }
            }
            AffineLetter::B => {
                let mut next = Vec::with_capacity(terms.len() * 2);
                for term in terms {
                    let mut conj = term.clone();
                    conj.extend([Letter::new(LATE, a), Letter::new(EARLY, b)]);
                    let mut plain = term;
                    plain.push(Letter::new(LATE, b));
                    next.push(conj);
                    next.push(plain);
                }
                terms = next;
            }
        }
    }
    let cap = 2 * w.len();
    terms
        .into_iter()
        .map(|t| tensor_mixed_moment_with_cap(&Word::new(t), &laws, cap))
        .sum()
}

/// Discretized free increment over `[s, s + h)`. The interval is cut into
/// `steps` atoms of length `dt`; atom `i` lives on its own one-particle slot
/// and contributes `a_i = Id + Lambda_i(gamma_i - 1)` and
/// `B_i = a+_i(sqrt(dt)) + a-_i(sqrt(dt))`, with `gamma_i` read off at the
/// start of the atom. Atoms are composed left to right.
pub fn azema_increment(
    gamma: &dyn Fn(f64) -> C64,
    s: f64,
    h: f64,
    steps: usize,
    depth: usize,
) -> Result<AffineIncrementFree> {
    if steps == 0 {
        return Err(Error::Shape("at least one time step is needed".into()));
    }
    if !(h > 0.0 && h.is_finite()) || !(s >= 0.0) {
        return Err(Error::Intervals(format!("[{s}, {}) is not a valid interval", s + h)));
    }
    let space = FockSpace::new(steps, depth)?;
    let dt = h / steps as f64;
    let root = C64::new(dt.sqrt(), 0.0);
    let mut acc: Option<AffineIncrementFree> = None;
    for i in 0..steps {
        let start = s + i as f64 * dt;
        let end = if i + 1 == steps { s + h } else { start + dt };
        let mut slot = DMatrix::zeros(steps, steps);
        slot[(i, i)] = gamma(start) - C64::new(1.0, 0.0);
        let a = FockOperator::identity(&space).plus(&conservation(&space, &slot)?)?;
        let mut e = vec![C64::default(); steps];
        e[i] = root;
        let b = creation(&space, &e)?.plus(&annihilation(&space, &e)?)?;
        let atom = AffineIncrementFree::new(a, b, start, end)?;
        acc = Some(match acc {
            None => atom,
            Some(prev) => compose_free(&prev, &atom)?,
        });
    }
    Ok(acc.expect("steps >= 1"))
}

/// Number of basis words with length at most `max_len` over `dim` letters.
fn words_up_to(dim: usize, max_len: usize) -> u128 {
    (0..=max_len as u32).map(|n| (dim as u128).pow(n)).sum()
}

/// Vacuum moments `m_1..m_maxOrder` of `B_{0,t}` for the free Azéma
/// martingale with parameter `gamma`, on `steps` atoms.
///
/// The full space over `steps` letters is never materialized: computing an
/// order-`k` vacuum moment only touches words of length `<= k / 2`, and that
/// count is what the basis cap limits.
pub fn azema_free(gamma: C64, t: f64, steps: usize, depth: usize, max_order: usize) -> Result<MomentSequence> {
    if max_order == 0 {
        return Err(Error::Shape("max order must be at least 1".into()));
    }
    if max_order > depth {
        return Err(Error::DepthExceeded {
            needed: max_order,
            depth,
        });
    }
    let touched = words_up_to(steps, max_order / 2);
    if touched > max_basis() as u128 {
        return Err(Error::SizeLimit {
            what: "reachable Fock basis size",
            got: usize::try_from(touched).unwrap_or(usize::MAX),
            limit: max_basis(),
        });
    }
    let inc = azema_increment(&|_| gamma, 0.0, t, steps, depth)?;
    let values = vacuum_moments(inc.b(), max_order)?
        .into_iter()
        .map(|z| z.re)
        .collect();
    MomentSequence::new(values)
}

/// Outputs of [`azema_free`] over a list of step counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub steps: Vec<usize>,
    pub moments: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    pub fn compute(gamma: C64, t: f64, steps: &[usize], depth: usize, max_order: usize) -> Result<Self> {
        let moments = steps
            .iter()
            .map(|&n| azema_free(gamma, t, n, depth, max_order).map(|m| m.values().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            steps: steps.to_vec(),
            moments,
        })
    }

    /// `|m_k(N_{j+1}) - m_k(N_j)|`, indexed `[j][k - 1]`.
    pub fn differences(&self) -> Vec<Vec<f64>> {
        self.moments
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).abs()).collect())
            .collect()
    }

    /// Every order's successive differences shrink by at least `factor`;
    /// differences that are already below [`CONVERGED_TOL`] must stay there.
    pub fn shrinks_by(&self, factor: f64) -> bool {
        let diffs = self.differences();
        diffs.windows(2).all(|pair| {
            pair[0].iter().zip(&pair[1]).all(|(&prev, &next)| {
                if prev <= CONVERGED_TOL {
                    next <= CONVERGED_TOL
                } else {
                    next <= prev / factor
                }
            })
        })
    }
}

/// A family of increments indexed by their interval.
pub trait IncrementFamily {
    fn increment(&self, s: f64, h: f64) -> Result<AffineIncrementFree>;
}

/// Free Azéma increments, possibly with a time-dependent parameter.
pub struct AzemaFamily {
    gamma: Box<dyn Fn(f64) -> C64 + Send + Sync>,
    steps: usize,
    depth: usize,
}

impl AzemaFamily {
    pub fn constant(gamma: C64, steps: usize, depth: usize) -> Self {
        Self::time_dependent(move |_| gamma, steps, depth)
    }

    /// `gamma(s)` is evaluated at the start of each atom.
    pub fn time_dependent(
        gamma: impl Fn(f64) -> C64 + Send + Sync + 'static,
        steps: usize,
        depth: usize,
    ) -> Self {
        Self {
            gamma: Box::new(gamma),
            steps,
            depth,
        }
    }
}

impl IncrementFamily for AzemaFamily {
    fn increment(&self, s: f64, h: f64) -> Result<AffineIncrementFree> {
        azema_increment(&*self.gamma, s, h, self.steps, self.depth)
    }
}

/// `a = Id`, `B = 0` on every interval.
pub struct IdentityFamily;

impl IncrementFamily for IdentityFamily {
    fn increment(&self, s: f64, h: f64) -> Result<AffineIncrementFree> {
        let space = FockSpace::new(1, 4)?;
        AffineIncrementFree::identity(&space, s, s + h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementReport {
    pub properties: Vec<PropertyResult>,
}

impl IncrementReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }
}

/// Word length probed by [`increment_properties_check`].
pub const PROPERTY_WORD_LEN: usize = 4;
pub const STATIONARITY_STARTS: [f64; 3] = [0.0, 1.0, 3.7];
pub const STATIONARITY_TOL: f64 = 1e-10;
pub const CONTINUITY_STEPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
pub const CONTINUITY_TOL: f64 = 1e-2;

fn all_affine_words(max_len: usize) -> Vec<Vec<AffineLetter>> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for bits in 0..(1usize << len) {
            out.push(
                (0..len)
                    .map(|i| if (bits >> i) & 1 == 1 { AffineLetter::B } else { AffineLetter::A })
                    .collect(),
            );
        }
    }
    out
}

/// Vacuum moment of a word in `A = a a*` and `B`.
pub fn free_increment_moment(inc: &AffineIncrementFree, w: &[AffineLetter]) -> Result<C64> {
    let big_a = inc.big_a();
    let ops: Vec<&FockOperator> = w
        .iter()
        .map(|l| match l {
            AffineLetter::A => &big_a,
            AffineLetter::B => inc.b(),
        })
        .collect();
    vacuum_expectation(&ops)
}

/// Checks stationarity (moments over `[s, s + 1)` do not depend on `s`) and
/// weak continuity (as `h -> 0`, words with a `B` tend to 0 and pure `A`
/// words tend to 1) on all words of length up to [`PROPERTY_WORD_LEN`].
pub fn increment_properties_check(family: &dyn IncrementFamily) -> Result<IncrementReport> {
    let words = all_affine_words(PROPERTY_WORD_LEN);
    let moments_at = |s: f64, h: f64| -> Result<Vec<C64>> {
        let inc = family.increment(s, h)?;
        words.iter().map(|w| free_increment_moment(&inc, w)).collect()
    };

    let reference = moments_at(STATIONARITY_STARTS[0], 1.0)?;
    let mut stationarity = 0.0f64;
    for &s in &STATIONARITY_STARTS[1..] {
        let other = moments_at(s, 1.0)?;
        for (a, b) in reference.iter().zip(&other) {
            stationarity = stationarity.max((a - b).norm());
        }
    }

    let limits: Vec<C64> = words
        .iter()
        .map(|w| {
            let pure_a = w.iter().all(|l| *l == AffineLetter::A);
            C64::new(if pure_a { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    let mut deviations = Vec::with_capacity(CONTINUITY_STEPS.len());
    for &h in &CONTINUITY_STEPS {
        let m = moments_at(0.0, h)?;
        let dev = m
            .iter()
            .zip(&limits)
            .map(|(x, l)| (x - l).norm())
            .fold(0.0, f64::max);
        deviations.push(dev);
    }
    let last = *deviations.last().expect("nonempty");
    let monotone = deviations.windows(2).all(|w| w[1] <= w[0] + CONVERGED_TOL);

    Ok(IncrementReport {
        properties: vec![
            PropertyResult {
                name: "stationarity".into(),
                passed: stationarity <= STATIONARITY_TOL,
                max_deviation: stationarity,
            },
            PropertyResult {
                name: "weak-continuity".into(),
                passed: monotone && last <= CONTINUITY_TOL,
                max_deviation: last,
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockVector;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn semicircle_increment(space: &Arc<FockSpace>, slot: usize, s: f64, t: f64) -> AffineIncrementFree {
        let mut e = vec![C64::default(); space.dim()];
        e[slot] = c((t - s).sqrt());
        let b = creation(space, &e).unwrap().plus(&annihilation(space, &e).unwrap()).unwrap();
        AffineIncrementFree::new(FockOperator::identity(space), b, s, t).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let space = FockSpace::new(2, 3).unwrap();
        let inc = semicircle_increment(&space, 0, 0.0, 1.0);
        let right = compose_free(&inc, &AffineIncrementFree::identity(&space, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!(right.b().matrix().unwrap(), inc.b().matrix().unwrap());
        assert_eq!(right.a().matrix().unwrap(), inc.a().matrix().unwrap());
        let left = compose_free(&AffineIncrementFree::identity(&space, -1.0, 0.0).unwrap(), &inc).unwrap();
        assert_eq!(left.b().matrix().unwrap(), inc.b().matrix().unwrap());
        assert_eq!(left.interval(), (-1.0, 1.0));
    }

    #[test]
    fn compose_errors() {
        let space = FockSpace::new(2, 3).unwrap();
        let i1 = semicircle_increment(&space, 0, 0.0, 1.0);
        let i2 = semicircle_increment(&space, 1, 1.5, 2.0);
        assert!(matches!(compose_free(&i1, &i2), Err(Error::Intervals(_))));
        let other = FockSpace::new(3, 3).unwrap();
        let i3 = AffineIncrementFree::identity(&other, 1.0, 2.0).unwrap();
        assert_eq!(compose_free(&i1, &i3).unwrap_err(), Error::MixedSpace);
    }

    #[test]
    fn tensor_composition_examples() {
        let (alpha, beta) = (0.8, 0.3);
        let mut law = MarginalLaw::new(0);
        law.insert(vec![0], c(alpha)).unwrap();
        law.insert(vec![1], c(beta)).unwrap();
        let st = AffineIncrementTensor::new(law.clone(), 0.0, 1.0).unwrap();
        let tu = AffineIncrementTensor::new(law, 1.0, 2.0).unwrap();
        let b = compose_tensor_moments(&[AffineLetter::B], &st, &tu).unwrap();
        assert!((b - c(alpha * beta + beta)).norm() < 1e-15);
        let a = compose_tensor_moments(&[AffineLetter::A], &st, &tu).unwrap();
        assert!((a - c(alpha * alpha)).norm() < 1e-15);
    }

    #[test]
    fn tensor_identity_increment() {
        let inc = AffineIncrementTensor::from_joint_atoms(&[(0.5, 1.0, 1.0), (2.0, -1.0, 3.0)], 0.0, 1.0, 6).unwrap();
        let id = AffineIncrementTensor::identity(1.0, 2.0, 6).unwrap();
        for w in all_affine_words(3) {
            let gens: Vec<usize> = w.iter().map(|l| l.generator()).collect();
            let expect = inc.law().get(&gens).unwrap();
            let got = compose_tensor_moments(&w, &inc, &id).unwrap();
            assert!((got - expect).norm() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn azema_gamma_one_is_free_brownian_motion() {
        for steps in [1, 3, 8] {
            let m = azema_free(c(1.0), 2.0, steps, 6, 6).unwrap();
            let expect = [0.0, 2.0, 0.0, 8.0, 0.0, 40.0];
            for (x, y) in m.values().iter().zip(expect) {
                assert!((x - y).abs() < 1e-10, "steps {steps}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn azema_fourth_moment_closed_form() {
        // m4 = t^2 + (t^2 / 2) (q (1 - 1/N) + 1 + 1/N) with q = |gamma|^2.
        let (t, gamma) = (1.5, C64::new(0.3, 0.4));
        let q = gamma.norm_sqr();
        for n in [2usize, 5, 9] {
            let m = azema_free(gamma, t, n, 4, 4).unwrap();
            let nf = n as f64;
            let expect = t * t + t * t / 2.0 * (q * (1.0 - 1.0 / nf) + 1.0 + 1.0 / nf);
            assert!((m.values()[3] - expect).abs() < 1e-12);
            assert!((m.values()[1] - t).abs() < 1e-12);
        }
    }

    #[test]
    fn azema_argument_errors() {
        assert!(matches!(azema_free(c(0.5), 1.0, 4, 4, 6), Err(Error::DepthExceeded { .. })));
        assert!(matches!(azema_free(c(0.5), 1.0, 2000, 6, 6), Err(Error::SizeLimit { .. })));
        assert!(azema_free(c(0.5), 1.0, 0, 4, 4).is_err());
    }

    #[test]
    fn azema_b_is_symmetric() {
        let inc = azema_increment(&|_| C64::new(0.2, -0.7), 0.0, 1.0, 3, 3).unwrap();
        let m = inc.b().matrix().unwrap();
        assert!(m.max_abs_diff(&m.adjoint()) < 1e-15);
        assert!(min_eigenvalue_of_a(&inc).unwrap() >= -1e-12);
        let v = inc.a().apply(&FockVector::vacuum(inc.space()));
        assert_eq!(v, FockVector::vacuum(inc.space()));
    }

    #[test]
    fn property_reports() {
        assert!(increment_properties_check(&AzemaFamily::constant(c(1.0), 4, 4)).unwrap().passed());
        assert!(increment_properties_check(&IdentityFamily).unwrap().passed());
        let drifting = AzemaFamily::time_dependent(|s| c(1.0 + s), 4, 4);
        let report = increment_properties_check(&drifting).unwrap();
        assert!(!report.properties[0].passed);
        assert!(report.properties[1].passed);
    }
}
