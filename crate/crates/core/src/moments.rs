//! Moment and cumulant sequences of laws on the real line.
//!
//! Three cumulant flavors are supported. Each is defined by the partition sum
//! `m_n = sum over pi of prod over blocks B of k_{|B|}` where `pi` ranges over
//! all set partitions (classical), non-crossing partitions (free) or interval
//! partitions (boolean). The transforms here do not enumerate partitions;
//! they use the equivalent first-block recursions, which are triangular in
//! `n` and can be solved for `k_n` directly.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::partitions::{MAX_INTERVAL_N, MAX_NONCROSSING_N, MAX_SET_PARTITION_N};
use crate::{Error, Result};

/// Tolerance of [`is_homomorphism_check`], relative to `max(1, |value|)`.
pub const HOMOMORPHISM_TOL: f64 = 1e-9;

/// Relative eigenvalue threshold for the Hankel positivity test.
pub const HANKEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Set partitions; linearizes the usual (tensor) convolution.
    #[serde(alias = "tensor")]
    Classical,
    /// Non-crossing partitions; linearizes free additive convolution.
    Free,
    /// Interval partitions; linearizes boolean convolution.
    Boolean,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::Classical, Flavor::Free, Flavor::Boolean];

    /// Largest order accepted for this flavor.
    pub fn max_order(self) -> usize {
        match self {
            Flavor::Classical => MAX_SET_PARTITION_N,
            Flavor::Free => MAX_NONCROSSING_N,
            Flavor::Boolean => MAX_INTERVAL_N,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flavor::Classical => "classical",
            Flavor::Free => "free",
            Flavor::Boolean => "boolean",
        }
    }

    fn check_order(self, order: usize) -> Result<()> {
        if order > self.max_order() {
            return Err(Error::SizeLimit {
                what: "moment order",
                got: order,
                limit: self.max_order(),
            });
        }
        Ok(())
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" | "tensor" => Ok(Flavor::Classical),
            "free" => Ok(Flavor::Free),
            "boolean" => Ok(Flavor::Boolean),
            other => Err(Error::Shape(format!("unknown flavor {other:?}"))),
        }
    }
}

/// Moments `m_1..m_N` of a law; `m_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr", into = "SequenceRepr")]
pub struct MomentSequence {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SequenceRepr {
    order: usize,
    values: Vec<f64>,
}

impl TryFrom<SequenceRepr> for MomentSequence {
    type Error = Error;

    fn try_from(repr: SequenceRepr) -> Result<Self> {
        if repr.order != repr.values.len() {
            return Err(Error::Shape(format!(
                "order {} does not match {} values",
                repr.order,
                repr.values.len()
            )));
        }
        MomentSequence::new(repr.values)
    }
}

impl From<MomentSequence> for SequenceRepr {
    fn from(m: MomentSequence) -> Self {
        SequenceRepr {
            order: m.order(),
            values: m.values,
        }
    }
}

impl MomentSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape("moment sequence needs order >= 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("moment sequence has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    /// Like [`MomentSequence::new`] but also requires every leading Hankel
    /// matrix to be positive semidefinite.
    pub fn realizable(values: Vec<f64>) -> Result<Self> {
        let m = Self::new(values)?;
        m.check_hankel()?;
        Ok(m)
    }

    /// Moments of the discrete law `sum_i w_i delta_{x_i}`. Weights are
    /// normalized to total mass one.
    pub fn of_atoms(atoms: &[(f64, f64)], order: usize) -> Result<Self> {
        let mass: f64 = atoms.iter().map(|&(_, w)| w).sum();
        if atoms.is_empty() || atoms.iter().any(|&(_, w)| w < 0.0) || mass <= 0.0 {
            return Err(Error::Shape("atoms need nonnegative weights with positive mass".into()));
        }
        let values = (1..=order as i32)
            .map(|k| atoms.iter().map(|&(x, w)| w * x.powi(k)).sum::<f64>() / mass)
            .collect();
        Self::new(values)
    }

    pub fn point_mass(c: f64, order: usize) -> Result<Self> {
        Self::new((1..=order as i32).map(|k| c.powi(k)).collect())
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// `m_1..m_N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `m_k` for `0 <= k <= N`.
    pub fn moment(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// `m_0..m_N`.
    pub fn with_unit(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.values.iter().copied()).collect()
    }

    /// Truncates to the first `order` moments.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order == 0 || order > self.order() {
            return Err(Error::Shape(format!(
                "cannot truncate order {} to {order}",
                self.order()
            )));
        }
        Ok(Self {
            values: self.values[..order].to_vec(),
        })
    }

    /// Hankel matrix `[m_{i+j}]` for `0 <= i, j <= k`.
    pub fn hankel(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(k + 1, k + 1, |i, j| self.moment(i + j))
    }

    /// Checks every leading Hankel matrix `H_k`, `2k <= N`, for positive
    /// semidefiniteness with eigenvalue threshold `-1e-9 * (1 + trace)`.
    pub fn check_hankel(&self) -> Result<()> {
        for k in 0..=self.order() / 2 {
            let h = self.hankel(k);
            let threshold = -HANKEL_TOL * (1.0 + h.trace().abs());
            let eig = SymmetricEigen::new(h);
            if eig.eigenvalues.iter().any(|&l| l < threshold) {
                return Err(Error::NotRealizable(k + 1));
            }
        }
        Ok(())
    }

    pub fn is_realizable(&self) -> bool {
        self.check_hankel().is_ok()
    }
}

/// Cumulants `k_1..k_N` of one flavor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CumulantRepr", into = "CumulantRepr")]
pub struct CumulantSequence {
    flavor: Flavor,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CumulantRepr {
    order: usize,
    flavor: Flavor,
    values: Vec<f64>,
}

impl TryFrom<CumulantRepr> for CumulantSequence {
    type Error = Error;

    fn try_from(repr: CumulantRepr) -> Result<Self> {
        if repr.order != repr.values.len() {
            return Err(Error::Shape(format!(
                "order {} does not match {} values",
                repr.order,
                repr.values.len()
            )));
        }
        CumulantSequence::new(repr.flavor, repr.values)
    }
}

impl From<CumulantSequence> for CumulantRepr {
    fn from(k: CumulantSequence) -> Self {
        CumulantRepr {
            order: k.order(),
            flavor: k.flavor,
            values: k.values,
        }
    }
}

impl CumulantSequence {
    pub fn new(flavor: Flavor, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape("cumulant sequence needs order >= 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("cumulant sequence has non-finite entries".into()));
        }
        Ok(Self { flavor, values })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same numbers under a different flavor tag.
    pub fn reinterpret(&self, flavor: Flavor) -> Self {
        Self {
            flavor,
            values: self.values.clone(),
        }
    }

    /// Entrywise sum; flavors and orders must agree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.flavor != other.flavor {
            return Err(Error::Shape("cannot add cumulants of different flavors".into()));
        }
        if self.order() != other.order() {
            return Err(Error::Shape(format!(
                "orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            flavor: self.flavor,
            values,
        })
    }
}

/// Binomial coefficients `C(n, k)` for `n <= order`.
fn binomials(order: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for n in 1..=order {
        let prev = &rows[n - 1];
        let row = (0..=n)
            .map(|k| {
                let left = if k > 0 { prev[k - 1] } else { 0.0 };
                let right = if k < n { prev[k] } else { 0.0 };
                left + right
            })
            .collect();
        rows.push(row);
    }
    rows
}

/// Coefficients `[z^j] M(z)^s` for `j + s <= order`, where `M(z) = sum m_i z^i`
/// with `m_0 = 1`. Only `m_0..m_{order-1}` are read.
fn free_power_table(m: &[f64], order: usize) -> Vec<Vec<f64>> {
    // powers[s][j] = [z^j] M^s, needed for j <= order - s.
    let mut powers = vec![vec![0.0; order + 1]; order + 1];
    powers[0][0] = 1.0;
    for s in 1..=order {
        let max_j = order - s;
        for j in 0..=max_j {
            let mut acc = 0.0;
            for i in 0..=j {
                acc += m[i] * powers[s - 1][j - i];
            }
            powers[s][j] = acc;
        }
    }
    powers
}

/// Contribution of all terms with first-block size `< n` to `m_n`, given
/// `m_0..m_{n-1}` and `k_1..k_{n-1}` (entries of `kappa` at index `k - 1`).
fn lower_terms(flavor: Flavor, n: usize, m: &[f64], kappa: &[f64], binom: &[Vec<f64>]) -> f64 {
    match flavor {
        Flavor::Classical => (1..n)
            .map(|k| binom[n - 1][k - 1] * kappa[k - 1] * m[n - k])
            .sum(),
        Flavor::Boolean => (1..n).map(|k| kappa[k - 1] * m[n - k]).sum(),
        Flavor::Free => {
            let powers = free_power_table(&m[..n], n);
            (1..n).map(|s| kappa[s - 1] * powers[s][n - s]).sum()
        }
    }
}

/// Solves the moment-cumulant relation of the given flavor for the cumulants.
pub fn moments_to_cumulants(m: &MomentSequence, flavor: Flavor) -> Result<CumulantSequence> {
    let order = m.order();
    flavor.check_order(order)?;
    let full = m.with_unit();
    let binom = binomials(order);
    let mut kappa = Vec::with_capacity(order);
    for n in 1..=order {
        // The term with one block of size n has coefficient 1 in every flavor.
        let k_n = full[n] - lower_terms(flavor, n, &full, &kappa, &binom);
        kappa.push(k_n);
    }
    CumulantSequence::new(flavor, kappa)
}

pub fn cumulants_to_moments(k: &CumulantSequence) -> Result<MomentSequence> {
    let order = k.order();
    k.flavor.check_order(order)?;
    let binom = binomials(order);
    let mut full = Vec::with_capacity(order + 1);
    full.push(1.0);
    for n in 1..=order {
        let m_n = k.values[n - 1] + lower_terms(k.flavor, n, &full, &k.values, &binom);
        full.push(m_n);
    }
    full.remove(0);
    MomentSequence::new(full)
}

/// Additive convolution: the law of `X1 + X2` for independent `X1`, `X2` in
/// the sense matching `flavor` (classical = tensor independence).
pub fn convolve(m1: &MomentSequence, m2: &MomentSequence, flavor: Flavor) -> Result<MomentSequence> {
    if m1.order() != m2.order() {
        return Err(Error::Shape(format!(
            "orders differ: {} vs {}",
            m1.order(),
            m2.order()
        )));
    }
    let k1 = moments_to_cumulants(m1, flavor)?;
    let k2 = moments_to_cumulants(m2, flavor)?;
    cumulants_to_moments(&k1.add(&k2)?)
}

/// Bercovici–Pata map: classical cumulants are taken verbatim as free
/// cumulants. Infinite divisibility of the input is not checked.
pub fn bercovici_pata(m: &MomentSequence) -> Result<MomentSequence> {
    let classical = moments_to_cumulants(m, Flavor::Classical)?;
    cumulants_to_moments(&classical.reinterpret(Flavor::Free))
}

/// Checks that the Bercovici–Pata map turns classical convolution into free
/// convolution on this pair.
pub fn is_homomorphism_check(m1: &MomentSequence, m2: &MomentSequence) -> Result<bool> {
    let lhs = bercovici_pata(&convolve(m1, m2, Flavor::Classical)?)?;
    let rhs = convolve(&bercovici_pata(m1)?, &bercovici_pata(m2)?, Flavor::Free)?;
    Ok(lhs
        .values()
        .iter()
        .zip(rhs.values())
        .all(|(a, b)| (a - b).abs() <= HOMOMORPHISM_TOL * b.abs().max(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: &[f64]) -> MomentSequence {
        MomentSequence::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn poisson_classical_cumulants_are_one() {
        let k = moments_to_cumulants(&ms(&[1.0, 2.0, 5.0, 15.0]), Flavor::Classical).unwrap();
        assert!(close(k.values(), &[1.0; 4], 1e-12));
    }

    #[test]
    fn semicircle_free_cumulants() {
        let k = moments_to_cumulants(&ms(&[0.0, 1.0, 0.0, 2.0]), Flavor::Free).unwrap();
        assert!(close(k.values(), &[0.0, 1.0, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn zero_moments_zero_cumulants() {
        for f in Flavor::ALL {
            let k = moments_to_cumulants(&ms(&[0.0; 4]), f).unwrap();
            assert_eq!(k.values(), &[0.0; 4]);
        }
    }

    #[test]
    fn pairing_counts() {
        let k = CumulantSequence::new(Flavor::Free, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(close(cumulants_to_moments(&k).unwrap().values(), &[0.0, 1.0, 0.0, 2.0, 0.0, 5.0], 1e-12));
        let k = k.reinterpret(Flavor::Classical);
        assert!(close(cumulants_to_moments(&k).unwrap().values(), &[0.0, 1.0, 0.0, 3.0, 0.0, 15.0], 1e-12));
    }

    #[test]
    fn first_cumulant_only_gives_powers() {
        for f in Flavor::ALL {
            let k = CumulantSequence::new(f, vec![1.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
            let m = cumulants_to_moments(&k).unwrap();
            let expect: Vec<f64> = (1..=5).map(|n| 1.5f64.powi(n)).collect();
            assert!(close(m.values(), &expect, 1e-12));
        }
    }

    #[test]
    fn convolution_examples() {
        let s = ms(&[0.0, 1.0, 0.0, 2.0]);
        let out = convolve(&s, &s, Flavor::Free).unwrap();
        assert!(close(out.values(), &[0.0, 2.0, 0.0, 8.0], 1e-12));

        let p = ms(&[1.0, 2.0, 5.0, 15.0]);
        let out = convolve(&p, &p, Flavor::Classical).unwrap();
        assert!(close(out.values(), &[2.0, 6.0, 22.0, 94.0], 1e-12));

        let zero = ms(&[0.0; 4]);
        for f in Flavor::ALL {
            assert!(close(convolve(&p, &zero, f).unwrap().values(), p.values(), 1e-12));
        }
        assert!(matches!(convolve(&p, &ms(&[0.0]), Flavor::Free), Err(Error::Shape(_))));
    }

    #[test]
    fn bercovici_pata_examples() {
        let out = bercovici_pata(&ms(&[1.0, 2.0, 5.0, 15.0])).unwrap();
        assert!(close(out.values(), &[1.0, 2.0, 5.0, 14.0], 1e-12));
        let out = bercovici_pata(&ms(&[0.0, 1.0, 0.0, 3.0])).unwrap();
        assert!(close(out.values(), &[0.0, 1.0, 0.0, 2.0], 1e-12));
        let c = 0.7;
        let pm = MomentSequence::point_mass(c, 4).unwrap();
        assert!(close(bercovici_pata(&pm).unwrap().values(), pm.values(), 1e-12));
    }

    #[test]
    fn homomorphism_examples() {
        let poisson = ms(&[1.0, 2.0, 5.0, 15.0]);
        let gauss = ms(&[0.0, 1.0, 0.0, 3.0]);
        let delta = ms(&[0.0; 4]);
        assert!(is_homomorphism_check(&poisson, &poisson).unwrap());
        assert!(is_homomorphism_check(&gauss, &poisson).unwrap());
        assert!(is_homomorphism_check(&delta, &gauss).unwrap());
    }

    #[test]
    fn order_caps() {
        let m = ms(&[0.0; 13]);
        assert!(matches!(
            moments_to_cumulants(&m, Flavor::Classical),
            Err(Error::SizeLimit { limit: 12, .. })
        ));
        assert!(moments_to_cumulants(&m, Flavor::Free).is_ok());
        assert!(moments_to_cumulants(&m, Flavor::Boolean).is_ok());
        assert!(MomentSequence::new(vec![]).is_err());
    }

    #[test]
    fn hankel_realizability() {
        assert!(ms(&[0.0, 1.0, 0.0, 3.0]).is_realizable());
        // Variance would be negative.
        assert_eq!(
            MomentSequence::realizable(vec![1.0, 0.5]).unwrap_err(),
            Error::NotRealizable(2)
        );
        let atoms = MomentSequence::of_atoms(&[(-1.0, 1.0), (2.0, 3.0)], 8).unwrap();
        assert!(atoms.is_realizable());
    }

    #[test]
    fn json_shape() {
        let k = CumulantSequence::new(Flavor::Free, vec![0.0, 1.0]).unwrap();
        let text = serde_json::to_string(&k).unwrap();
        assert_eq!(text, r#"{"order":2,"flavor":"free","values":[0.0,1.0]}"#);
        let back: CumulantSequence = serde_json::from_str(&text).unwrap();
        assert_eq!(back, k);
        assert!(serde_json::from_str::<MomentSequence>(r#"{"order":3,"values":[1.0]}"#).is_err());
    }
}
