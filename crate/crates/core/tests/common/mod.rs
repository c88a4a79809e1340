//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ncp::levy::GeneratorTuple;
use rand::Rng;

pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Bell numbers `B_0..=B_n` from `B_{n+1} = sum_k C(n, k) B_k`.
pub fn bell(n: usize) -> Vec<u64> {
    let mut b = vec![1u64];
    for m in 0..n as u64 {
        b.push((0..=m).map(|k| binomial(m, k) * b[k as usize]).sum());
    }
    b
}

/// Catalan numbers `C_0..=C_n` from `C(2n, n) / (n + 1)`.
pub fn catalan(n: usize) -> Vec<u64> {
    (0..=n as u64).map(|k| binomial(2 * k, k) / (k + 1)).collect()
}

/// Integer partitions of `n` as multiplicity vectors `k[j]` = number of
/// parts equal to `j` (index 0 unused).
pub fn integer_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            cur[part] += 1;
            rec(rest - part, part, cur, out);
            cur[part] -= 1;
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut vec![0; n + 1], &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Complete Bell polynomial `B_n(k_1, ..., k_n)`: the `n`-th moment of a law
/// with classical cumulants `k`, from the Faa di Bruno expansion of
/// `exp(sum_j k_j z^j / j!)`.
pub fn complete_bell(kappa: &[f64], n: usize) -> f64 {
    integer_partitions(n)
        .iter()
        .map(|mult| {
            let mut term = factorial(n);
            for (j, &k) in mult.iter().enumerate().skip(1) {
                if k > 0 {
                    term *= kappa[j - 1].powi(k as i32) / (factorial(k) * factorial(j).powi(k as i32));
                }
            }
            term
        })
        .sum()
}

pub fn random_symmetric_matrix(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let x = rng.random_range(-1.0..=1.0);
            t[(i, j)] = x;
            t[(j, i)] = x;
        }
    }
    t
}

/// Symmetric tuple with entries in `[-1, 1]`, `d` in `1..=3`.
pub fn random_symmetric_tuple(rng: &mut impl Rng) -> GeneratorTuple {
    let d = rng.random_range(1..=3);
    let t = random_symmetric_matrix(rng, d);
    let u = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
    GeneratorTuple::symmetric(t, u, rng.random_range(-1.0..=1.0)).unwrap()
}

/// Symmetric tuple whose `T` has a kernel, so that `u` has a Gaussian part.
pub fn random_degenerate_tuple(rng: &mut impl Rng) -> GeneratorTuple {
    let d = rng.random_range(2..=3);
    let rank = rng.random_range(0..d);
    let mut t = DMatrix::zeros(d, d);
    for _ in 0..rank {
        let w = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
        t += rng.random_range(-1.0..=1.0) * &w * w.transpose();
    }
    let u = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
    GeneratorTuple::symmetric(t, u, rng.random_range(-1.0..=1.0)).unwrap()
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
