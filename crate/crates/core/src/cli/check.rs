//! Cross-module oracle battery run by the `check` command.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::JobError;
use crate::affine::azema_free;
use crate::fock::{annihilation, conservation, creation, free_embedding, vacuum_expectation, vacuum_moments};
use crate::fock::FockOperator;
use crate::levy::{realize_process, tuple_cumulants, GeneratorTuple, IncrementSpec};
use crate::mixed::{free_mixed_moment, MarginalLaw, Word};
use crate::moments::{cumulants_to_moments, Flavor};
use crate::partitions::{
    enumerate_interval_partitions, enumerate_noncrossing_partitions, enumerate_set_partitions,
};
use crate::{Result, C64};

pub const CHECK_GROUPS: [&str; 4] = ["partitions", "levy", "mixed", "azema"];

/// Added to every library-side value when the suite runs perturbed.
const PERTURBATION: f64 = 1e-6;

const SEED: u64 = 0x6e63_7063;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub group: String,
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Tally {
    group: &'static str,
    name: &'static str,
    tolerance: f64,
    shift: f64,
    max: f64,
}

impl Tally {
    fn new(group: &'static str, name: &'static str, tolerance: f64, perturb: bool) -> Self {
        Self {
            group,
            name,
            tolerance,
            shift: if perturb { PERTURBATION } else { 0.0 },
            max: 0.0,
        }
    }

    /// Records `|computed - expected|`, scaled by `max(1, |expected|)`.
    fn compare(&mut self, computed: f64, expected: f64) {
        let dev = ((computed + self.shift) - expected).abs() / expected.abs().max(1.0);
        self.max = if dev.is_nan() { f64::INFINITY } else { self.max.max(dev) };
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            group: self.group.into(),
            name: self.name.into(),
            passed: self.max <= self.tolerance,
            max_deviation: self.max,
            tolerance: self.tolerance,
        }
    }
}

/// Runs every check group, or only `filter`.
pub fn check_suite(filter: Option<&str>, perturb: bool) -> Result<CheckReport, JobError> {
    if let Some(f) = filter {
        if !CHECK_GROUPS.contains(&f) {
            return Err(JobError::schema(
                "payload.filter",
                format!("unknown check group {f:?}, expected one of {CHECK_GROUPS:?}"),
            ));
        }
    }
    let wanted = |g: &str| filter.is_none_or(|f| f == g);
    let mut checks = Vec::new();
    if wanted("partitions") {
        checks.extend(partition_counts(perturb)?);
    }
    if wanted("levy") {
        checks.push(levy_vs_fock(perturb)?);
    }
    if wanted("mixed") {
        checks.push(mixed_vs_fock(perturb)?);
    }
    if wanted("azema") {
        checks.push(azema_brownian(perturb)?);
    }
    Ok(CheckReport { checks })
}

fn bell_numbers(n: usize) -> Vec<u64> {
    // Bell triangle.
    let mut out = vec![1u64];
    let mut row = vec![1u64];
    for _ in 1..=n {
        let mut next = vec![*row.last().expect("nonempty")];
        for &x in &row {
            next.push(next.last().expect("nonempty") + x);
        }
        out.push(next[0]);
        row = next;
    }
    out
}

fn catalan_numbers(n: usize) -> Vec<u64> {
    let mut c = vec![1u64];
    for k in 1..=n {
        c.push((0..k).map(|i| c[i] * c[k - 1 - i]).sum());
    }
    c
}

fn partition_counts(perturb: bool) -> Result<Vec<CheckResult>> {
    let bell = bell_numbers(10);
    let catalan = catalan_numbers(12);
    let mut set = Tally::new("partitions", "bell", 0.0, perturb);
    for n in 1..=10 {
        set.compare(enumerate_set_partitions(n)?.len() as f64, bell[n] as f64);
    }
    let mut nc = Tally::new("partitions", "catalan", 0.0, perturb);
    for n in 1..=12 {
        nc.compare(enumerate_noncrossing_partitions(n)?.len() as f64, catalan[n] as f64);
    }
    let mut interval = Tally::new("partitions", "compositions", 0.0, perturb);
    for n in 1..=16 {
        interval.compare(enumerate_interval_partitions(n)?.len() as f64, (1u64 << (n - 1)) as f64);
    }
    Ok(vec![set.finish(), nc.finish(), interval.finish()])
}

fn random_symmetric_tuple(rng: &mut impl Rng, d: usize) -> Result<GeneratorTuple> {
    let mut t = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let x = rng.random_range(-1.0..=1.0);
            t[(i, j)] = x;
            t[(j, i)] = x;
        }
    }
    let u = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
    GeneratorTuple::symmetric(t, u, rng.random_range(-1.0..=1.0))
}

fn levy_vs_fock(perturb: bool) -> Result<CheckResult> {
    const ORDER: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut tally = Tally::new("levy", "realization-vs-cumulants", 1e-9, perturb);
    for _ in 0..10 {
        let d = rng.random_range(1..=3);
        let tuple = random_symmetric_tuple(&mut rng, d)?;
        for t in [0.5, 1.0, 2.0] {
            let ops = realize_process(&IncrementSpec::new(vec![(0.0, t)], tuple.clone())?, ORDER)?;
            let fock = vacuum_moments(&ops[0], ORDER)?;
            let expected = cumulants_to_moments(&tuple_cumulants(&tuple, t, Flavor::Free, ORDER)?)?;
            for (a, b) in fock.iter().zip(expected.values()) {
                tally.compare(a.re, *b);
            }
        }
    }
    Ok(tally.finish())
}

fn mixed_vs_fock(perturb: bool) -> Result<CheckResult> {
    const MAX_LEN: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (space, inj) = free_embedding(&[1, 1], MAX_LEN)?;
    let mut ops = Vec::new();
    let mut laws = Vec::new();
    for (family, block) in [(1usize, &inj[0]), (2, &inj[1])] {
        let e = block.unit(0);
        let lam = rng.random_range(-1.0..=1.0);
        let shift = rng.random_range(-1.0..=1.0);
        let x = FockOperator::sum(&[
            &creation(&space, &e)?,
            &annihilation(&space, &e)?,
            &conservation(&space, &block.matrix(&DMatrix::from_element(1, 1, C64::new(lam, 0.0)))?)?,
            &FockOperator::scalar(&space, C64::new(shift, 0.0)),
        ])?;
        laws.push(MarginalLaw::of_operators(family, std::slice::from_ref(&x), MAX_LEN)?);
        ops.push(x);
    }
    let mut tally = Tally::new("mixed", "free-moment-vs-fock", 1e-9, perturb);
    for _ in 0..50 {
        let len = rng.random_range(1..=MAX_LEN);
        let families: Vec<usize> = (0..len).map(|_| rng.random_range(1..=2)).collect();
        let word: Vec<&FockOperator> = families.iter().map(|&f| &ops[f - 1]).collect();
        let expected = vacuum_expectation(&word)?;
        let got = free_mixed_moment(&Word::from_families(&families), &laws)?;
        tally.compare(got.re, expected.re);
        tally.compare(got.im, expected.im);
    }
    Ok(tally.finish())
}

fn azema_brownian(perturb: bool) -> Result<CheckResult> {
    const ORDER: usize = 6;
    let t = 1.5;
    let catalan = catalan_numbers(ORDER / 2);
    let mut tally = Tally::new("azema", "gamma-one-catalan", 1e-10, perturb);
    for steps in [1, 4, 8] {
        let m = azema_free(C64::new(1.0, 0.0), t, steps, ORDER, ORDER)?;
        for (k, &got) in m.values().iter().enumerate() {
            let order = k + 1;
            let expected = if order % 2 == 0 {
                catalan[order / 2] as f64 * t.powi(order as i32 / 2)
            } else {
                0.0
            };
            tally.compare(got, expected);
        }
    }
    Ok(tally.finish())
}
