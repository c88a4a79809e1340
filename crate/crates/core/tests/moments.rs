mod common;

use ncp::moments::*;
use ncp::partitions::{
    enumerate_interval_partitions, enumerate_noncrossing_partitions, enumerate_set_partitions, Partition,
};
use proptest::prelude::*;

/// `m_n = sum over partitions of product of block cumulants`, summed over
/// the partition lattice of the flavor.
fn partition_sum(kappa: &[f64], flavor: Flavor) -> Vec<f64> {
    (1..=kappa.len())
        .map(|n| {
            let parts: Vec<Partition> = match flavor {
                Flavor::Classical => enumerate_set_partitions(n),
                Flavor::Free => enumerate_noncrossing_partitions(n),
                Flavor::Boolean => enumerate_interval_partitions(n),
            }
            .unwrap();
            parts
                .iter()
                .map(|p| p.block_sizes().map(|s| kappa[s - 1]).product::<f64>())
                .sum()
        })
        .collect()
}

fn sequence(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 1..=max_len)
}

fn flavor() -> impl Strategy<Value = Flavor> {
    prop::sample::select(Flavor::ALL.to_vec())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    common::max_rel_diff(a, b) <= tol
}

#[test]
fn known_cumulants() {
    // Standard Gaussian: classical cumulants (0, 1, 0, 0, 0, 0).
    let gauss = MomentSequence::new(vec![0.0, 1.0, 0.0, 3.0, 0.0, 15.0]).unwrap();
    let k = moments_to_cumulants(&gauss, Flavor::Classical).unwrap();
    assert!(close(k.values(), &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1e-12));
    // Standard semicircle: free cumulants (0, 1, 0, 0).
    let semi = MomentSequence::new(vec![0.0, 1.0, 0.0, 2.0]).unwrap();
    let k = moments_to_cumulants(&semi, Flavor::Free).unwrap();
    assert!(close(k.values(), &[0.0, 1.0, 0.0, 0.0], 1e-12));
    // Bernoulli +-1: boolean cumulants (0, 1, 0, 0).
    let bern = MomentSequence::new(vec![0.0, 1.0, 0.0, 1.0]).unwrap();
    let k = moments_to_cumulants(&bern, Flavor::Boolean).unwrap();
    assert!(close(k.values(), &[0.0, 1.0, 0.0, 0.0], 1e-12));
}

#[test]
fn boolean_convolution_of_bernoulli() {
    // Boolean cumulants add: (0, 2, 0, 0) gives m_4 = 2 * 2 = 4 via interval pairings.
    let bern = MomentSequence::new(vec![0.0, 1.0, 0.0, 1.0]).unwrap();
    let m = convolve(&bern, &bern, Flavor::Boolean).unwrap();
    assert!(close(m.values(), &[0.0, 2.0, 0.0, 4.0], 1e-12));
}

#[test]
fn json_shape() {
    let k = CumulantSequence::new(Flavor::Free, vec![1.0, 2.0]).unwrap();
    let text = serde_json::to_string(&k).unwrap();
    assert_eq!(text, r#"{"order":2,"flavor":"free","values":[1.0,2.0]}"#);
    let back: CumulantSequence = serde_json::from_str(&text).unwrap();
    assert_eq!(back, k);
    assert!(serde_json::from_str::<MomentSequence>(r#"{"order":3,"values":[1.0]}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_matches_partition_sum(kappa in sequence(8), f in flavor()) {
        let seq = CumulantSequence::new(f, kappa.clone()).unwrap();
        let fast = cumulants_to_moments(&seq).unwrap();
        prop_assert!(close(fast.values(), &partition_sum(&kappa, f), 1e-9));
    }

    #[test]
    fn round_trip(m in sequence(8), f in flavor()) {
        let seq = MomentSequence::new(m.clone()).unwrap();
        let back = cumulants_to_moments(&moments_to_cumulants(&seq, f).unwrap()).unwrap();
        prop_assert!(close(back.values(), &m, 1e-10));
    }

    #[test]
    fn convolution_commutes_and_associates(
        a in sequence(6), b in sequence(6), c in sequence(6), f in flavor()
    ) {
        let n = a.len().min(b.len()).min(c.len());
        let [a, b, c] = [&a, &b, &c].map(|v| MomentSequence::new(v[..n].to_vec()).unwrap());
        let ab = convolve(&a, &b, f).unwrap();
        prop_assert!(close(ab.values(), convolve(&b, &a, f).unwrap().values(), 1e-9));
        let left = convolve(&ab, &c, f).unwrap();
        let right = convolve(&a, &convolve(&b, &c, f).unwrap(), f).unwrap();
        prop_assert!(close(left.values(), right.values(), 1e-9));
    }

    #[test]
    fn low_cumulants_are_flavor_independent(m in sequence(8)) {
        let seq = MomentSequence::new(m).unwrap();
        let ks: Vec<Vec<f64>> = Flavor::ALL
            .iter()
            .map(|&f| moments_to_cumulants(&seq, f).unwrap().values().to_vec())
            .collect();
        for k in &ks[1..] {
            for i in 0..seq.order().min(2) {
                prop_assert!((k[i] - ks[0][i]).abs() <= 1e-12 * ks[0][i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn bercovici_pata_keeps_mean_and_variance(m in sequence(8)) {
        let seq = MomentSequence::new(m).unwrap();
        let image = bercovici_pata(&seq).unwrap();
        // Equal up to the rounding of m_2 - m_1^2 + m_1^2.
        for i in 0..seq.order().min(2) {
            prop_assert!((image.values()[i] - seq.values()[i]).abs() <= 1e-14 * seq.values()[i].abs().max(1.0));
        }
    }

    #[test]
    fn homomorphism_on_discrete_laws(
        atoms1 in prop::collection::vec((-2.0f64..2.0, 0.1f64..1.0), 1..4),
        atoms2 in prop::collection::vec((-2.0f64..2.0, 0.1f64..1.0), 1..4),
        order in 1usize..=8,
    ) {
        let m1 = MomentSequence::of_atoms(&atoms1, order).unwrap();
        let m2 = MomentSequence::of_atoms(&atoms2, order).unwrap();
        prop_assert!(m1.is_realizable() && m2.is_realizable());
        prop_assert!(is_homomorphism_check(&m1, &m2).unwrap());
    }
}
