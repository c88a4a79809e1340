use nalgebra::DMatrix;
use ncp::fock::*;
use ncp::{Error, C64};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn vector(d: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(), d)
}

fn matrix(d: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec(complex(), d * d).prop_map(move |v| DMatrix::from_vec(d, d, v))
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[test]
fn semicircle_moments_are_catalan() {
    let space = FockSpace::new(3, 10).unwrap();
    let norm = (1.0f64 + 4.0 + 4.0).sqrt();
    let u: Vec<C64> = [1.0, -2.0, 2.0].iter().map(|&x| c(x / norm)).collect();
    let s = creation(&space, &u).unwrap().plus(&annihilation(&space, &u).unwrap()).unwrap();
    let m = vacuum_moments(&s, 10).unwrap();
    let catalan = [1.0, 2.0, 5.0, 14.0, 42.0];
    for n in 1..=5 {
        assert!((m[2 * n - 1] - c(catalan[n - 1])).norm() < 1e-12);
        assert!(m[2 * n - 2].norm() < 1e-12);
    }
}

#[test]
fn real_inputs_give_real_outputs() {
    let (space, inj) = free_embedding(&[2, 1], 6).unwrap();
    let x = DMatrix::from_row_slice(2, 2, &[c(0.3), c(-1.0), c(0.5), c(0.2)]);
    let a = FockOperator::sum(&[
        &creation(&space, &inj[0].vector(&[c(1.0), c(0.4)]).unwrap()).unwrap(),
        &annihilation(&space, &inj[0].vector(&[c(-0.2), c(0.9)]).unwrap()).unwrap(),
        &conservation(&space, &inj[0].matrix(&x).unwrap()).unwrap(),
    ])
    .unwrap();
    let b = creation(&space, &inj[1].unit(0)).unwrap().plus(&annihilation(&space, &inj[1].unit(0)).unwrap()).unwrap();
    for word in [vec![&a, &b, &a, &b, &a, &a], vec![&b, &a, &a, &b]] {
        assert!(vacuum_expectation(&word).unwrap().im.abs() < 1e-12);
    }
}

#[test]
fn sparse_and_dense_agree() {
    // 1 + 8 + 64 + 512 words: above the dense threshold.
    let space = FockSpace::new(8, 3).unwrap();
    let u: Vec<C64> = (0..8).map(|i| C64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.2)).collect();
    let up = creation(&space, &u).unwrap();
    let m = up.matrix().unwrap();
    assert!(matches!(m, OperatorMatrix::Sparse(_)));
    let down = annihilation(&space, &u).unwrap().matrix().unwrap();
    assert_eq!(down.max_abs_diff(&m.adjoint()), 0.0);
    let small = FockSpace::new(2, 3).unwrap();
    assert!(matches!(creation(&small, &[c(1.0), c(0.0)]).unwrap().matrix().unwrap(), OperatorMatrix::Dense(_)));
}

#[test]
fn depth_guard_and_caps() {
    let space = FockSpace::new(1, 2).unwrap();
    let up = creation(&space, &[c(1.0)]).unwrap();
    let down = annihilation(&space, &[c(1.0)]).unwrap();
    assert!(matches!(
        vacuum_expectation(&[&down, &down, &up, &up, &up]),
        Err(Error::DepthExceeded { .. })
    ));
    assert!(matches!(FockSpace::bounded(10, 6), Err(Error::SizeLimit { .. })));
    let other = FockSpace::new(2, 2).unwrap();
    let foreign = creation(&other, &[c(1.0), c(0.0)]).unwrap();
    assert_eq!(vacuum_expectation(&[&down, &foreign]).unwrap_err(), Error::MixedSpace);
}

#[test]
fn free_embedding_examples() {
    let (space, inj) = free_embedding(&[1, 1], 4).unwrap();
    let s: Vec<FockOperator> = inj
        .iter()
        .map(|b| creation(&space, &b.unit(0)).unwrap().plus(&annihilation(&space, &b.unit(0)).unwrap()).unwrap())
        .collect();
    assert_eq!(vacuum_expectation(&[&s[0], &s[1], &s[0], &s[1]]).unwrap(), c(0.0));
    assert_eq!(vacuum_expectation(&[&s[0], &s[0], &s[1], &s[1]]).unwrap(), c(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn creation_and_annihilation_are_adjoint(u in vector(3)) {
        let space = FockSpace::new(3, 3).unwrap();
        let up = creation(&space, &u).unwrap().matrix().unwrap();
        let down = annihilation(&space, &u).unwrap().matrix().unwrap();
        prop_assert_eq!(down.max_abs_diff(&up.adjoint()), 0.0);
    }

    #[test]
    fn conservation_adjoint(x in matrix(2)) {
        let space = FockSpace::new(2, 4).unwrap();
        let lam = conservation(&space, &x).unwrap().matrix().unwrap();
        let lam_star = conservation(&space, &x.adjoint()).unwrap().matrix().unwrap();
        prop_assert_eq!(lam.adjoint().max_abs_diff(&lam_star), 0.0);
    }

    #[test]
    fn truncation_is_exact(
        u in vector(2), v in vector(2), x in matrix(2), z in complex(),
        kinds in prop::collection::vec(0usize..4, 1..=6),
    ) {
        let eval = |depth: usize| {
            let space = FockSpace::new(2, depth).unwrap();
            let ops = [
                creation(&space, &u).unwrap(),
                annihilation(&space, &v).unwrap(),
                conservation(&space, &x).unwrap(),
                FockOperator::scalar(&space, z),
            ];
            let word: Vec<&FockOperator> = kinds.iter().map(|&k| &ops[k]).collect();
            vacuum_expectation(&word).unwrap()
        };
        let r = kinds.len();
        prop_assert!((eval(r) - eval(r + 2)).norm() <= 1e-12);
    }

    /// Alternating products of centered elements from distinct blocks vanish.
    #[test]
    fn free_blocks_are_free(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2),
        len in 2usize..=6,
        start in 0usize..2,
    ) {
        let (space, inj) = free_embedding(&[1, 1], 12).unwrap();
        let centered: Vec<FockOperator> = inj
            .iter()
            .zip(&coeffs)
            .map(|(b, &(p, q, r))| {
                let e = b.unit(0);
                let x = FockOperator::sum(&[
                    &creation(&space, &e).unwrap().scale(c(p)),
                    &annihilation(&space, &e).unwrap().scale(c(p)),
                    &conservation(&space, &b.matrix(&DMatrix::from_element(1, 1, c(q))).unwrap()).unwrap(),
                    &FockOperator::scalar(&space, c(r)),
                ])
                .unwrap();
                let power = x.power(2);
                let mean = vacuum_expectation(&[&power]).unwrap();
                power.minus(&FockOperator::scalar(&space, mean)).unwrap()
            })
            .collect();
        let word: Vec<&FockOperator> = (0..len).map(|i| &centered[(start + i) % 2]).collect();
        prop_assert!(vacuum_expectation(&word).unwrap().norm() <= 1e-12);
    }
}
