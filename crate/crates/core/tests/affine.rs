use std::sync::Arc;

use nalgebra::DMatrix;
use ncp::affine::*;
use ncp::fock::{annihilation, conservation, creation, FockOperator, FockSpace};
use ncp::C64;
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Entries are multiples of 1/4 in [-1, 1], so sums and products of a few
/// of them are exact in floating point.
fn dyadic() -> impl Strategy<Value = f64> + Clone {
    (-4i32..=4).prop_map(|k| k as f64 / 4.0)
}

fn any_complex() -> impl Strategy<Value = C64> + Clone {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

#[derive(Debug, Clone)]
struct Parts {
    a_scalar: C64,
    a_lambda: Vec<C64>,
    u: Vec<C64>,
    b_lambda: Vec<C64>,
    b_scalar: f64,
}

fn parts(entry: impl Strategy<Value = C64> + Clone) -> impl Strategy<Value = Parts> {
    (
        entry.clone(),
        prop::collection::vec(entry.clone(), 4),
        prop::collection::vec(entry.clone(), 2),
        prop::collection::vec(entry, 4),
        -1.0f64..1.0,
    )
        .prop_map(|(a_scalar, a_lambda, u, b_lambda, b_scalar)| Parts {
            a_scalar,
            a_lambda,
            u,
            b_lambda,
            b_scalar,
        })
}

fn increment(space: &Arc<FockSpace>, p: &Parts, s: f64, t: f64) -> AffineIncrementFree {
    let a = FockOperator::scalar(space, p.a_scalar)
        .plus(&conservation(space, &DMatrix::from_vec(2, 2, p.a_lambda.clone())).unwrap())
        .unwrap();
    let h = DMatrix::from_vec(2, 2, p.b_lambda.clone());
    let herm = &h + h.adjoint();
    let b = FockOperator::sum(&[
        &creation(space, &p.u).unwrap(),
        &annihilation(space, &p.u).unwrap(),
        &conservation(space, &herm).unwrap(),
        &FockOperator::scalar(space, c(p.b_scalar.round())),
    ])
    .unwrap();
    AffineIncrementFree::new(a, b, s, t).unwrap()
}

fn catalan(n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * 2.0 * (2 * k + 1) as f64 / (k + 2) as f64)
}

#[test]
fn gamma_one_is_exact_for_every_step_count() {
    let t = 0.7;
    for steps in [1, 3, 4, 8, 16] {
        let m = azema_free(c(1.0), t, steps, 8, 8).unwrap();
        for (k, &got) in m.values().iter().enumerate() {
            let n = k + 1;
            let expect = if n % 2 == 0 { catalan(n / 2) * t.powi(n as i32 / 2) } else { 0.0 };
            assert!((got - expect).abs() <= 1e-10, "N = {steps}, order {n}");
        }
    }
}

#[test]
fn increment_property_report_examples() {
    assert!(increment_properties_check(&AzemaFamily::constant(c(1.0), 4, 4)).unwrap().passed());
    assert!(increment_properties_check(&IdentityFamily).unwrap().passed());
    let inhomogeneous = AzemaFamily::time_dependent(|s| C64::new(0.5 + s, 0.0), 4, 4);
    let report = increment_properties_check(&inhomogeneous).unwrap();
    let stationarity = report.properties.iter().find(|p| p.name == "stationarity").unwrap();
    assert!(!stationarity.passed && stationarity.max_deviation > 1e-3);
}

#[test]
fn azema_increments_have_positive_a() {
    for gamma in [C64::new(0.5, 0.0), C64::new(-0.3, 0.9), C64::new(0.0, 0.0)] {
        let inc = azema_increment(&|_| gamma, 0.0, 1.0, 3, 4).unwrap();
        assert!(min_eigenvalue_of_a(&inc).unwrap() >= -1e-12);
    }
}

/// Moments of `(A, B)` for a classical random pair, one atom per joint value.
fn joint_moment(atoms: &[(f64, f64, f64)], word: &[AffineLetter]) -> f64 {
    let mass: f64 = atoms.iter().map(|a| a.2).sum();
    atoms
        .iter()
        .map(|&(a, b, w)| {
            w * word
                .iter()
                .map(|l| match l {
                    AffineLetter::A => a,
                    AffineLetter::B => b,
                })
                .product::<f64>()
        })
        .sum::<f64>()
        / mass
}

fn affine_words(max_len: usize) -> Vec<Vec<AffineLetter>> {
    let mut out = vec![];
    for len in 1..=max_len {
        for bits in 0..1usize << len {
            out.push(
                (0..len)
                    .map(|i| if bits >> i & 1 == 1 { AffineLetter::B } else { AffineLetter::A })
                    .collect(),
            );
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn composition_associates(p1 in parts(any_complex()), p2 in parts(any_complex()), p3 in parts(any_complex())) {
        let space = FockSpace::new(2, 3).unwrap();
        let (i1, i2, i3) = (increment(&space, &p1, 0.0, 1.0), increment(&space, &p2, 1.0, 2.0), increment(&space, &p3, 2.0, 4.0));
        let left = compose_free(&compose_free(&i1, &i2).unwrap(), &i3).unwrap();
        let right = compose_free(&i1, &compose_free(&i2, &i3).unwrap()).unwrap();
        prop_assert!(left.a().matrix().unwrap().max_abs_diff(&right.a().matrix().unwrap()) <= 1e-12);
        prop_assert!(left.b().matrix().unwrap().max_abs_diff(&right.b().matrix().unwrap()) <= 1e-12);
        prop_assert_eq!(left.interval(), (0.0, 4.0));
        prop_assert!(min_eigenvalue_of_a(&left).unwrap() >= -1e-12);
    }

    #[test]
    fn composition_keeps_b_symmetric(
        p1 in parts(dyadic().prop_map(c)),
        p2 in parts((dyadic(), dyadic()).prop_map(|(a, b)| C64::new(a, b))),
    ) {
        let space = FockSpace::new(2, 3).unwrap();
        let composite = compose_free(&increment(&space, &p1, 0.0, 1.0), &increment(&space, &p2, 1.0, 2.0)).unwrap();
        let b = composite.b().matrix().unwrap();
        prop_assert_eq!(b.max_abs_diff(&b.adjoint()), 0.0);
    }

    #[test]
    fn moments_depend_on_modulus_of_gamma(r in 0.0f64..1.5, theta in 0.0f64..std::f64::consts::TAU) {
        let a = azema_free(c(r), 1.0, 6, 6, 6).unwrap();
        let b = azema_free(C64::from_polar(r, theta), 1.0, 6, 6, 6).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    /// Tensor composition against the composite classical pair
    /// `(A2 A1, A2 B1 + B2)` of independent pairs.
    #[test]
    fn tensor_composition_matches_product_law(
        first in prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5, 0.1f64..1.0), 1..=3),
        second in prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5, 0.1f64..1.0), 1..=3),
    ) {
        let inc1 = AffineIncrementTensor::from_joint_atoms(&first, 0.0, 1.0, 8).unwrap();
        let inc2 = AffineIncrementTensor::from_joint_atoms(&second, 1.0, 2.0, 8).unwrap();
        let mut product = Vec::new();
        for &(a1, b1, w1) in &first {
            for &(a2, b2, w2) in &second {
                product.push((a2 * a1, a2 * b1 + b2, w1 * w2));
            }
        }
        for w in affine_words(4) {
            let got = compose_tensor_moments(&w, &inc1, &inc2).unwrap();
            let expect = joint_moment(&product, &w);
            prop_assert!((got - c(expect)).norm() <= 1e-12 * expect.abs().max(1.0), "{:?}", w);
        }
    }
}

#[test]
fn identity_increments_are_neutral() {
    let space = FockSpace::new(2, 3).unwrap();
    let p = Parts {
        a_scalar: c(0.5),
        a_lambda: vec![c(0.25), C64::new(0.0, 0.5), c(-0.5), c(1.0)],
        u: vec![c(1.0), C64::new(0.0, -0.5)],
        b_lambda: vec![c(0.5), c(0.0), C64::new(0.25, 0.25), c(-1.0)],
        b_scalar: 1.0,
    };
    let x = increment(&space, &p, 1.0, 2.0);
    let left = compose_free(&AffineIncrementFree::identity(&space, 0.0, 1.0).unwrap(), &x).unwrap();
    let right = compose_free(&x, &AffineIncrementFree::identity(&space, 2.0, 3.0).unwrap()).unwrap();
    for y in [&left, &right] {
        assert!(y.a().matrix().unwrap().max_abs_diff(&x.a().matrix().unwrap()) <= 1e-15);
        assert!(y.b().matrix().unwrap().max_abs_diff(&x.b().matrix().unwrap()) <= 1e-15);
    }

    let atoms = [(0.5, -1.0, 1.0), (2.0, 0.25, 3.0)];
    let inc = AffineIncrementTensor::from_joint_atoms(&atoms, 1.0, 2.0, 8).unwrap();
    let before = AffineIncrementTensor::identity(0.0, 1.0, 8).unwrap();
    let after = AffineIncrementTensor::identity(2.0, 3.0, 8).unwrap();
    for w in affine_words(4) {
        let expect = joint_moment(&atoms, &w);
        for got in [
            compose_tensor_moments(&w, &before, &inc).unwrap(),
            compose_tensor_moments(&w, &inc, &after).unwrap(),
        ] {
            assert!((got - c(expect)).norm() <= 1e-12 * expect.abs().max(1.0));
        }
    }
}
