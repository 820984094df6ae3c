mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use ris_eem::numerics::{hermitian_inverse, rank_one_inverse_update, weighted_inverse_trace};
use ris_eem::Error;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn inverse_residual(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let a = positive_definite(&mut r, n);
        let inv = hermitian_inverse(&a).unwrap();
        let res = max_abs(&(&a * &inv - DMatrix::<Complex64>::identity(n, n)));
        prop_assert!(res <= 1e-8 * (1.0 + max_abs(&a)));
    }

    #[test]
    fn trace_monotone_in_each_power(seed in any::<u64>(), k in 1usize..=4, extra in 0usize..=4, bump in 0.0f64..2.0) {
        let mut r = rng(seed);
        let h = matrix(&mut r, k, k + extra);
        let p = powers(&mut r, k);
        let base = weighted_inverse_trace(&h, &p).unwrap();
        let i = r.random_range(0..k);
        let mut q = p.clone();
        q[i] += bump;
        prop_assert!(weighted_inverse_trace(&h, &q).unwrap() >= base * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sherman_morrison_matches_reinversion(seed in any::<u64>(), n in 3usize..=8) {
        let mut r = rng(seed);
        let a = positive_definite(&mut r, n);
        let u = vector(&mut r, n) * Complex64::new(0.5, 0.0);
        let v = vector(&mut r, n) * Complex64::new(0.5, 0.0);
        let ainv = hermitian_inverse(&a).unwrap();
        match rank_one_inverse_update(&ainv, &u, &v) {
            Ok(updated) => {
                let moved = &a + &u * v.adjoint();
                let direct = moved.clone().try_inverse().unwrap();
                let rel = (&updated - &direct).norm() / direct.norm();
                prop_assert!(rel <= 1e-8, "relative error {rel}");
            }
            Err(Error::DegenerateUpdate(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn nearly_singular_update_is_flagged() {
    let n = 4;
    let a = DMatrix::<Complex64>::identity(n, n);
    let mut u = nalgebra::DVector::zeros(n);
    u[0] = Complex64::new(1.0, 0.0);
    let v = -u.clone();
    assert!(matches!(rank_one_inverse_update(&a, &u, &v), Err(Error::DegenerateUpdate(_))));
}

#[test]
fn non_square_trace_input_rejected() {
    let mut r = rng(1);
    let h = matrix(&mut r, 3, 2);
    assert!(weighted_inverse_trace(&h, &[1.0; 3]).is_err());
    assert!(weighted_inverse_trace(&matrix(&mut r, 2, 3), &[1.0]).is_err());
}
