//! Dense complex linear algebra used by the beamforming stages.
//!
//! Everything here works on double-precision complex matrices. Inverses of
//! Gram matrices `H H^H` go through a Cholesky factorization with an explicit
//! pivot floor, and the phase optimizer keeps those inverses current through
//! Sherman-Morrison updates instead of refactoring after every element change.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative Hermitian defect accepted by [`hermitian_inverse`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Pivots below this fraction of the largest diagonal entry count as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;
/// Smallest admissible `|1 + v^H A^-1 u|` for a rank-one update.
pub const UPDATE_FLOOR: f64 = 1e-12;

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest element of `|A - A^H|`.
pub fn hermitian_defect(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn hermitian_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "hermitian_inverse needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let scale = max_abs(a);
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }

    let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(a[(i, i)].re));
    let threshold = PIVOT_FLOOR * max_diag;
    if max_diag <= 0.0 || !max_diag.is_finite() {
        return Err(Error::SingularMatrix { pivot: max_diag, threshold });
    }

    // Factor the exactly-Hermitian part so rounding in the input cannot tip
    // the factorization.
    let sym = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let chol = Cholesky::new(sym).ok_or(Error::SingularMatrix { pivot: 0.0, threshold })?;
    let l = chol.l_dirty();
    let min_pivot = (0..n).fold(f64::INFINITY, |m, i| m.min(l[(i, i)].norm_sqr()));
    if min_pivot < threshold {
        return Err(Error::SingularMatrix { pivot: min_pivot, threshold });
    }
    let inv = chol.inverse();
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularMatrix { pivot: min_pivot, threshold });
    }
    Ok(inv)
}

/// `(A + u v^H)^-1` from `A^-1` by the Sherman-Morrison formula.
pub fn rank_one_inverse_update(
    ainv: &ComplexMatrix,
    u: &ComplexVector,
    v: &ComplexVector,
) -> Result<ComplexMatrix> {
    let mut out = ainv.clone();
    rank_one_update_in_place(&mut out, u, v)?;
    Ok(out)
}

/// In-place form of [`rank_one_inverse_update`]. `ainv` is untouched on error.
pub fn rank_one_update_in_place(
    ainv: &mut ComplexMatrix,
    u: &ComplexVector,
    v: &ComplexVector,
) -> Result<()> {
    let n = ainv.nrows();
    if !ainv.is_square() || u.len() != n || v.len() != n {
        return Err(Error::Dimension(format!(
            "rank-one update of {}x{} inverse with vectors of length {} and {}",
            ainv.nrows(),
            ainv.ncols(),
            u.len(),
            v.len()
        )));
    }
    let ainv_u = &*ainv * u;
    // v^H A^-1 as a column: (A^-H v)
    let vh_ainv = ainv.ad_mul(v);
    let denom = Complex64::new(1.0, 0.0) + v.dotc(&ainv_u);
    if denom.norm() <= UPDATE_FLOOR {
        return Err(Error::DegenerateUpdate(denom.norm()));
    }
    let scale = -denom.inv();
    // A^-1 -= (A^-1 u)(v^H A^-1) / denom
    for j in 0..n {
        let row_j = vh_ainv[j].conj() * scale;
        if row_j == Complex64::new(0.0, 0.0) {
            continue;
        }
        for i in 0..n {
            ainv[(i, j)] += ainv_u[i] * row_j;
        }
    }
    Ok(())
}

/// `sum_k p_k [Ginv]_kk`, the real part of `Tr(Ginv diag(p))`.
pub fn diag_weighted_trace(ginv: &ComplexMatrix, p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(k, &pk)| pk * ginv[(k, k)].re).sum()
}

/// `Tr((H H^H)^-1 P)` for a diagonal power matrix `P = diag(p)`.
pub fn weighted_inverse_trace(h: &ComplexMatrix, p: &[f64]) -> Result<f64> {
    if p.len() != h.nrows() {
        return Err(Error::Dimension(format!(
            "{} powers for a channel with {} rows",
            p.len(),
            h.nrows()
        )));
    }
    if h.nrows() > h.ncols() {
        return Err(Error::RankDeficient);
    }
    let gram = h * h.adjoint();
    let ginv = hermitian_inverse(&gram)?;
    Ok(diag_weighted_trace(&ginv, p))
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn scalar_inverse() {
        let a = ComplexMatrix::from_element(1, 1, c(4.0));
        let inv = hermitian_inverse(&a).unwrap();
        assert!((inv[(0, 0)] - c(0.25)).norm() < 1e-15);
    }

    #[test]
    fn identity_inverse() {
        let id = ComplexMatrix::identity(3, 3);
        let inv = hermitian_inverse(&id).unwrap();
        assert!(max_abs(&(inv - &id)) < 1e-15);
    }

    #[test]
    fn random_gram_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 6, 6);
        let g = &x * x.adjoint() + ComplexMatrix::identity(6, 6);
        let inv = hermitian_inverse(&g).unwrap();
        assert!(residual_to_identity(&g, &inv) <= 1e-8 * (1.0 + max_abs(&g)));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = ComplexMatrix::identity(2, 2);
        a[(0, 1)] = c(0.5);
        assert!(matches!(hermitian_inverse(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn rejects_singular() {
        let v = ComplexMatrix::from_row_slice(1, 3, &[c(1.0), c(2.0), c(3.0)]);
        let g = v.adjoint() * &v; // rank one, 3x3
        assert!(matches!(hermitian_inverse(&g), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn zero_update_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 4, 4);
        let ainv = hermitian_inverse(&(&x * x.adjoint() + ComplexMatrix::identity(4, 4))).unwrap();
        let out = rank_one_inverse_update(&ainv, &ComplexVector::zeros(4), &random_vector(&mut rng, 4))
            .unwrap();
        assert!(max_abs(&(out - ainv)) < 1e-15);
    }

    #[test]
    fn diagonal_update() {
        let ainv = ComplexMatrix::identity(2, 2);
        let e1 = ComplexVector::from_vec(vec![c(1.0), c(0.0)]);
        let out = rank_one_inverse_update(&ainv, &e1, &e1).unwrap();
        assert!((out[(0, 0)] - c(0.5)).norm() < 1e-15);
        assert!((out[(1, 1)] - c(1.0)).norm() < 1e-15);
        assert!(out[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn degenerate_update_reported() {
        let ainv = ComplexMatrix::identity(2, 2);
        let e1 = ComplexVector::from_vec(vec![c(1.0), c(0.0)]);
        let neg = ComplexVector::from_vec(vec![c(-1.0), c(0.0)]);
        let mut target = ainv.clone();
        let err = rank_one_update_in_place(&mut target, &e1, &neg).unwrap_err();
        assert!(matches!(err, Error::DegenerateUpdate(_)));
        assert_eq!(target, ainv);
    }

    #[test]
    fn update_matches_full_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 5, 5);
        let a = &x * x.adjoint() + ComplexMatrix::identity(5, 5);
        let u = random_vector(&mut rng, 5);
        let ainv = hermitian_inverse(&a).unwrap();
        let updated = rank_one_inverse_update(&ainv, &u, &u).unwrap();
        let direct = hermitian_inverse(&(a + &u * u.adjoint())).unwrap();
        assert!((updated - &direct).norm() <= 1e-8 * direct.norm());
    }

    #[test]
    fn trace_single_user() {
        // ||H||^2 = 4, p = 4
        let h = ComplexMatrix::from_row_slice(1, 2, &[c(2.0), c(0.0)]);
        assert!((weighted_inverse_trace(&h, &[4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(weighted_inverse_trace(&h, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn trace_matches_explicit_zf() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_matrix(&mut rng, 3, 6);
        let p = [0.7_f64, 1.3, 2.1];
        // V = H^H (HH^H)^-1 P^{1/2}, built with a generic LU inverse.
        let ginv = (&h * h.adjoint()).try_inverse().unwrap();
        let sqrt_p = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
            3,
            p.iter().map(|&x| c(x.sqrt())),
        ));
        let v = h.adjoint() * ginv * sqrt_p;
        let direct = (v.adjoint() * &v).trace().re;
        let got = weighted_inverse_trace(&h, &p).unwrap();
        assert!((got - direct).abs() <= 1e-9 * direct);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn inverse_residual_bound(seed in any::<u64>(), n in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_matrix(&mut rng, n, n + 2);
            let a = &x * x.adjoint() + ComplexMatrix::identity(n, n) * c(0.1);
            let inv = hermitian_inverse(&a).unwrap();
            prop_assert!(residual_to_identity(&a, &inv) <= 1e-8 * (1.0 + max_abs(&a)));
        }

        #[test]
        fn trace_monotone_in_power(seed in any::<u64>(), k in 1usize..5, bump in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_matrix(&mut rng, k, k + 3);
            let mut p: Vec<f64> = (0..k).map(|i| 0.5 + i as f64).collect();
            let base = weighted_inverse_trace(&h, &p).unwrap();
            let idx = (seed as usize) % k;
            p[idx] += bump;
            let bumped = weighted_inverse_trace(&h, &p).unwrap();
            prop_assert!(bumped >= base - 1e-12 * base.abs());
        }
    }
}
