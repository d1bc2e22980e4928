use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError};
use crate::flop_model::{FlopLedger, FlopPair};

const PIVOT_RELATIVE_TOLERANCE: f64 = 1e-13;
const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Smallest pivot accepted for `g`: `1e-13 · max|g_ij|`.
pub fn pivot_tolerance(g: &ComplexMatrix) -> f64 {
    PIVOT_RELATIVE_TOLERANCE * g.max_abs()
}

fn check_hermitian(g: &ComplexMatrix) -> Result<(), LinalgError> {
    if !g.is_square() {
        return Err(LinalgError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    if !g.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let scale = g.max_abs().max(f64::MIN_POSITIVE);
    let n = g.rows();
    for i in 0..n {
        for j in i..n {
            if (g[(i, j)] - g[(j, i)].conj()).norm() > HERMITIAN_TOLERANCE * scale {
                return Err(LinalgError::NotHermitian);
            }
        }
    }
    Ok(())
}

/// Lower-triangular `L` with `L Lᴴ = G` and a real positive diagonal.
///
/// Charged `Σ_j [j + (N-1-j)(j+1)]` multiplications and
/// `Σ_j [j + (N-1-j)j]` additions (leading term `N³/6` each), plus `N`
/// reciprocals and `N` square roots.
pub fn cholesky(g: &ComplexMatrix, ledger: &mut FlopLedger) -> Result<ComplexMatrix, LinalgError> {
    check_hermitian(g)?;
    let n = g.rows();
    let tol = pivot_tolerance(g);
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let pivot = g[(j, j)].re - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if pivot.is_nan() || pivot <= tol {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        let inv = 1.0 / ljj;
        for i in j + 1..n {
            let acc: Complex64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (g[(i, j)] - acc) * inv;
        }
    }
    let (mut mults, mut adds) = (0u64, 0u64);
    for j in 0..n as u64 {
        let below = n as u64 - 1 - j;
        mults += j + below * (j + 1);
        adds += j + below * j;
    }
    ledger.charge("cholesky", &[n], FlopPair::new(mults, adds));
    ledger.charge_div(n as u64);
    ledger.charge_sqrt(n as u64);
    Ok(l)
}

/// Upper-triangular `F` with `F Fᴴ = G⁻¹`, built directly by bordering.
///
/// Growing the factor from order `k` to `k + 1` uses `v = F_kᴴ g`,
/// `ρ² = γ − ‖v‖²` and the new column `−F_k v / ρ`, costing `k² + 3k`
/// multiplications and `k²` additions. Over all steps this is about
/// `(N³/3, N³/3)`.
pub fn inv_cholesky(g: &ComplexMatrix, ledger: &mut FlopLedger) -> Result<ComplexMatrix, LinalgError> {
    check_hermitian(g)?;
    let n = g.rows();
    let tol = pivot_tolerance(g);
    let mut f = ComplexMatrix::zeros(n, n);
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        // v = F_kᴴ g[0..k, k]
        for i in 0..k {
            v[i] = (0..=i).map(|l| f[(l, i)].conj() * g[(l, k)]).sum();
        }
        let pivot = g[(k, k)].re - v[..k].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if pivot.is_nan() || pivot <= tol {
            return Err(LinalgError::NotPositiveDefinite { index: k, pivot });
        }
        let inv_rho = 1.0 / pivot.sqrt();
        for i in 0..k {
            w[i] = (i..k).map(|l| f[(i, l)] * v[l]).sum();
        }
        for i in 0..k {
            f[(i, k)] = -w[i] * inv_rho;
        }
        f[(k, k)] = Complex64::new(inv_rho, 0.0);

        let ku = k as u64;
        ledger.charge("inv_cholesky_step", &[k], FlopPair::new(ku * ku + 3 * ku, ku * ku));
        ledger.charge_sqrt(1);
        ledger.charge_div(1);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::*;

    fn reconstruction_residual(l: &ComplexMatrix, g: &ComplexMatrix) -> f64 {
        l.matmul(&l.conj_transpose()).unwrap().max_abs_diff(g) / g.max_abs()
    }

    fn inverse_residual(f: &ComplexMatrix, g: &ComplexMatrix) -> f64 {
        let prod = f.matmul(&f.conj_transpose()).unwrap().matmul(g).unwrap();
        prod.max_abs_diff(&ComplexMatrix::identity(g.rows()))
    }

    #[test]
    fn cholesky_small_cases() {
        let mut led = FlopLedger::new();
        assert_eq!(cholesky(&ComplexMatrix::identity(3), &mut led).unwrap(), ComplexMatrix::identity(3));
        let l = cholesky(&ComplexMatrix::from_real_diagonal(&[4.0, 9.0]), &mut led).unwrap();
        assert_eq!(l, ComplexMatrix::from_real_diagonal(&[2.0, 3.0]));
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut r = rng(11);
        let g = random_spd(&mut r, 5);
        let l = cholesky(&g, &mut FlopLedger::new()).unwrap();
        assert!(reconstruction_residual(&l, &g) <= 1e-10);
        for i in 0..5 {
            assert!(l[(i, i)].im == 0.0 && l[(i, i)].re > 0.0);
            for j in i + 1..5 {
                assert_eq!(l[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn cholesky_cost_has_sixth_cubic_term() {
        for &n in &[1usize, 2, 5, 12] {
            let mut led = FlopLedger::new();
            cholesky(&ComplexMatrix::identity(n), &mut led).unwrap();
            // closed forms: (N³ + 3N² - 4N)/6 and (N³ - N)/6
            let n = n as u64;
            assert_eq!(led.pair(), FlopPair::new((n * n * n + 3 * n * n - 4 * n) / 6, (n * n * n - n) / 6));
            assert_eq!((led.cdiv(), led.rsqrt()), (n, n));
        }
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let g = ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 2.0]);
        let err = cholesky(&g, &mut FlopLedger::new()).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { index: 1, .. }));
        let err = inv_cholesky(&g, &mut FlopLedger::new()).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { index: 1, .. }));
        let mut ng = ComplexMatrix::identity(2);
        ng[(0, 1)] = Complex64::new(0.5, 0.0);
        assert_eq!(cholesky(&ng, &mut FlopLedger::new()), Err(LinalgError::NotHermitian));
    }

    #[test]
    fn inv_cholesky_small_cases() {
        let mut led = FlopLedger::new();
        assert_eq!(inv_cholesky(&ComplexMatrix::identity(4), &mut led).unwrap(), ComplexMatrix::identity(4));
        let f = inv_cholesky(&ComplexMatrix::from_real_diagonal(&[4.0, 9.0]), &mut led).unwrap();
        assert!(f.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.5, 1.0 / 3.0])) < 1e-15);
    }

    #[test]
    fn inv_cholesky_random_residual() {
        let mut r = rng(5);
        let g = random_spd(&mut r, 6);
        let f = inv_cholesky(&g, &mut FlopLedger::new()).unwrap();
        assert!(inverse_residual(&f, &g) <= 1e-9);
        for i in 0..6 {
            for j in 0..i {
                assert_eq!(f[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn inv_cholesky_cost_is_third_cubic() {
        let n = 20u64;
        let mut led = FlopLedger::new();
        inv_cholesky(&ComplexMatrix::identity(n as usize), &mut led).unwrap();
        let sq: u64 = (0..n).map(|k| k * k).sum();
        let lin: u64 = (0..n).sum();
        assert_eq!(led.pair(), FlopPair::new(sq + 3 * lin, sq));
    }

    #[test]
    fn factorizations_hold_for_many_sizes() {
        let mut r = rng(99);
        for trial in 0..100 {
            let n = 1 + trial % 16;
            let g = random_spd(&mut r, n);
            let l = cholesky(&g, &mut FlopLedger::new()).unwrap();
            assert!(reconstruction_residual(&l, &g) <= 1e-10);
            let f = inv_cholesky(&g, &mut FlopLedger::new()).unwrap();
            assert!(inverse_residual(&f, &g) <= 1e-9);
        }
    }
}
