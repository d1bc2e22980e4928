//! Polynomial coefficient extraction from `(size, count)` samples.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Leading coefficients the worst-case totals must reproduce with `M = N`:
/// `½MN² + ⅚N³` multiplications and `½MN² + ½N³` additions.
pub const TARGET_CUBIC_CMUL: f64 = 0.5 + 5.0 / 6.0;
pub const TARGET_CUBIC_CADD: f64 = 0.5 + 0.5;
/// Coefficient of `MN²` in both counts.
pub const TARGET_M_SLOPE: f64 = 0.5;
/// Worst-case rotation subtotal `(½N³, ⅙N³)`.
pub const TARGET_ROTATION_CMUL: f64 = 0.5;
pub const TARGET_ROTATION_CADD: f64 = 1.0 / 6.0;
/// Relative tolerance for every coefficient check.
pub const FIT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("duplicate abscissa {0}")]
    DuplicateAbscissa(f64),
    #[error("need at least {needed} distinct points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("degenerate system")]
    Degenerate,
}

/// Coefficients of the degree-`degree` polynomial through `points`, ordered
/// from the highest power down.
///
/// With exactly `degree + 1` points this is the interpolating polynomial;
/// with more it is the least-squares fit. Abscissae are scaled by their
/// largest magnitude before solving.
pub fn fit_polynomial(points: &[(f64, f64)], degree: usize) -> Result<Vec<f64>, FitError> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if let Some(w) = xs.windows(2).find(|w| w[0] == w[1]) {
        return Err(FitError::DuplicateAbscissa(w[0]));
    }
    if points.len() < degree + 1 {
        return Err(FitError::InsufficientPoints {
            needed: degree + 1,
            got: points.len(),
        });
    }
    let scale = xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if !(scale > 0.0 && scale.is_finite()) || points.iter().any(|p| !p.1.is_finite()) {
        return Err(FitError::Degenerate);
    }
    let v = DMatrix::from_fn(points.len(), degree + 1, |i, j| (points[i].0 / scale).powi((degree - j) as i32));
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let svd = v.svd(true, true);
    let rank_tol = 1e-12 * svd.singular_values.max();
    if svd.rank(rank_tol) < degree + 1 {
        return Err(FitError::Degenerate);
    }
    let scaled = svd.solve(&b, rank_tol).map_err(|_| FitError::Degenerate)?;
    Ok((0..=degree)
        .map(|j| scaled[j] / scale.powi((degree - j) as i32))
        .collect())
}

/// Linear dependence of a count on `M` at fixed `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MSlopeFit {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    /// `slope / N²`, the coefficient of `MN²`.
    pub slope_over_n2: f64,
}

/// Fits `count = slope·M + intercept` over `(M, count)` samples taken at a
/// fixed `N`.
pub fn fit_quadratic_in_m(n: usize, points: &[(f64, f64)]) -> Result<MSlopeFit, FitError> {
    let c = fit_polynomial(points, 1)?;
    Ok(MSlopeFit {
        n,
        slope: c[0],
        intercept: c[1],
        slope_over_n2: c[0] / (n * n) as f64,
    })
}

/// `|value − target| ≤ tol·|target|`, or `|value| ≤ tol` for a zero target.
pub fn within_relative(value: f64, target: f64, tol: f64) -> bool {
    let bound = if target == 0.0 { tol } else { tol * target.abs() };
    (value - target).abs() <= bound
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> f64, xs: &[f64]) -> Vec<(f64, f64)> {
        xs.iter().map(|&x| (x, f(x))).collect()
    }

    fn assert_coeffs(got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn exact_cubic() {
        let c = fit_polynomial(&sample(|x| x * x * x, &[1.0, 2.0, 3.0, 4.0]), 3).unwrap();
        assert_coeffs(&c, &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn exact_quadratic_in_cubic_basis() {
        let c = fit_polynomial(&sample(|x| 2.0 * x * x + 1.0, &[3.0, 5.0, 8.0, 13.0]), 3).unwrap();
        assert_coeffs(&c, &[0.0, 2.0, 0.0, 1.0]);
    }

    #[test]
    fn least_squares_recovers_exact_data() {
        let f = |x: f64| 4.0 / 3.0 * x.powi(3) + 0.5 * x * x - 7.0 * x + 2.0;
        let c = fit_polynomial(&sample(f, &[8.0, 16.0, 24.0, 32.0, 40.0, 48.0, 56.0, 64.0]), 3).unwrap();
        assert_coeffs(&c, &[4.0 / 3.0, 0.5, -7.0, 2.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            fit_polynomial(&[(1.0, 1.0), (1.0, 2.0), (2.0, 0.0), (3.0, 0.0)], 3),
            Err(FitError::DuplicateAbscissa(1.0))
        );
        assert!(matches!(
            fit_polynomial(&[(1.0, 1.0), (2.0, 2.0)], 3),
            Err(FitError::InsufficientPoints { needed: 4, got: 2 })
        ));
        assert_eq!(fit_polynomial(&[(0.0, 1.0)], 0).unwrap_err(), FitError::Degenerate);
    }

    #[test]
    fn m_slope_examples() {
        let n = 16usize;
        let nn = (n * n) as f64;
        let ms = [16.0, 32.0, 48.0, 64.0];
        let fit = fit_quadratic_in_m(n, &sample(|m| 0.5 * m * nn, &ms)).unwrap();
        assert!((fit.slope_over_n2 - 0.5).abs() < 1e-12);
        let flat = fit_quadratic_in_m(n, &sample(|_| 1234.0, &ms)).unwrap();
        assert!(flat.slope.abs() < 1e-9);
        assert!((flat.intercept - 1234.0).abs() < 1e-9);
    }

    #[test]
    fn tolerance_helper() {
        assert!(within_relative(1.019, 1.0, 0.02));
        assert!(!within_relative(1.03, 1.0, 0.02));
        assert!(within_relative(0.01, 0.0, 0.02));
    }
}
