//! Counted dense complex kernels.
//!
//! Each kernel charges a closed-form `(cmul, cadd)` cost into the ledger it
//! is handed. Costs depend only on dimensions, never on the data, so two runs
//! over same-sized inputs produce identical ledgers.

mod factor;
mod givens;
mod matrix;
mod triangular;

use num_complex::Complex64;
use thiserror::Error;

use crate::flop_model::{FlopLedger, FlopPair};

pub use factor::{cholesky, inv_cholesky, pivot_tolerance};
pub use givens::{
    deflate_inverse_factor, givens_apply_pair, givens_compute, retriangularize, Deflation,
    GivensRotation,
};
pub use matrix::ComplexMatrix;
pub use triangular::{inverse_factor_from_cholesky, tri_solve, Triangle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("zero diagonal element at index {0}")]
    ZeroDiagonal(usize),
    #[error("malformed sparsity profile: nonzero entry at ({row}, {col})")]
    MalformedProfile { row: usize, col: usize },
}

/// `Hᴴ H + αI`, computing the `N(N+1)/2` upper inner products and mirroring.
///
/// Each length-`M` inner product is charged `M` multiplications and `M`
/// additions, so the `α = 0` cost is `(M·N(N+1)/2, M·N(N+1)/2)`. A nonzero
/// `α` adds `N` additions for the diagonal shift.
pub fn gram(h: &ComplexMatrix, alpha: f64, ledger: &mut FlopLedger) -> Result<ComplexMatrix, LinalgError> {
    let (m, n) = (h.rows(), h.cols());
    if m < n {
        return Err(LinalgError::Dimension(format!("gram needs M >= N, got {m}x{n}")));
    }
    if !h.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(LinalgError::Dimension(format!("regularization must be finite and >= 0, got {alpha}")));
    }
    let mut g = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let dot: Complex64 = (0..m).map(|r| h[(r, i)].conj() * h[(r, j)]).sum();
            g[(i, j)] = dot;
            g[(j, i)] = dot.conj();
        }
        g[(i, i)].im = 0.0;
    }
    let inner = (n * (n + 1) / 2 * m) as u64;
    ledger.charge("gram", &[m, n], FlopPair::new(inner, inner));
    if alpha > 0.0 {
        for i in 0..n {
            g[(i, i)].re += alpha;
        }
        ledger.charge("gram_shift", &[n], FlopPair::new(0, n as u64));
    }
    Ok(g)
}

/// `Hᴴ y`, charged `(M·N, M·N)`.
pub fn matched_filter(
    h: &ComplexMatrix,
    y: &[Complex64],
    ledger: &mut FlopLedger,
) -> Result<Vec<Complex64>, LinalgError> {
    let (m, n) = (h.rows(), h.cols());
    if y.len() != m {
        return Err(LinalgError::Dimension(format!("y has length {}, expected {m}", y.len())));
    }
    let z = (0..n)
        .map(|j| (0..m).map(|r| h[(r, j)].conj() * y[r]).sum())
        .collect();
    ledger.charge("matched_filter", &[m, n], FlopPair::new((m * n) as u64, (m * n) as u64));
    Ok(z)
}

/// Squared Euclidean norm of each row of an upper-triangular matrix.
pub fn upper_row_norms(f: &ComplexMatrix, ledger: &mut FlopLedger) -> Vec<f64> {
    let n = f.rows();
    let norms = (0..n)
        .map(|i| f.row(i)[i..].iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let mults = (n * (n + 1) / 2) as u64;
    ledger.charge("row_norms", &[n], FlopPair::new(mults, mults - n as u64));
    norms
}
