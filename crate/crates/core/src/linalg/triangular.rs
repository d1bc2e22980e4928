use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError};
use crate::flop_model::{FlopLedger, FlopPair};

/// Which triangle of the stored matrix is used, and whether the system is
/// solved with its conjugate transpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triangle {
    Lower,
    Upper,
    /// Solve `Lᴴ x = b` with `L` stored lower-triangular.
    LowerConjTranspose,
    /// Solve `Uᴴ x = b` with `U` stored upper-triangular.
    UpperConjTranspose,
}

/// Substitution solve, charged `(n(n-1)/2, n(n-1)/2)` plus `n` divisions.
pub fn tri_solve(
    t: &ComplexMatrix,
    form: Triangle,
    rhs: &[Complex64],
    ledger: &mut FlopLedger,
) -> Result<Vec<Complex64>, LinalgError> {
    let n = t.rows();
    if !t.is_square() || rhs.len() != n {
        return Err(LinalgError::Dimension(format!(
            "triangular solve with {}x{} matrix and rhs of length {}",
            t.rows(),
            t.cols(),
            rhs.len()
        )));
    }
    if let Some(i) = (0..n).find(|&i| t[(i, i)] == Complex64::new(0.0, 0.0)) {
        return Err(LinalgError::ZeroDiagonal(i));
    }
    // Effective entry (i, j) of the operator being inverted.
    let entry = |i: usize, j: usize| match form {
        Triangle::Lower | Triangle::Upper => t[(i, j)],
        Triangle::LowerConjTranspose | Triangle::UpperConjTranspose => t[(j, i)].conj(),
    };
    let forward = matches!(form, Triangle::Lower | Triangle::UpperConjTranspose);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    if forward {
        for i in 0..n {
            let acc: Complex64 = (0..i).map(|j| entry(i, j) * x[j]).sum();
            x[i] = (rhs[i] - acc) / entry(i, i);
        }
    } else {
        for i in (0..n).rev() {
            let acc: Complex64 = (i + 1..n).map(|j| entry(i, j) * x[j]).sum();
            x[i] = (rhs[i] - acc) / entry(i, i);
        }
    }
    let ops = (n * n.saturating_sub(1) / 2) as u64;
    ledger.charge("tri_solve", &[n], FlopPair::new(ops, ops));
    ledger.charge_div(n as u64);
    Ok(x)
}

/// Upper-triangular `F = L⁻ᴴ` from a Cholesky factor `L`, so that
/// `F Fᴴ = (L Lᴴ)⁻¹`.
///
/// Column `j` of `F` only involves the leading `(j+1)`-block of `L`, so it
/// is one triangular solve of order `j+1`; the `N` solves together cost
/// about `(N³/6, N³/6)`.
pub fn inverse_factor_from_cholesky(l: &ComplexMatrix, ledger: &mut FlopLedger) -> Result<ComplexMatrix, LinalgError> {
    if !l.is_square() {
        return Err(LinalgError::Dimension("Cholesky factor must be square".into()));
    }
    let n = l.rows();
    let mut f = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let block = l.leading(j + 1, j + 1);
        let mut e = vec![Complex64::new(0.0, 0.0); j + 1];
        e[j] = Complex64::new(1.0, 0.0);
        let col = tri_solve(&block, Triangle::LowerConjTranspose, &e, ledger)?;
        for (i, v) in col.into_iter().enumerate() {
            f[(i, j)] = v;
        }
    }
    Ok(f)
}
