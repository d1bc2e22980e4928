use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{select_stream, DetectError, DetectionProblem, DetectionResult, OrderingPolicy};
use crate::flop_model::FlopLedger;

/// Classical V-BLAST: at every stage the regularized Gram matrix of the
/// remaining columns is inverted densely. Intended for small `N`; no cost
/// accounting.
pub fn detect_oracle_vblast(problem: &DetectionProblem, policy: OrderingPolicy) -> Result<DetectionResult, DetectError> {
    let h = problem.h().to_nalgebra();
    let n = problem.n();
    let mut active: Vec<usize> = (0..n).collect();
    let mut residual = DVector::from_column_slice(problem.y());
    let mut symbols = vec![Complex64::new(0.0, 0.0); n];
    let mut order = Vec::with_capacity(n);

    while !active.is_empty() {
        let stage = order.len();
        let h_rem = DMatrix::from_fn(h.nrows(), active.len(), |r, c| h[(r, active[c])]);
        let mut g = h_rem.adjoint() * &h_rem;
        for i in 0..active.len() {
            g[(i, i)] += Complex64::new(problem.alpha(), 0.0);
        }
        let inv = g.try_inverse().ok_or(DetectError::Singular { stage })?;
        let variances: Vec<f64> = (0..active.len()).map(|i| inv[(i, i)].re).collect();
        if variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DetectError::Singular { stage });
        }
        let pos = select_stream(policy, &variances);
        let nulling = inv.row(pos) * h_rem.adjoint();
        let estimate = (nulling * &residual)[(0, 0)];
        let decision = problem.constellation().slice(estimate);

        let stream = active.remove(pos);
        residual -= h.column(stream) * decision;
        symbols[stream] = decision;
        order.push(stream);
    }

    Ok(DetectionResult {
        symbols,
        order,
        ledger: FlopLedger::new(),
        residual: residual.iter().copied().collect(),
    })
}
