use num_complex::Complex64;

use super::{select_stream, DetectError, DetectionProblem, DetectionResult, OrderingPolicy};
use crate::flop_model::{FlopLedger, FlopPair};
use crate::linalg::{
    cholesky, deflate_inverse_factor, gram, inv_cholesky, inverse_factor_from_cholesky, matched_filter,
    upper_row_norms, ComplexMatrix,
};

/// Square-root SIC detector on the directly computed inverse Cholesky
/// factor.
pub fn detect_sqrt_ic(
    problem: &DetectionProblem,
    policy: OrderingPolicy,
    ledger: &mut FlopLedger,
) -> Result<DetectionResult, DetectError> {
    counted(ledger, |run| {
        let g = gram(problem.h(), problem.alpha(), run)?;
        let f = inv_cholesky(&g, run)?;
        cancel_streams(problem, &g, f, policy, run)
    })
}

/// Givens-rotation SIC detector: Cholesky factorization, inverse factor by
/// triangular solves, then the same rotation-based deflation.
pub fn detect_givens_sic(
    problem: &DetectionProblem,
    policy: OrderingPolicy,
    ledger: &mut FlopLedger,
) -> Result<DetectionResult, DetectError> {
    counted(ledger, |run| {
        let g = gram(problem.h(), problem.alpha(), run)?;
        let l = cholesky(&g, run)?;
        let f = inverse_factor_from_cholesky(&l, run)?;
        cancel_streams(problem, &g, f, policy, run)
    })
}

/// Runs `body` on a fresh ledger (logging if `ledger` logs), attaches that
/// ledger to the result and adds it to `ledger`.
fn counted(
    ledger: &mut FlopLedger,
    body: impl FnOnce(&mut FlopLedger) -> Result<DetectionResult, DetectError>,
) -> Result<DetectionResult, DetectError> {
    let mut run = if ledger.is_logging() { FlopLedger::with_log() } else { FlopLedger::new() };
    let mut result = body(&mut run)?;
    ledger.absorb(run.clone());
    result.ledger = run;
    Ok(result)
}

/// Ordered detection on an upper-triangular `F` with `F Fᴴ = G⁻¹`.
///
/// Per stage with `k` streams left, on top of the deflation rotations:
/// estimate `(k+1, k-1)`, cancellation in `y` `(M, M)`, matched-filter
/// update `(k-1, k-1)` and variance update `(k-1, k-1)`.
fn cancel_streams(
    problem: &DetectionProblem,
    g: &ComplexMatrix,
    mut f: ComplexMatrix,
    policy: OrderingPolicy,
    ledger: &mut FlopLedger,
) -> Result<DetectionResult, DetectError> {
    let (m, n) = (problem.m(), problem.n());
    let h = problem.h();
    let mut z = matched_filter(h, problem.y(), ledger)?;
    let mut variances = upper_row_norms(&f, ledger);
    let mut active: Vec<usize> = (0..n).collect();
    let mut residual = problem.y().to_vec();
    let mut symbols = vec![Complex64::new(0.0, 0.0); n];
    let mut order = Vec::with_capacity(n);

    while !active.is_empty() {
        let k = active.len();
        let pos = select_stream(policy, &variances);
        let stream = active.remove(pos);
        let z_stream = z.remove(pos);
        variances.remove(pos);

        let defl = deflate_inverse_factor(f, pos, ledger)?;
        let x = defl.pivot;
        if x.norm_sqr() == 0.0 {
            return Err(DetectError::Singular { stage: order.len() });
        }

        let acc: Complex64 = defl.coupling.iter().zip(&z).map(|(u, zi)| u.conj() * zi).sum();
        let estimate = x * (acc + x.conj() * z_stream);
        ledger.charge("estimate", &[k], FlopPair::new(k as u64 + 1, k as u64 - 1));

        let decision = problem.constellation().slice(estimate);
        symbols[stream] = decision;
        order.push(stream);

        for r in 0..m {
            residual[r] -= h[(r, stream)] * decision;
        }
        ledger.charge("cancel", &[m], FlopPair::new(m as u64, m as u64));

        let rest = k as u64 - 1;
        for (zi, &other) in z.iter_mut().zip(&active) {
            *zi -= g[(other, stream)] * decision;
        }
        ledger.charge("cancel_matched", &[k - 1], FlopPair::new(rest, rest));

        for (v, u) in variances.iter_mut().zip(&defl.coupling) {
            *v -= u.norm_sqr();
        }
        ledger.charge("variance_update", &[k - 1], FlopPair::new(rest, rest));

        f = defl.factor;
    }

    Ok(DetectionResult {
        symbols,
        order,
        ledger: FlopLedger::new(),
        residual,
    })
}
