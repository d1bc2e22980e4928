//! Optimal-ordered zero-forcing / MMSE successive interference cancellation.
//!
//! Two counted detectors share the same deflation sweep and differ in how
//! the inverse factor `F` (`F Fᴴ = (HᴴH + αI)⁻¹`) is obtained:
//!
//! * [`detect_sqrt_ic`] builds `F` directly with the bordered inverse
//!   Cholesky factorization.
//! * [`detect_givens_sic`] factors `G = L Lᴴ` and then forms `F = L⁻ᴴ`
//!   column by column with triangular solves.
//!
//! [`detect_oracle_vblast`] recomputes the dense inverse at every stage and
//! serves as the correctness reference.

mod oracle;
mod sic;
mod slicer;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flop_model::FlopLedger;
use crate::linalg::{ComplexMatrix, LinalgError};

pub use oracle::detect_oracle_vblast;
pub use sic::{detect_givens_sic, detect_sqrt_ic};
pub use slicer::{slicer, Constellation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("effective channel is singular at stage {stage}")]
    Singular { stage: usize },
}

/// Channel `H` (`M x N`), received vector `y`, alphabet and regularization.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProblem {
    h: ComplexMatrix,
    y: Vec<Complex64>,
    constellation: Constellation,
    alpha: f64,
}

impl DetectionProblem {
    pub fn new(
        h: ComplexMatrix,
        y: Vec<Complex64>,
        constellation: Constellation,
        alpha: f64,
    ) -> Result<Self, DetectError> {
        let (m, n) = (h.rows(), h.cols());
        if n == 0 || m < n {
            return Err(DetectError::InvalidProblem(format!("M must be >= N >= 1, got M={m}, N={n}")));
        }
        if y.len() != m {
            return Err(DetectError::InvalidProblem(format!("y has length {}, expected {m}", y.len())));
        }
        if !h.is_finite() || !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(DetectError::InvalidProblem("non-finite entries".into()));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(DetectError::InvalidProblem(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(Self { h, y, constellation, alpha })
    }

    /// Zero-forcing QPSK problem.
    pub fn zf_qpsk(h: ComplexMatrix, y: Vec<Complex64>) -> Result<Self, DetectError> {
        Self::new(h, y, Constellation::qpsk(), 0.0)
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of receive antennas.
    pub fn m(&self) -> usize {
        self.h.rows()
    }

    /// Number of transmit streams.
    pub fn n(&self) -> usize {
        self.h.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Decision per stream, indexed by original stream number.
    pub symbols: Vec<Complex64>,
    /// Streams in the order they were detected.
    pub order: Vec<usize>,
    pub ledger: FlopLedger,
    /// `y` after every detected contribution has been cancelled.
    pub residual: Vec<Complex64>,
}

impl DetectionResult {
    /// Same symbols and order, ignoring ledgers and residuals.
    pub fn same_decisions(&self, other: &DetectionResult) -> bool {
        self.symbols == other.symbols && self.order == other.order
    }
}

/// Which remaining stream is detected at each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingPolicy {
    /// Smallest post-detection error variance.
    Optimal,
    /// Always the first remaining stream. Every stage then triggers the
    /// largest possible number of rotations, which is the worst case.
    ForcedFirst,
}

const TIE_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Position of the stream to detect among `variances` (remaining streams in
/// ascending index order). Values within a relative `1e-12` of the minimum
/// count as ties and resolve to the lowest position.
pub fn select_stream(policy: OrderingPolicy, variances: &[f64]) -> usize {
    match policy {
        OrderingPolicy::ForcedFirst => 0,
        OrderingPolicy::Optimal => {
            let min = variances.iter().copied().fold(f64::INFINITY, f64::min);
            let bound = min + TIE_RELATIVE_TOLERANCE * min.abs();
            variances.iter().position(|&v| v <= bound).unwrap_or(0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    SqrtIc,
    GivensSic,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 2] = [DetectorKind::SqrtIc, DetectorKind::GivensSic];

    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::SqrtIc => "sqrt_ic",
            DetectorKind::GivensSic => "givens_sic",
        }
    }

    pub fn detect(
        &self,
        problem: &DetectionProblem,
        policy: OrderingPolicy,
        ledger: &mut FlopLedger,
    ) -> Result<DetectionResult, DetectError> {
        match self {
            DetectorKind::SqrtIc => detect_sqrt_ic(problem, policy, ledger),
            DetectorKind::GivensSic => detect_givens_sic(problem, policy, ledger),
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqrt_ic" => Ok(DetectorKind::SqrtIc),
            "givens_sic" => Ok(DetectorKind::GivensSic),
            other => Err(format!("unknown detector `{other}` (expected sqrt_ic or givens_sic)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_rules() {
        assert_eq!(select_stream(OrderingPolicy::ForcedFirst, &[3.0, 1.0]), 0);
        assert_eq!(select_stream(OrderingPolicy::Optimal, &[3.0, 1.0, 2.0]), 1);
        assert_eq!(select_stream(OrderingPolicy::Optimal, &[1.0, 1.0, 1.0]), 0);
        assert_eq!(select_stream(OrderingPolicy::Optimal, &[2.0, 1.0, 1.0 + 1e-15]), 1);
    }

    #[test]
    fn problem_validation() {
        let h = ComplexMatrix::identity(2);
        let y = vec![Complex64::new(1.0, 0.0); 2];
        assert!(DetectionProblem::zf_qpsk(h.clone(), y.clone()).is_ok());
        assert!(DetectionProblem::zf_qpsk(ComplexMatrix::zeros(2, 3), y.clone()).is_err());
        assert!(DetectionProblem::zf_qpsk(h.clone(), y[..1].to_vec()).is_err());
        assert!(DetectionProblem::new(h, y, Constellation::qpsk(), -1.0).is_err());
    }

    #[test]
    fn detector_names_round_trip() {
        for d in DetectorKind::ALL {
            assert_eq!(d.name().parse::<DetectorKind>().unwrap(), d);
        }
        assert!("zf".parse::<DetectorKind>().is_err());
    }
}
