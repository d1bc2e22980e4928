//! Worst-case and average complexity sweeps over random channels.

mod channel;
mod fit;
mod report;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detectors::DetectorKind;

pub use channel::{random_channel, random_problem, trial_rng, RandomProblem};
pub use fit::{
    fit_polynomial, fit_quadratic_in_m, within_relative, FitError, MSlopeFit, FIT_TOLERANCE, TARGET_CUBIC_CADD,
    TARGET_CUBIC_CMUL, TARGET_M_SLOPE, TARGET_ROTATION_CADD, TARGET_ROTATION_CMUL,
};
pub use report::{
    AverageCost, ComplexityReport, CsvRow, DetectorFit, FitVerdict, ReportError, ReportMetadata, SizeSummary,
};
pub use sweep::{run_sweep, SweepError};

/// Number of channels per size used to confirm that worst-case counts do
/// not depend on the channel.
pub const WORST_CASE_CHANNELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SizePoint {
    pub n: usize,
    pub m: usize,
}

impl SizePoint {
    pub fn square(n: usize) -> Self {
        Self { n, m: n }
    }
}

impl fmt::Display for SizePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == self.m {
            write!(f, "{}", self.n)
        } else {
            write!(f, "{}x{}", self.n, self.m)
        }
    }
}

impl FromStr for SizePoint {
    type Err = String;

    /// `"N"` for a square system or `"NxM"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid size `{s}`"));
        match s.split_once('x') {
            Some((n, m)) => Ok(Self { n: parse(n)?, m: parse(m)? }),
            None => Ok(Self::square(parse(s)?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Worst,
    Average,
    Both,
}

impl SweepMode {
    pub fn includes_worst(&self) -> bool {
        matches!(self, SweepMode::Worst | SweepMode::Both)
    }

    pub fn includes_average(&self) -> bool {
        matches!(self, SweepMode::Average | SweepMode::Both)
    }
}

impl FromStr for SweepMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "worst" => Ok(SweepMode::Worst),
            "average" => Ok(SweepMode::Average),
            "both" => Ok(SweepMode::Both),
            other => Err(format!("unknown mode `{other}` (expected worst, average or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sizes: Vec<SizePoint>,
    pub trials: usize,
    pub seed: u64,
    /// Regularization; 0 is zero forcing.
    pub alpha: f64,
    /// Per receive antenna SNR of the average-mode channels.
    pub snr_db: f64,
    pub detectors: Vec<DetectorKind>,
    pub mode: SweepMode,
    /// Fan average-mode trials out over worker threads.
    pub parallel: bool,
}

pub const DEFAULT_SEED: u64 = 20_150_915;

impl Default for ExperimentConfig {
    /// Square systems `N = M ∈ {8, 16, …, 64}`, 10000 channels per size,
    /// zero forcing, both detectors, both modes.
    fn default() -> Self {
        Self {
            sizes: (1..=8).map(|i| SizePoint::square(8 * i)).collect(),
            trials: 10_000,
            seed: DEFAULT_SEED,
            alpha: 0.0,
            snr_db: 20.0,
            detectors: DetectorKind::ALL.to_vec(),
            mode: SweepMode::Both,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.sizes.is_empty() {
            return Err("at least one size is required".into());
        }
        if let Some(s) = self.sizes.iter().find(|s| s.n == 0 || s.m < s.n) {
            return Err(format!("size {s}: M must be >= N >= 1"));
        }
        if self.trials == 0 {
            return Err("trials must be >= 1".into());
        }
        if self.detectors.is_empty() {
            return Err("at least one detector is required".into());
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if self.snr_db.is_nan() {
            return Err("snr must be a number".into());
        }
        Ok(())
    }
}
