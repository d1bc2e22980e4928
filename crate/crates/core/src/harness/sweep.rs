use rayon::prelude::*;
use thiserror::Error;

use super::channel::{random_problem, trial_rng, worst_case_rng};
use super::report::{AverageCost, ComplexityReport, ReportError, ReportMetadata, SizeSummary};
use super::{ExperimentConfig, SizePoint, WORST_CASE_CHANNELS};
use crate::detectors::{Constellation, DetectError, DetectorKind, OrderingPolicy};
use crate::flop_model::{FlopLedger, FlopPair};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{detector} failed at size {size}, trial {trial}, seed {seed}: {source}")]
    Detector {
        detector: DetectorKind,
        size: SizePoint,
        trial: u64,
        seed: u64,
        source: DetectError,
    },
    #[error("{detector} worst-case ledger at size {size} differs between channel 0 and channel {channel}")]
    WorstCaseMismatch {
        detector: DetectorKind,
        size: SizePoint,
        channel: usize,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// Runs the configured worst-case and average sweeps.
///
/// Worst case: every detector under the forced-first policy on
/// [`WORST_CASE_CHANNELS`] channels per size, whose ledgers must agree.
/// Average: `trials` channels per size under the optimal policy, each
/// channel shared by all detectors.
pub fn run_sweep(config: &ExperimentConfig) -> Result<ComplexityReport, SweepError> {
    config.validate().map_err(SweepError::Config)?;
    let mut summaries = Vec::new();
    for &detector in &config.detectors {
        for &size in &config.sizes {
            summaries.push(SizeSummary {
                detector,
                size,
                worst: None,
                worst_rotations: None,
                average: None,
            });
        }
    }
    for (si, &size) in config.sizes.iter().enumerate() {
        let index = |di: usize| di * config.sizes.len() + si;
        if config.mode.includes_worst() {
            for (di, &detector) in config.detectors.iter().enumerate() {
                let ledger = worst_case(config, detector, size)?;
                let s = &mut summaries[index(di)];
                s.worst = Some(ledger.pair());
                s.worst_rotations = ledger.subtotal("givens_apply");
            }
        }
        if config.mode.includes_average() {
            let per_detector = average_case(config, size)?;
            for (di, pairs) in per_detector.iter().enumerate() {
                summaries[index(di)].average = Some(AverageCost::from_pairs(pairs));
            }
        }
    }
    let metadata = ReportMetadata {
        seed: config.seed,
        trials: config.trials,
        alpha: config.alpha,
        snr_db: Some(config.snr_db),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(ComplexityReport::assemble(metadata, summaries)?)
}

fn worst_case(config: &ExperimentConfig, detector: DetectorKind, size: SizePoint) -> Result<FlopLedger, SweepError> {
    let q = Constellation::qpsk();
    let mut first: Option<FlopLedger> = None;
    for channel in 0..WORST_CASE_CHANNELS {
        let fail = |source| SweepError::Detector {
            detector,
            size,
            trial: channel as u64,
            seed: config.seed,
            source,
        };
        let mut rng = worst_case_rng(config.seed, size.n, size.m, channel as u64);
        let rp = random_problem(size.m, size.n, config.snr_db, config.alpha, &q, &mut rng).map_err(fail)?;
        let result = detector
            .detect(&rp.problem, OrderingPolicy::ForcedFirst, &mut FlopLedger::with_log())
            .map_err(fail)?;
        match &first {
            None => first = Some(result.ledger),
            Some(f) if *f != result.ledger => {
                return Err(SweepError::WorstCaseMismatch { detector, size, channel });
            }
            Some(_) => {}
        }
    }
    Ok(first.expect("at least one worst-case channel"))
}

/// Per detector, the `(cmul, cadd)` of every trial in trial order.
fn average_case(config: &ExperimentConfig, size: SizePoint) -> Result<Vec<Vec<FlopPair>>, SweepError> {
    let q = Constellation::qpsk();
    let run_trial = |trial: u64| -> Result<Vec<FlopPair>, SweepError> {
        let mut rng = trial_rng(config.seed, size.n, size.m, trial);
        let rp = random_problem(size.m, size.n, config.snr_db, config.alpha, &q, &mut rng).map_err(|source| {
            SweepError::Detector {
                detector: config.detectors[0],
                size,
                trial,
                seed: config.seed,
                source,
            }
        })?;
        config
            .detectors
            .iter()
            .map(|&detector| {
                detector
                    .detect(&rp.problem, OrderingPolicy::Optimal, &mut FlopLedger::new())
                    .map(|r| r.ledger.pair())
                    .map_err(|source| SweepError::Detector {
                        detector,
                        size,
                        trial,
                        seed: config.seed,
                        source,
                    })
            })
            .collect()
    };
    let trials = 0..config.trials as u64;
    let outcomes: Vec<Result<Vec<FlopPair>, SweepError>> = if config.parallel {
        trials.into_par_iter().map(run_trial).collect()
    } else {
        trials.map(run_trial).collect()
    };
    let mut per_detector = vec![Vec::with_capacity(config.trials); config.detectors.len()];
    for outcome in outcomes {
        for (d, pair) in outcome?.into_iter().enumerate() {
            per_detector[d].push(pair);
        }
    }
    Ok(per_detector)
}
