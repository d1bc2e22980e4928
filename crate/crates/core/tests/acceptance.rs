//! Exit-gate checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sic_core::detectors::{detect_oracle_vblast, Constellation, DetectorKind, OrderingPolicy};
use sic_core::flop_model::{FlopLedger, FlopPair};
use sic_core::harness::{
    fit_polynomial, fit_quadratic_in_m, random_channel, random_problem, run_sweep, within_relative, ExperimentConfig,
    SizePoint, SweepMode, FIT_TOLERANCE, TARGET_CUBIC_CADD, TARGET_CUBIC_CMUL, TARGET_M_SLOPE, TARGET_ROTATION_CADD,
    TARGET_ROTATION_CMUL,
};
use sic_core::linalg::{cholesky, gram, givens_apply_pair, givens_compute, inv_cholesky, retriangularize, ComplexMatrix};

const FIT_SIZES: [usize; 4] = [16, 24, 32, 40];
const SLOPE_N: usize = 16;
const SLOPE_MS: [usize; 4] = [16, 32, 48, 64];
const AVERAGE_SIZES: [usize; 3] = [8, 16, 32];
const AVERAGE_TRIALS: usize = 1000;
const AVERAGE_GAP: f64 = 0.10;
const SEED: u64 = 0x5eed;

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn check(
    id: &'static str,
    name: &'static str,
    budget_secs: u64,
    f: impl FnOnce() -> (bool, String),
) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    Outcome {
        id,
        name,
        pass,
        detail,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(budget_secs),
    }
}

fn worst_ledger(detector: DetectorKind, n: usize, m: usize) -> FlopLedger {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ ((n as u64) << 16) ^ m as u64);
    let rp = random_problem(m, n, 20.0, 0.0, &Constellation::qpsk(), &mut rng).unwrap();
    detector
        .detect(&rp.problem, OrderingPolicy::ForcedFirst, &mut FlopLedger::with_log())
        .unwrap()
        .ledger
}

fn cubic(points: &[(usize, u64)]) -> f64 {
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, c)| (n as f64, c as f64)).collect();
    fit_polynomial(&xy, 3).unwrap()[0]
}

fn leading_pair(detector: DetectorKind) -> (f64, f64) {
    let totals: Vec<(usize, FlopPair)> = FIT_SIZES
        .iter()
        .map(|&n| (n, worst_ledger(detector, n, n).pair()))
        .collect();
    let cm: Vec<_> = totals.iter().map(|(n, p)| (*n, p.cmul)).collect();
    let ca: Vec<_> = totals.iter().map(|(n, p)| (*n, p.cadd)).collect();
    (cubic(&cm), cubic(&ca))
}

fn givens_cost_identity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (rot, _) = givens_compute(Complex64::new(0.3, -1.1), Complex64::new(2.0, 0.4));
    for j in 0..=256u64 {
        let len = j as usize + 1;
        let mut u: Vec<Complex64> = (0..len).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let mut v = u.clone();
        let mut ledger = FlopLedger::new();
        givens_apply_pair(&mut u, &mut v, &rot, &mut ledger).unwrap();
        let got = ledger.pair();
        if got != FlopPair::new(3 * j + 3, j + 1) {
            return (false, format!("j={j}: charged {got}"));
        }
        if got == FlopPair::new(2 * j + 2, 2 * j + 2) {
            return (false, format!("j={j}: charged the rejected {got}"));
        }
    }
    (true, "j=0..256 exact, never (2j+2,2j+2)".into())
}

fn rotation_subsystem() -> (bool, String) {
    let subtotals: Vec<(usize, FlopPair)> = FIT_SIZES
        .iter()
        .map(|&n| {
            let ledger = worst_ledger(DetectorKind::GivensSic, n, n);
            (n, ledger.subtotal("givens_apply").unwrap())
        })
        .collect();
    let a = cubic(&subtotals.iter().map(|(n, p)| (*n, p.cmul)).collect::<Vec<_>>());
    let b = cubic(&subtotals.iter().map(|(n, p)| (*n, p.cadd)).collect::<Vec<_>>());
    let pass = within_relative(a, TARGET_ROTATION_CMUL, FIT_TOLERANCE)
        && within_relative(b, TARGET_ROTATION_CADD, FIT_TOLERANCE);
    (pass, format!("cubic coefficients ({a:.6}, {b:.6}), target (0.5, 0.166667)"))
}

fn cubic_totals() -> (bool, String) {
    let mut pass = true;
    let mut detail = Vec::new();
    for d in DetectorKind::ALL {
        let (a, b) = leading_pair(d);
        pass &= within_relative(a, TARGET_CUBIC_CMUL, FIT_TOLERANCE) && within_relative(b, TARGET_CUBIC_CADD, FIT_TOLERANCE);
        detail.push(format!("{d} ({a:.6}, {b:.6})"));
    }
    (pass, format!("{}, target (1.333333, 1)", detail.join(", ")))
}

fn m_slope() -> (bool, String) {
    let mut pass = true;
    let mut detail = Vec::new();
    for d in DetectorKind::ALL {
        let pairs: Vec<(f64, FlopPair)> = SLOPE_MS
            .iter()
            .map(|&m| (m as f64, worst_ledger(d, SLOPE_N, m).pair()))
            .collect();
        let cm: Vec<_> = pairs.iter().map(|(m, p)| (*m, p.cmul as f64)).collect();
        let ca: Vec<_> = pairs.iter().map(|(m, p)| (*m, p.cadd as f64)).collect();
        let a = fit_quadratic_in_m(SLOPE_N, &cm).unwrap().slope_over_n2;
        let b = fit_quadratic_in_m(SLOPE_N, &ca).unwrap().slope_over_n2;
        pass &= within_relative(a, TARGET_M_SLOPE, FIT_TOLERANCE) && within_relative(b, TARGET_M_SLOPE, FIT_TOLERANCE);
        detail.push(format!("{d} ({a:.6}, {b:.6})"));
    }
    // MN² coefficient from slopes at several N, for reference
    let slopes: Vec<(f64, f64)> = [8usize, 16, 24, 32]
        .iter()
        .map(|&n| {
            let lo = worst_ledger(DetectorKind::SqrtIc, n, n).pair().cmul as f64;
            let hi = worst_ledger(DetectorKind::SqrtIc, n, 2 * n).pair().cmul as f64;
            (n as f64, (hi - lo) / n as f64)
        })
        .collect();
    let mn2 = fit_polynomial(&slopes, 2).unwrap()[0];
    (
        pass,
        format!("slope/N^2 at N={SLOPE_N}: {}, target 0.5; MN^2 coefficient over N = {mn2:.6}", detail.join(", ")),
    )
}

fn same_dominant_complexity() -> (bool, String) {
    let (a0, b0) = leading_pair(DetectorKind::SqrtIc);
    let (a1, b1) = leading_pair(DetectorKind::GivensSic);
    let pass = within_relative(a1, a0, FIT_TOLERANCE) && within_relative(b1, b0, FIT_TOLERANCE);
    (pass, format!("sqrt_ic ({a0:.6}, {b0:.6}) vs givens_sic ({a1:.6}, {b1:.6})"))
}

fn average_reproduction() -> (bool, String) {
    let config = ExperimentConfig {
        sizes: AVERAGE_SIZES.iter().map(|&n| SizePoint::square(n)).collect(),
        trials: AVERAGE_TRIALS,
        seed: SEED,
        mode: SweepMode::Both,
        ..ExperimentConfig::default()
    };
    let report = run_sweep(&config).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for &n in &AVERAGE_SIZES {
        let size = SizePoint::square(n);
        let mut avg_cmul = Vec::new();
        for d in DetectorKind::ALL {
            let s = report.summary(d, size).unwrap();
            let (worst, avg) = (s.worst.unwrap(), s.average.unwrap());
            pass &= avg.bounded_by(worst);
            avg_cmul.push(avg.cmul);
        }
        let gap = (avg_cmul[0] - avg_cmul[1]).abs() / avg_cmul[0].max(avg_cmul[1]);
        pass &= gap < AVERAGE_GAP;
        detail.push(format!("N={n}: avg cmul {:.1}/{:.1} gap {:.2}%", avg_cmul[0], avg_cmul[1], 100.0 * gap));
    }
    (pass, detail.join("; "))
}

fn oracle_suite() -> (bool, String) {
    let q = Constellation::qpsk();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    for trial in 0..200 {
        let n = 2 + trial % 5;
        let rp = random_problem(n, n, 20.0, 0.0, &q, &mut rng).unwrap();
        for policy in [OrderingPolicy::Optimal, OrderingPolicy::ForcedFirst] {
            let oracle = detect_oracle_vblast(&rp.problem, policy).unwrap();
            for d in DetectorKind::ALL {
                let r = d.detect(&rp.problem, policy, &mut FlopLedger::new()).unwrap();
                if !r.same_decisions(&oracle) {
                    mismatches += 1;
                }
            }
        }
    }
    let mut wrong = 0;
    for trial in 0..100 {
        let n = 1 + trial % 8;
        let rp = random_problem(n, n, f64::INFINITY, 0.0, &q, &mut rng).unwrap();
        for d in DetectorKind::ALL {
            let r = d.detect(&rp.problem, OrderingPolicy::Optimal, &mut FlopLedger::new()).unwrap();
            if r.symbols != rp.transmitted {
                wrong += 1;
            }
        }
    }
    (
        mismatches == 0 && wrong == 0,
        format!("{mismatches} oracle mismatches over 200 problems, {wrong} noiseless misses over 100"),
    )
}

fn random_gram(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let h = random_channel(n + 2, n, rng);
    gram(&h, 0.0, &mut FlopLedger::new()).unwrap()
}

fn numerical_hygiene() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut unit, mut recon, mut inv, mut retri) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..100 {
        let n = 1 + i % 16;
        let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 10f64.powi(rng.gen_range(-3..3));
        let b = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        unit = unit.max(givens_compute(a, b).0.unitarity_error());

        let g = random_gram(&mut rng, n);
        let l = cholesky(&g, &mut FlopLedger::new()).unwrap();
        recon = recon.max(l.matmul(&l.conj_transpose()).unwrap().max_abs_diff(&g) / g.max_abs());
        let f = inv_cholesky(&g, &mut FlopLedger::new()).unwrap();
        let prod = f.matmul(&f.conj_transpose()).unwrap().matmul(&g).unwrap();
        inv = inv.max(prod.max_abs_diff(&ComplexMatrix::identity(n)));

        let k = n + 1;
        let r = cholesky(&random_gram(&mut rng, k), &mut FlopLedger::new()).unwrap().conj_transpose();
        let deleted = r.without_column(i % k);
        let mut t = deleted.clone();
        retriangularize(&mut t, None, &mut FlopLedger::new()).unwrap();
        let qr = deleted.to_nalgebra().qr().r();
        for row in 0..k - 1 {
            for col in 0..k - 1 {
                retri = retri.max((t[(row, col)].norm() - qr[(row, col)].norm()).abs());
            }
        }
        for col in 0..k - 1 {
            retri = retri.max(t[(k - 1, col)].norm());
        }
    }
    let pass = unit <= 1e-12 && recon <= 1e-10 && inv <= 1e-9 && retri <= 1e-9;
    (
        pass,
        format!("unitarity {unit:.1e}, cholesky {recon:.1e}, inverse factor {inv:.1e}, retriangularize {retri:.1e}"),
    )
}

fn determinism() -> (bool, String) {
    let config = ExperimentConfig {
        sizes: vec![SizePoint::square(8), SizePoint::square(16), SizePoint { n: 4, m: 6 }],
        trials: 200,
        seed: 7,
        ..ExperimentConfig::default()
    };
    let first = run_sweep(&config).unwrap().to_csv();
    let second = run_sweep(&config).unwrap().to_csv();
    let serial = run_sweep(&ExperimentConfig {
        parallel: false,
        ..config.clone()
    })
    .unwrap()
    .to_csv();
    let pass = first == second && first == serial;
    (pass, format!("{} CSV bytes, repeat equal {}, serial equal {}", first.len(), first == second, first == serial))
}

fn main() -> ExitCode {
    let outcomes = [
        check("1", "givens cost identity", 1, givens_cost_identity),
        check("2", "rotation subsystem cubic (1/2, 1/6)", 5, rotation_subsystem),
        check("3a", "worst-case totals cubic (4/3, 1)", 10, cubic_totals),
        check("3b", "worst-case MN^2 slope 1/2 at N=16", 10, m_slope),
        check("4", "same dominant complexity", 10, same_dominant_complexity),
        check("5", "average vs worst at N=M in {8,16,32}", 120, average_reproduction),
        check("6", "oracle equivalence and noiseless recovery", 30, oracle_suite),
        check("7", "numerical hygiene", 30, numerical_hygiene),
        check("8", "determinism", 60, determinism),
    ];
    let mut failed = 0;
    for o in &outcomes {
        let in_time = o.elapsed <= o.budget;
        let verdict = if o.pass && in_time { "PASS" } else { "FAIL" };
        let slow = if !in_time {
            format!(" (over {}s budget)", o.budget.as_secs())
        } else {
            String::new()
        };
        println!(
            "criterion {:<3} {verdict}  {:<44} {:>8.2?}{slow}  {}",
            o.id, o.name, o.elapsed, o.detail
        );
        if verdict == "FAIL" {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
