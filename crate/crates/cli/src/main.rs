mod output;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sic_core::detectors::{detect_oracle_vblast, Constellation, DetectorKind, OrderingPolicy};
use sic_core::flop_model::{FlopLedger, FlopPair};
use sic_core::harness::{
    random_problem, run_sweep, trial_rng, ComplexityReport, ExperimentConfig, SizePoint, SweepError, SweepMode,
    DEFAULT_SEED,
};
use sic_core::linalg::{givens_apply_pair, givens_compute};

use output::write_atomic;

#[derive(Parser, Debug)]
#[command(name = "sicflops", version, about = "Flop-counted ordered SIC detectors and complexity sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the per-rotation charge (3j+3, j+1) for j = 0..=max-j.
    VerifyGivens {
        #[arg(long, default_value_t = 9)]
        max_j: u64,
        /// Charge (2j+2, 2j+2) instead of running the kernel.
        #[arg(long, hide = true)]
        inject_superseded_cost: bool,
    },
    /// Worst-case and average complexity sweep.
    Sweep {
        /// Comma-separated sizes, `N` for N = M or `NxM`.
        #[arg(long, value_delimiter = ',', default_value = "8,16,24,32,40,48,56,64")]
        sizes: Vec<SizePoint>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "both")]
        mode: SweepMode,
        #[arg(long, value_delimiter = ',', default_value = "sqrt_ic,givens_sic")]
        detectors: Vec<DetectorKind>,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        snr_db: f64,
        #[arg(long, env = "SICFLOPS_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
        /// Run average-mode trials on one thread.
        #[arg(long)]
        serial: bool,
        /// Also write sweep.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Fit worst-case counts from a sweep CSV and check them against the
    /// (4/3, 1) cubic and 1/2 MN^2 targets.
    Fit {
        csv: PathBuf,
        /// Where to write the JSON fit; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one detector and the dense reference on a random problem.
    Detect {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        snr_db: f64,
        #[arg(long, default_value = "sqrt_ic")]
        detector: DetectorKind,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Print the kernel log.
        #[arg(long)]
        log: bool,
    },
    /// Render a table and optional chart from a sweep CSV.
    Report {
        csv: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

/// Exit statuses: 1 check failed, 2 bad input or I/O, 3 detector failure.
#[derive(Debug)]
enum Failure {
    Check,
    Input(String),
    Detector(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check => 1,
            Failure::Input(_) => 2,
            Failure::Detector(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::VerifyGivens {
            max_j,
            inject_superseded_cost,
        } => verify_givens(max_j, inject_superseded_cost),
        Command::Sweep {
            sizes,
            trials,
            seed,
            mode,
            detectors,
            alpha,
            snr_db,
            out_dir,
            serial,
            svg,
        } => {
            let config = ExperimentConfig {
                sizes,
                trials,
                seed,
                alpha,
                snr_db,
                detectors,
                mode,
                parallel: !serial,
            };
            sweep(&config, out_dir, svg)
        }
        Command::Fit { csv, out } => fit(csv, out),
        Command::Detect {
            n,
            m,
            seed,
            snr_db,
            detector,
            alpha,
            log,
        } => detect(n, m, seed, snr_db, detector, alpha, log),
        Command::Report { csv, svg } => report(csv, svg),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(msg) | Failure::Detector(msg) => eprintln!("error: {msg}"),
                Failure::Check => {}
            }
            ExitCode::from(f.code())
        }
    }
}

fn verify_givens(max_j: u64, superseded: bool) -> Result<(), Failure> {
    let (rot, _) = givens_compute(num_complex::Complex64::new(3.0, 0.0), num_complex::Complex64::new(4.0, 0.0));
    let mut ok = true;
    for j in 0..=max_j {
        let len = j as usize + 1;
        let mut ledger = FlopLedger::new();
        if superseded {
            ledger.charge("givens_apply", &[len - 1], FlopPair::new(2 * j + 2, 2 * j + 2));
        } else {
            let mut u = vec![num_complex::Complex64::new(1.0, 0.0); len];
            let mut v = vec![num_complex::Complex64::new(0.0, 1.0); len];
            givens_apply_pair(&mut u, &mut v, &rot, &mut ledger).map_err(|e| Failure::Input(e.to_string()))?;
        }
        let got = ledger.pair();
        let expected = FlopPair::new(3 * j + 3, j + 1);
        let rejected = FlopPair::new(2 * j + 2, 2 * j + 2);
        let mark = if got == expected { "" } else { "  MISMATCH" };
        println!("j={j}: got {got}, rejected {rejected}{mark}");
        ok &= got == expected;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn io_err(path: &std::path::Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", path.display()))
}

fn sweep(config: &ExperimentConfig, out_dir: PathBuf, svg: bool) -> Result<(), Failure> {
    let report = run_sweep(config).map_err(|e| match e {
        SweepError::Config(msg) => Failure::Input(msg),
        other => Failure::Detector(other.to_string()),
    })?;
    let csv_path = out_dir.join("sweep.csv");
    write_atomic(&csv_path, &report.to_csv()).map_err(io_err(&csv_path))?;
    let json_path = out_dir.join("fits.json");
    write_atomic(&json_path, &report.fits_json()).map_err(io_err(&json_path))?;
    let mut written = vec![csv_path, json_path];
    if svg {
        let svg_path = out_dir.join("sweep.svg");
        write_atomic(&svg_path, &report.to_svg()).map_err(io_err(&svg_path))?;
        written.push(svg_path);
    }
    print!("{}", report.table());
    print!("{}", verdict_lines(&report));
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn verdict_lines(report: &ComplexityReport) -> String {
    let mut out = String::new();
    for v in report.verdicts() {
        let Some((a, b)) = v.cubic_cmul.zip(v.cubic_cadd) else {
            continue;
        };
        let _ = write!(
            out,
            "{}: cubic (cmul, cadd) = ({a:.6}, {b:.6})",
            v.detector.name()
        );
        for (cm, ca) in report.fits[&v.detector].m_slope_cmul.iter().zip(&report.fits[&v.detector].m_slope_cadd) {
            let _ = write!(out, ", MN^2 slope at N={} = ({:.6}, {:.6})", cm.n, cm.slope_over_n2, ca.slope_over_n2);
        }
        let _ = writeln!(out, " {}", if v.pass { "PASS" } else { "FAIL" });
    }
    out
}

fn load_report(csv: &PathBuf) -> Result<ComplexityReport, Failure> {
    let text = fs::read_to_string(csv).map_err(io_err(csv))?;
    ComplexityReport::from_csv(&text).map_err(|e| Failure::Input(format!("{}: {e}", csv.display())))
}

fn fit(csv: PathBuf, out: Option<PathBuf>) -> Result<(), Failure> {
    let report = load_report(&csv)?;
    let verdicts = report.verdicts();
    if verdicts.iter().all(|v| v.cubic_cmul.is_none()) {
        return Err(Failure::Input(format!(
            "{}: need worst-case rows at four or more N = M sizes",
            csv.display()
        )));
    }
    let json = report.fits_json();
    match out {
        Some(path) => write_atomic(&path, &json).map_err(io_err(&path))?,
        None => print!("{json}"),
    }
    eprint!("{}", verdict_lines(&report));
    if verdicts.iter().all(|v| v.pass) {
        eprintln!("verdict: PASS");
        Ok(())
    } else {
        eprintln!("verdict: FAIL");
        Err(Failure::Check)
    }
}

#[allow(clippy::too_many_arguments)]
fn detect(
    n: usize,
    m: usize,
    seed: u64,
    snr_db: f64,
    detector: DetectorKind,
    alpha: f64,
    log: bool,
) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::Input("N must be >= 1".into()));
    }
    if m < n {
        return Err(Failure::Input(format!("M must be ≥ N (got N={n}, M={m})")));
    }
    let q = Constellation::qpsk();
    let rp = random_problem(m, n, snr_db, alpha, &q, &mut trial_rng(seed, n, m, 0))
        .map_err(|e| Failure::Input(e.to_string()))?;
    let mut ledger = if log { FlopLedger::with_log() } else { FlopLedger::new() };
    let policy = OrderingPolicy::Optimal;
    let got = detector
        .detect(&rp.problem, policy, &mut ledger)
        .map_err(|e| Failure::Detector(format!("{detector}: {e}")))?;
    let reference = detect_oracle_vblast(&rp.problem, policy).map_err(|e| Failure::Detector(format!("reference: {e}")))?;

    let fmt_symbols = |s: &[num_complex::Complex64]| {
        s.iter()
            .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("detector:    {detector} (N={n}, M={m}, seed={seed}, snr={snr_db} dB, alpha={alpha})");
    println!("transmitted: {}", fmt_symbols(&rp.transmitted));
    println!("detected:    {}", fmt_symbols(&got.symbols));
    println!("reference:   {}", fmt_symbols(&reference.symbols));
    println!("order:       {:?} (reference {:?})", got.order, reference.order);
    println!("ledger:      {}", got.ledger);
    if log {
        print!("{}", got.ledger.log_text());
    }
    if got.same_decisions(&reference) {
        println!("EQUAL");
        Ok(())
    } else {
        println!("DIFFER");
        Err(Failure::Check)
    }
}

fn report(csv: PathBuf, svg: Option<PathBuf>) -> Result<(), Failure> {
    let report = load_report(&csv)?;
    print!("{}", report.table());
    print!("{}", verdict_lines(&report));
    if let Some(path) = svg {
        write_atomic(&path, &report.to_svg()).map_err(io_err(&path))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
