use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fit::{
    fit_polynomial, fit_quadratic_in_m, within_relative, FitError, MSlopeFit, FIT_TOLERANCE, TARGET_CUBIC_CADD,
    TARGET_CUBIC_CMUL, TARGET_M_SLOPE,
};
use super::SizePoint;
use crate::detectors::DetectorKind;
use crate::flop_model::FlopPair;

pub const CSV_HEADER: [&str; 11] = [
    "detector", "N", "M", "mode", "trials", "seed", "alpha", "cmul", "cadd", "cmul_std", "cadd_std",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed CSV line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error("CSV header must be `{}`", CSV_HEADER.join(","))]
    Header,
    #[error("CSV has no data rows")]
    Empty,
    #[error("fit for {detector}: {source}")]
    Fit { detector: DetectorKind, source: FitError },
}

/// Mean and sample standard deviation of the per-trial counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageCost {
    pub trials: usize,
    pub cmul: f64,
    pub cadd: f64,
    pub cmul_std: f64,
    pub cadd_std: f64,
}

impl AverageCost {
    pub fn from_pairs(pairs: &[FlopPair]) -> Self {
        let (cmul, cmul_std) = mean_std(pairs.iter().map(|p| p.cmul as f64));
        let (cadd, cadd_std) = mean_std(pairs.iter().map(|p| p.cadd as f64));
        Self {
            trials: pairs.len(),
            cmul,
            cadd,
            cmul_std,
            cadd_std,
        }
    }

    /// Componentwise `mean ≤ worst`.
    pub fn bounded_by(&self, worst: FlopPair) -> bool {
        self.cmul <= worst.cmul as f64 && self.cadd <= worst.cadd as f64
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Results for one detector at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub detector: DetectorKind,
    pub size: SizePoint,
    pub worst: Option<FlopPair>,
    /// `givens_apply` subtotal of the worst-case run, when it was logged.
    pub worst_rotations: Option<FlopPair>,
    pub average: Option<AverageCost>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub trials: usize,
    pub alpha: f64,
    pub snr_db: Option<f64>,
    pub version: String,
}

/// Fitted worst-case coefficients of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorFit {
    /// Cubic in `N` over the `M = N` sizes, highest power first.
    pub cmul: Option<Vec<f64>>,
    pub cadd: Option<Vec<f64>>,
    /// Rotation subtotal cubic, when available.
    pub rotation_cmul: Option<Vec<f64>>,
    pub rotation_cadd: Option<Vec<f64>>,
    /// Linear fits in `M` for every `N` swept at two or more `M`.
    pub m_slope_cmul: Vec<MSlopeFit>,
    pub m_slope_cadd: Vec<MSlopeFit>,
}

impl DetectorFit {
    pub fn leading(&self) -> Option<(f64, f64)> {
        Some((self.cmul.as_ref()?[0], self.cadd.as_ref()?[0]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitVerdict {
    pub detector: DetectorKind,
    pub cubic_cmul: Option<f64>,
    pub cubic_cadd: Option<f64>,
    pub cubic_ok: bool,
    /// `None` when no `M` sweep was present.
    pub m_slope_ok: Option<bool>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub detector: DetectorKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub mode: String,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub cmul: f64,
    pub cadd: f64,
    pub cmul_std: f64,
    pub cadd_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub metadata: ReportMetadata,
    pub sizes: Vec<SizeSummary>,
    pub fits: BTreeMap<DetectorKind, DetectorFit>,
}

impl ComplexityReport {
    /// Builds a report and fits every detector that has enough worst-case
    /// data.
    pub fn assemble(metadata: ReportMetadata, sizes: Vec<SizeSummary>) -> Result<Self, ReportError> {
        let mut report = Self {
            metadata,
            sizes,
            fits: BTreeMap::new(),
        };
        let detectors: BTreeSet<DetectorKind> = report.sizes.iter().map(|s| s.detector).collect();
        for d in detectors {
            let fit = report.fit_detector(d).map_err(|source| ReportError::Fit { detector: d, source })?;
            report.fits.insert(d, fit);
        }
        Ok(report)
    }

    pub fn summary(&self, detector: DetectorKind, size: SizePoint) -> Option<&SizeSummary> {
        self.sizes.iter().find(|s| s.detector == detector && s.size == size)
    }

    fn fit_detector(&self, d: DetectorKind) -> Result<DetectorFit, FitError> {
        let worst: Vec<(SizePoint, FlopPair, Option<FlopPair>)> = self
            .sizes
            .iter()
            .filter(|s| s.detector == d)
            .filter_map(|s| s.worst.map(|w| (s.size, w, s.worst_rotations)))
            .collect();
        let square: Vec<_> = worst.iter().filter(|(s, ..)| s.n == s.m).collect();
        let cubic = |pick: &dyn Fn(&FlopPair) -> u64, pts: &[(f64, FlopPair)]| -> Result<Option<Vec<f64>>, FitError> {
            if pts.len() < 4 {
                return Ok(None);
            }
            let xy: Vec<(f64, f64)> = pts.iter().map(|(x, p)| (*x, pick(p) as f64)).collect();
            fit_polynomial(&xy, 3).map(Some)
        };
        let totals: Vec<(f64, FlopPair)> = square.iter().map(|(s, w, _)| (s.n as f64, *w)).collect();
        let rotations: Vec<(f64, FlopPair)> =
            square.iter().filter_map(|(s, _, r)| r.map(|r| (s.n as f64, r))).collect();
        let rotations = if rotations.len() == square.len() { rotations } else { Vec::new() };

        let mut by_n: BTreeMap<usize, Vec<(f64, FlopPair)>> = BTreeMap::new();
        for (s, w, _) in &worst {
            by_n.entry(s.n).or_default().push((s.m as f64, *w));
        }
        let mut m_slope_cmul = Vec::new();
        let mut m_slope_cadd = Vec::new();
        for (n, pts) in by_n.into_iter().filter(|(_, p)| p.len() >= 2) {
            let cm: Vec<(f64, f64)> = pts.iter().map(|(m, p)| (*m, p.cmul as f64)).collect();
            let ca: Vec<(f64, f64)> = pts.iter().map(|(m, p)| (*m, p.cadd as f64)).collect();
            m_slope_cmul.push(fit_quadratic_in_m(n, &cm)?);
            m_slope_cadd.push(fit_quadratic_in_m(n, &ca)?);
        }

        Ok(DetectorFit {
            cmul: cubic(&|p| p.cmul, &totals)?,
            cadd: cubic(&|p| p.cadd, &totals)?,
            rotation_cmul: cubic(&|p| p.cmul, &rotations)?,
            rotation_cadd: cubic(&|p| p.cadd, &rotations)?,
            m_slope_cmul,
            m_slope_cadd,
        })
    }

    /// Pass/fail of every fitted detector against the `(4/3, 1)` cubic and
    /// `½` MN² targets.
    pub fn verdicts(&self) -> Vec<FitVerdict> {
        self.fits
            .iter()
            .map(|(&detector, fit)| {
                let (cubic_cmul, cubic_cadd) = match fit.leading() {
                    Some((a, b)) => (Some(a), Some(b)),
                    None => (None, None),
                };
                let cubic_ok = matches!((cubic_cmul, cubic_cadd), (Some(a), Some(b))
                    if within_relative(a, TARGET_CUBIC_CMUL, FIT_TOLERANCE)
                        && within_relative(b, TARGET_CUBIC_CADD, FIT_TOLERANCE));
                let slopes: Vec<&MSlopeFit> = fit.m_slope_cmul.iter().chain(&fit.m_slope_cadd).collect();
                let m_slope_ok = (!slopes.is_empty()).then(|| {
                    slopes
                        .iter()
                        .all(|s| within_relative(s.slope_over_n2, TARGET_M_SLOPE, FIT_TOLERANCE))
                });
                FitVerdict {
                    detector,
                    cubic_cmul,
                    cubic_cadd,
                    cubic_ok,
                    m_slope_ok,
                    pass: cubic_ok && m_slope_ok.unwrap_or(true),
                }
            })
            .collect()
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut rows = Vec::new();
        let row = |s: &SizeSummary, mode: &str, trials, cmul, cadd, cmul_std, cadd_std| CsvRow {
            detector: s.detector,
            n: s.size.n,
            m: s.size.m,
            mode: mode.to_string(),
            trials,
            seed: self.metadata.seed,
            alpha: self.metadata.alpha,
            cmul,
            cadd,
            cmul_std,
            cadd_std,
        };
        for s in &self.sizes {
            if let Some(w) = s.worst {
                rows.push(row(s, "worst", super::WORST_CASE_CHANNELS, w.cmul as f64, w.cadd as f64, 0.0, 0.0));
            }
            if let Some(a) = s.average {
                rows.push(row(s, "average", a.trials, a.cmul, a.cadd, a.cmul_std, a.cadd_std));
            }
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        for r in self.csv_rows() {
            w.serialize(r).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
    }

    /// Rebuilds a report (without rotation subtotals or SNR) from
    /// [`ComplexityReport::to_csv`] output.
    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        if reader.headers()?.iter().ne(CSV_HEADER) {
            return Err(ReportError::Header);
        }
        let mut sizes: Vec<SizeSummary> = Vec::new();
        let mut metadata: Option<ReportMetadata> = None;
        for record in reader.deserialize::<CsvRow>() {
            let r = record?;
            let line = sizes.len() as u64 + 2;
            let bad = |reason: String| ReportError::Row { line, reason };
            if r.n == 0 || r.m < r.n {
                return Err(bad(format!("need M >= N >= 1, got N={} M={}", r.n, r.m)));
            }
            let numbers = [r.alpha, r.cmul, r.cadd, r.cmul_std, r.cadd_std];
            if numbers.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(bad("counts must be finite and non-negative".into()));
            }
            let meta = metadata.get_or_insert_with(|| ReportMetadata {
                seed: r.seed,
                trials: r.trials,
                alpha: r.alpha,
                snr_db: None,
                version: env!("CARGO_PKG_VERSION").to_string(),
            });
            let size = SizePoint { n: r.n, m: r.m };
            let idx = match sizes.iter().position(|s| s.detector == r.detector && s.size == size) {
                Some(i) => i,
                None => {
                    sizes.push(SizeSummary {
                        detector: r.detector,
                        size,
                        worst: None,
                        worst_rotations: None,
                        average: None,
                    });
                    sizes.len() - 1
                }
            };
            let entry = &mut sizes[idx];
            match r.mode.as_str() {
                "worst" => {
                    if r.cmul.fract() != 0.0 || r.cadd.fract() != 0.0 {
                        return Err(bad("worst-case counts must be integers".into()));
                    }
                    if entry.worst.replace(FlopPair::new(r.cmul as u64, r.cadd as u64)).is_some() {
                        return Err(bad(format!("duplicate worst row for {} at {size}", r.detector)));
                    }
                }
                "average" => {
                    meta.trials = r.trials;
                    let avg = AverageCost {
                        trials: r.trials,
                        cmul: r.cmul,
                        cadd: r.cadd,
                        cmul_std: r.cmul_std,
                        cadd_std: r.cadd_std,
                    };
                    if entry.average.replace(avg).is_some() {
                        return Err(bad(format!("duplicate average row for {} at {size}", r.detector)));
                    }
                }
                other => return Err(bad(format!("unknown mode `{other}`"))),
            }
        }
        let metadata = metadata.ok_or(ReportError::Empty)?;
        Self::assemble(metadata, sizes)
    }

    /// Fits and verdicts as a JSON object keyed by detector name.
    pub fn fits_json(&self) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            #[serde(flatten)]
            fit: &'a DetectorFit,
            verdict: &'a FitVerdict,
        }
        let verdicts = self.verdicts();
        let map: BTreeMap<&str, Entry> = self
            .fits
            .iter()
            .zip(&verdicts)
            .map(|((d, fit), verdict)| (d.name(), Entry { fit, verdict }))
            .collect();
        let mut s = serde_json::to_string_pretty(&map).expect("fits serialize");
        s.push('\n');
        s
    }

    /// Plain-text table of the per-size counts.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<11} {:>5} {:>5} {:>14} {:>14} {:>14} {:>14}",
            "detector", "N", "M", "worst_cmul", "worst_cadd", "avg_cmul", "avg_cadd"
        );
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        for s in &self.sizes {
            let _ = writeln!(
                out,
                "{:<11} {:>5} {:>5} {:>14} {:>14} {:>14} {:>14}",
                s.detector.name(),
                s.size.n,
                s.size.m,
                opt(s.worst.map(|w| w.cmul.to_string())),
                opt(s.worst.map(|w| w.cadd.to_string())),
                opt(s.average.map(|a| format!("{:.1}", a.cmul))),
                opt(s.average.map(|a| format!("{:.1}", a.cadd))),
            );
        }
        out
    }

    /// Line chart of worst and average multiplications against `N` for the
    /// `M = N` sizes, log-scaled counts.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 420.0;
        const LEFT: f64 = 70.0;
        const RIGHT: f64 = 150.0;
        const TOP: f64 = 30.0;
        const BOTTOM: f64 = 50.0;
        const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

        // (label, dashed, points)
        type Series = (String, bool, Vec<(f64, f64)>);
        let mut series: Vec<Series> = Vec::new();
        let detectors: BTreeSet<DetectorKind> = self.sizes.iter().map(|s| s.detector).collect();
        for d in &detectors {
            let square = || self.sizes.iter().filter(move |s| s.detector == *d && s.size.n == s.size.m);
            let worst: Vec<_> = square().filter_map(|s| s.worst.map(|w| (s.size.n as f64, w.cmul as f64))).collect();
            let avg: Vec<_> = square().filter_map(|s| s.average.map(|a| (s.size.n as f64, a.cmul))).collect();
            series.push((format!("{} worst", d.name()), false, worst));
            series.push((format!("{} average", d.name()), true, avg));
        }
        series.retain(|s| !s.2.is_empty());
        let pts = series.iter().flat_map(|s| s.2.iter().copied());
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y.max(1.0));
            ymax = ymax.max(y.max(1.0));
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        if series.is_empty() {
            out.push_str("</svg>\n");
            return out;
        }
        if xmax == xmin {
            xmax = xmin + 1.0;
        }
        let (lo, hi) = (ymin.log10().floor(), ymax.log10().ceil().max(ymin.log10().floor() + 1.0));
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * pw;
        let sy = |y: f64| TOP + ph - (y.max(1.0).log10() - lo) / (hi - lo) * ph;

        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for e in (lo as i32)..=(hi as i32) {
            let y = sy(10f64.powi(e));
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let ns: BTreeSet<u64> = series.iter().flat_map(|s| s.2.iter().map(|p| p.0 as u64)).collect();
        for n in ns {
            let x = sx(n as f64);
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#,
                TOP + ph + 18.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">N = M</text>"#,
            LEFT + pw / 2.0,
            H - 10.0
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">complex multiplications</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0
        );
        for (i, (label, dashed, points)) in series.iter().enumerate() {
            let color = COLORS[(i / 2) % COLORS.len()];
            let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                path.join(" ")
            );
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 10.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}">{label}</text>"#,
                lx + 24.0,
                lx + 30.0,
                ly + 4.0
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
