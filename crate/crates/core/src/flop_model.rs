//! Operation accounting in units of complex multiplications and complex
//! additions.
//!
//! Every counted kernel charges a closed-form cost per invocation into a
//! [`FlopLedger`]. Complex divisions and real square roots are tallied in
//! separate counters and never enter the `(cmul, cadd)` pair.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest count any ledger counter may reach.
pub const COUNT_LIMIT: u64 = 1 << 62;

/// A `(k, l)` cost: `k` complex multiplications and `l` complex additions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlopPair {
    pub cmul: u64,
    pub cadd: u64,
}

impl FlopPair {
    pub const ZERO: FlopPair = FlopPair { cmul: 0, cadd: 0 };

    pub const fn new(cmul: u64, cadd: u64) -> Self {
        Self { cmul, cadd }
    }

    /// True when both components are `>=` those of `other`.
    pub fn dominates(&self, other: &FlopPair) -> bool {
        self.cmul >= other.cmul && self.cadd >= other.cadd
    }

    fn checked(self, rhs: FlopPair) -> FlopPair {
        FlopPair {
            cmul: bounded_add(self.cmul, rhs.cmul),
            cadd: bounded_add(self.cadd, rhs.cadd),
        }
    }
}

impl Add for FlopPair {
    type Output = FlopPair;

    fn add(self, rhs: FlopPair) -> FlopPair {
        self.checked(rhs)
    }
}

impl AddAssign for FlopPair {
    fn add_assign(&mut self, rhs: FlopPair) {
        *self = self.checked(rhs);
    }
}

impl fmt::Display for FlopPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.cmul, self.cadd)
    }
}

fn bounded_add(a: u64, b: u64) -> u64 {
    match a.checked_add(b) {
        Some(v) if v <= COUNT_LIMIT => v,
        _ => panic!("flop counter exceeded the 2^62 limit ({a} + {b})"),
    }
}

/// One audited kernel invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelEntry {
    pub kernel: String,
    pub sizes: Vec<usize>,
    pub cost: FlopPair,
}

impl KernelEntry {
    /// `kernel,size_params,cmul,cadd`, with size parameters joined by `x`.
    pub fn to_line(&self) -> String {
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        format!("{},{},{},{}", self.kernel, sizes.join("x"), self.cost.cmul, self.cost.cadd)
    }

    pub fn parse_line(line: &str) -> Result<Self, LogParseError> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(LogParseError::FieldCount(fields.len()));
        }
        let kernel = fields[0].trim();
        if kernel.is_empty() {
            return Err(LogParseError::EmptyKernel);
        }
        let sizes = if fields[1].is_empty() {
            Vec::new()
        } else {
            fields[1]
                .split('x')
                .map(|s| s.parse().map_err(|_| LogParseError::Number(s.to_string())))
                .collect::<Result<Vec<usize>, _>>()?
        };
        let num = |s: &str| s.parse::<u64>().map_err(|_| LogParseError::Number(s.to_string()));
        Ok(Self {
            kernel: kernel.to_string(),
            sizes,
            cost: FlopPair::new(num(fields[2])?, num(fields[3])?),
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LogParseError {
    #[error("expected 4 comma-separated fields, found {0}")]
    FieldCount(usize),
    #[error("empty kernel name")]
    EmptyKernel,
    #[error("invalid number `{0}`")]
    Number(String),
}

/// Accumulates kernel costs for one algorithm run.
///
/// A ledger is a plain value: it can be moved across threads and combined
/// with [`FlopLedger::merge`]. There is no global counter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopLedger {
    pair: FlopPair,
    cdiv: u64,
    rsqrt: u64,
    kernel_log: Option<Vec<KernelEntry>>,
}

impl FlopLedger {
    /// Ledger without the kernel log.
    pub fn new() -> Self {
        Self::default()
    }

    /// Ledger that records every charged kernel.
    pub fn with_log() -> Self {
        Self {
            kernel_log: Some(Vec::new()),
            ..Self::default()
        }
    }

    pub fn pair(&self) -> FlopPair {
        self.pair
    }

    pub fn cdiv(&self) -> u64 {
        self.cdiv
    }

    pub fn rsqrt(&self) -> u64 {
        self.rsqrt
    }

    pub fn is_logging(&self) -> bool {
        self.kernel_log.is_some()
    }

    pub fn kernel_log(&self) -> Option<&[KernelEntry]> {
        self.kernel_log.as_deref()
    }

    /// Adds `cost` to the `(cmul, cadd)` pair on behalf of `kernel`.
    pub fn charge(&mut self, kernel: &str, sizes: &[usize], cost: FlopPair) {
        self.pair += cost;
        if let Some(log) = self.kernel_log.as_mut() {
            log.push(KernelEntry {
                kernel: kernel.to_string(),
                sizes: sizes.to_vec(),
                cost,
            });
        }
    }

    pub fn charge_div(&mut self, n: u64) {
        self.cdiv = bounded_add(self.cdiv, n);
    }

    pub fn charge_sqrt(&mut self, n: u64) {
        self.rsqrt = bounded_add(self.rsqrt, n);
    }

    /// Componentwise sum; logs are concatenated (`self` first).
    ///
    /// The result logs only if both inputs log, otherwise the log-sum
    /// invariant could not hold.
    pub fn merge(mut self, other: FlopLedger) -> FlopLedger {
        self.absorb(other);
        self
    }

    pub fn absorb(&mut self, other: FlopLedger) {
        let self_empty = self.pair == FlopPair::ZERO;
        let other_empty = other.pair == FlopPair::ZERO;
        self.pair += other.pair;
        self.cdiv = bounded_add(self.cdiv, other.cdiv);
        self.rsqrt = bounded_add(self.rsqrt, other.rsqrt);
        self.kernel_log = match (self.kernel_log.take(), other.kernel_log) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (Some(a), None) if other_empty => Some(a),
            (None, Some(b)) if self_empty => Some(b),
            _ => None,
        };
    }

    /// Sum of all logged entries whose kernel name equals `kernel`.
    pub fn subtotal(&self, kernel: &str) -> Option<FlopPair> {
        self.kernel_log.as_ref().map(|log| {
            log.iter()
                .filter(|e| e.kernel == kernel)
                .fold(FlopPair::ZERO, |acc, e| acc + e.cost)
        })
    }

    /// Kernel log in the `kernel,size_params,cmul,cadd` line format.
    pub fn log_text(&self) -> String {
        let mut out = String::new();
        for entry in self.kernel_log.iter().flatten() {
            out.push_str(&entry.to_line());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for FlopLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cmul={} cadd={} cdiv={} rsqrt={}",
            self.pair.cmul, self.pair.cadd, self.cdiv, self.rsqrt
        )
    }
}
