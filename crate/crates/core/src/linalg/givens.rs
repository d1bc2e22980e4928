//! Complex Givens rotations `[[c, s], [-s̄, c]]` with real `c` and complex `s`.
//!
//! Applying one rotation to a `(j+1) x 2` block is charged `(3j+3, j+1)`
//! regardless of the data. Computing the rotation itself is charged one
//! square root and one division.

use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError};
use crate::flop_model::{FlopLedger, FlopPair};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensRotation {
    pub c: f64,
    pub s: Complex64,
}

impl GivensRotation {
    pub const IDENTITY: GivensRotation = GivensRotation { c: 1.0, s: ZERO };

    /// Maps `(a, b)` to `(c·a + s·b, −s̄·a + c·b)`.
    #[inline]
    pub fn rotate(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        (self.s * b + a * self.c, b * self.c - self.s.conj() * a)
    }

    pub fn as_matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.c, 0.0), self.s],
            [-self.s.conj(), Complex64::new(self.c, 0.0)],
        ]
    }

    /// Largest entry of `|GᴴG − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.as_matrix();
        let mut err: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let dot: Complex64 = (0..2).map(|k| g[k][i].conj() * g[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((dot - target).norm());
            }
        }
        err
    }
}

/// Rotation sending `(a, b)` to `(r, 0)`.
///
/// `r` carries the phase of `a`; when `a = 0`, `c = 0`, `s = b̄/|b|` and
/// `r = |b|`. Both zero yields the identity with `r = 0`.
pub fn givens_compute(a: Complex64, b: Complex64) -> (GivensRotation, Complex64) {
    let abs_a = a.norm();
    let abs_b = b.norm();
    if abs_b == 0.0 {
        if abs_a == 0.0 {
            return (GivensRotation::IDENTITY, ZERO);
        }
        return (GivensRotation::IDENTITY, a);
    }
    if abs_a == 0.0 {
        return (GivensRotation { c: 0.0, s: b.conj() / abs_b }, Complex64::new(abs_b, 0.0));
    }
    let rho = abs_a.hypot(abs_b);
    let phase = a / abs_a;
    let rot = GivensRotation {
        c: abs_a / rho,
        s: phase * b.conj() / rho,
    };
    (rot, phase * rho)
}

/// Applies `rot` row-wise to the `(j+1) x 2` block `[u v]` in place.
pub fn givens_apply_pair(
    u: &mut [Complex64],
    v: &mut [Complex64],
    rot: &GivensRotation,
    ledger: &mut FlopLedger,
) -> Result<(), LinalgError> {
    if u.len() != v.len() || u.is_empty() {
        return Err(LinalgError::Dimension(format!(
            "rotation pair lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    for (a, b) in u.iter_mut().zip(v.iter_mut()) {
        (*a, *b) = rot.rotate(*a, *b);
    }
    let j = u.len() as u64 - 1;
    ledger.charge("givens_apply", &[j as usize], FlopPair::new(3 * j + 3, j + 1));
    Ok(())
}

fn compute_counted(a: Complex64, b: Complex64, ledger: &mut FlopLedger) -> (GivensRotation, Complex64) {
    ledger.charge_sqrt(1);
    ledger.charge_div(1);
    givens_compute(a, b)
}

/// Restores upper-triangular form of a `k x (k-1)` matrix left with an
/// upper-Hessenberg profile by deleting one column of a triangular factor.
///
/// Rows `c` and `c+1` are rotated left to right for every nonzero
/// subdiagonal entry `t[c+1][c]`; each rotation covers columns `c..k-1` of
/// `t` plus every column of `companion`. Returns the rotation count.
pub fn retriangularize(
    t: &mut ComplexMatrix,
    mut companion: Option<&mut ComplexMatrix>,
    ledger: &mut FlopLedger,
) -> Result<usize, LinalgError> {
    let (rows, cols) = (t.rows(), t.cols());
    if rows != cols + 1 {
        return Err(LinalgError::Dimension(format!(
            "expected a (k)x(k-1) matrix, got {rows}x{cols}"
        )));
    }
    if let Some(comp) = companion.as_deref() {
        if comp.rows() != rows {
            return Err(LinalgError::Dimension(format!(
                "companion has {} rows, expected {rows}",
                comp.rows()
            )));
        }
    }
    for j in 0..cols {
        for i in j + 2..rows {
            if t[(i, j)] != ZERO {
                return Err(LinalgError::MalformedProfile { row: i, col: j });
            }
        }
    }

    let extra = companion.as_deref().map_or(0, ComplexMatrix::cols);
    let mut rotations = 0;
    for c in 0..cols {
        if t[(c + 1, c)] == ZERO {
            continue;
        }
        let (rot, _) = compute_counted(t[(c, c)], t[(c + 1, c)], ledger);
        let mut u: Vec<Complex64> = t.row(c)[c..].to_vec();
        let mut v: Vec<Complex64> = t.row(c + 1)[c..].to_vec();
        if let Some(comp) = companion.as_deref() {
            u.extend_from_slice(comp.row(c));
            v.extend_from_slice(comp.row(c + 1));
        }
        givens_apply_pair(&mut u, &mut v, &rot, ledger)?;
        let width = cols - c;
        for k in 0..width {
            t[(c, c + k)] = u[k];
            t[(c + 1, c + k)] = v[k];
        }
        t[(c + 1, c)] = ZERO;
        if let Some(comp) = companion.as_deref_mut() {
            for k in 0..extra {
                comp[(c, k)] = u[width + k];
                comp[(c + 1, k)] = v[width + k];
            }
        }
        rotations += 1;
    }
    Ok(rotations)
}

/// Result of removing one stream from an inverse factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Deflation {
    /// Upper-triangular `(k-1) x (k-1)` factor of the remaining streams.
    pub factor: ComplexMatrix,
    /// Last column above the diagonal after the sweep (`u`).
    pub coupling: Vec<Complex64>,
    /// Last diagonal entry after the sweep (`x`).
    pub pivot: Complex64,
    pub rotations: usize,
}

/// Removes stream `p` from an upper-triangular `F` with `F Fᴴ = P`.
///
/// Row `p` is moved to the bottom and zeroed left to right by rotating the
/// column pairs `(t, t+1)`, `t = p..k-2`. With the result written as
/// `[F' u; 0 x]`, `F' F'ᴴ` is the error covariance of the other streams
/// once stream `p` is cancelled, and `x·[uᴴ x̄]` is the row of `P` that
/// belongs to stream `p`. Rotation `t` touches rows `0..=t` and the bottom
/// row, so it is charged with `j + 1 = t + 2`.
pub fn deflate_inverse_factor(
    mut f: ComplexMatrix,
    p: usize,
    ledger: &mut FlopLedger,
) -> Result<Deflation, LinalgError> {
    let k = f.rows();
    if !f.is_square() || p >= k {
        return Err(LinalgError::Dimension(format!(
            "cannot remove row {p} from a {}x{} factor",
            f.rows(),
            f.cols()
        )));
    }
    for i in 1..k {
        for j in 0..i {
            if f[(i, j)] != ZERO {
                return Err(LinalgError::MalformedProfile { row: i, col: j });
            }
        }
    }
    f.move_row_to_bottom(p);
    let last = k - 1;
    let mut rotations = 0;
    for t in p..last {
        let (rot, _) = compute_counted(f[(last, t + 1)], f[(last, t)], ledger);
        let rows = (0..=t).chain(std::iter::once(last));
        let (mut u, mut v): (Vec<Complex64>, Vec<Complex64>) =
            rows.clone().map(|i| (f[(i, t + 1)], f[(i, t)])).unzip();
        givens_apply_pair(&mut u, &mut v, &rot, ledger)?;
        for (idx, i) in rows.enumerate() {
            f[(i, t + 1)] = u[idx];
            f[(i, t)] = v[idx];
        }
        f[(last, t)] = ZERO;
        rotations += 1;
    }
    let pivot = f[(last, last)];
    let coupling = (0..last).map(|i| f[(i, last)]).collect();
    Ok(Deflation {
        factor: f.leading(last, last),
        coupling,
        pivot,
        rotations,
    })
}
