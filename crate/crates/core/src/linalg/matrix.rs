use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LinalgError;

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{rows}x{cols} matrix cannot hold {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Plain product, not counted; used for checks and test oracles.
    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).map(|l| self[(i, l)] * rhs[(l, j)]).sum()
        }))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::Dimension(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Largest entrywise `|self - other|`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Copy of the leading `rows x cols` block.
    pub fn leading(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(i, j)])
    }

    /// Copy of the trailing square block starting at `(start, start)`.
    pub fn trailing(&self, start: usize) -> Self {
        Self::from_fn(self.rows - start, self.cols - start, |i, j| self[(i + start, j + start)])
    }

    /// Copy with column `j` removed.
    pub fn without_column(&self, j: usize) -> Self {
        Self::from_fn(self.rows, self.cols - 1, |r, c| self[(r, if c < j { c } else { c + 1 })])
    }

    /// Moves row `p` to the last position, shifting the rows below it up.
    pub fn move_row_to_bottom(&mut self, p: usize) {
        let c = self.cols;
        self.data[p * c..].rotate_left(c);
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shape_is_checked() {
        assert!(ComplexMatrix::from_row_major(2, 2, vec![c(1.0, 0.0); 3]).is_err());
        assert!(ComplexMatrix::from_row_major(0, 2, vec![]).is_err());
    }

    #[test]
    fn move_row_to_bottom_shifts_rows() {
        let mut m = ComplexMatrix::from_fn(3, 2, |i, j| c((10 * i + j) as f64, 0.0));
        m.move_row_to_bottom(0);
        assert_eq!(m.column(0), vec![c(10.0, 0.0), c(20.0, 0.0), c(0.0, 0.0)]);
        m.move_row_to_bottom(2);
        assert_eq!(m.column(0), vec![c(10.0, 0.0), c(20.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn nalgebra_round_trip() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        assert_eq!(ComplexMatrix::from_nalgebra(&m.to_nalgebra()), m);
    }

    #[test]
    fn display_is_one_line_per_row() {
        let text = ComplexMatrix::identity(2).to_string();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("+1.000000+0.000000i"));
    }
}
