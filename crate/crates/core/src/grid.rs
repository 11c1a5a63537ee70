//! Column-major complex matrices used for frequency-time grids.
//!
//! Column `i` holds OFDM symbol `i`, so per-symbol processing works on
//! contiguous slices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CGrid {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self {
            rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn col(&self, c: usize) -> &[C64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Squared Frobenius norm of `self - other`.
    pub fn distance_sqr(&self, other: &CGrid) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Selects a subset of rows, keeping column order.
    pub fn select_rows(&self, rows: &[usize]) -> CGrid {
        CGrid::from_fn(rows.len(), self.cols, |r, c| self.get(rows[r], c))
    }

    /// Real/imaginary stacking: row `r` of the result is `Re` for `r < rows`
    /// and `Im` of row `r - rows` otherwise. Output is column-major
    /// `(2 * rows) x cols`.
    pub fn stack_real(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.data.len());
        for c in 0..self.cols {
            out.extend(self.col(c).iter().map(|z| z.re));
            out.extend(self.col(c).iter().map(|z| z.im));
        }
        out
    }

    pub fn unstack_real(rows: usize, cols: usize, stacked: &[f64]) -> CGrid {
        assert_eq!(stacked.len(), 2 * rows * cols);
        CGrid::from_fn(rows, cols, |r, c| {
            let base = c * 2 * rows;
            C64::new(stacked[base + r], stacked[base + rows + r])
        })
    }
}

/// `[Re(h); Im(h)]` for one symbol.
pub fn stack_vec(h: &[C64]) -> Vec<f64> {
    h.iter()
        .map(|z| z.re)
        .chain(h.iter().map(|z| z.im))
        .collect()
}

pub fn unstack_vec(v: &[f64]) -> Vec<C64> {
    let n = v.len() / 2;
    (0..n).map(|k| C64::new(v[k], v[n + k])).collect()
}
