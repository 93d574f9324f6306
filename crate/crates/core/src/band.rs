//! Banded complex matrices and a partial-pivoting LU solve.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored as windows of width `2·kl + ku + 1` starting at column
/// `row − kl`; the extra `kl` columns hold fill-in from row interchanges.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![Complex64::new(0.0, 0.0); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn in_band(&self, row: usize, col: usize) -> bool {
        col + self.kl >= row && col <= row + self.ku
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        row * self.width + (col + self.kl - row)
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if row < self.n && col < self.n && self.in_band(row, col) {
            self.data[self.slot(row, col)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Adds `v` at `(row, col)`; panics outside the declared band.
    pub fn add(&mut self, row: usize, col: usize, v: Complex64) {
        assert!(
            row < self.n && col < self.n && self.in_band(row, col),
            "({row}, {col}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(row, col);
        self.data[s] += v;
    }

    /// Zeroes a row's band and puts `entries` into it.
    pub fn set_row(&mut self, row: usize, entries: &[(usize, Complex64)]) {
        let start = row * self.width;
        for v in &mut self.data[start..start + self.width] {
            *v = Complex64::new(0.0, 0.0);
        }
        for &(col, v) in entries {
            self.add(row, col, v);
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|col| self.get(r, col) * x[col]).sum()
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting, consuming the matrix.
    pub fn solve(mut self, mut rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let reach = self.kl + self.ku;
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut piv = k;
            let mut best = self.get(k, k).norm();
            for r in k + 1..=last_row {
                let v = self.get(r, k).norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= 1e-3 * f64::EPSILON * scale {
                return Err(Error::SingularSystem { cutoff: k });
            }
            let last_col = (k + reach).min(n - 1);
            if piv != k {
                for col in k..=last_col {
                    let (a, b) = (self.slot(k, col), self.slot(piv, col));
                    self.data.swap(a, b);
                }
                rhs.swap(k, piv);
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let sr = self.slot(r, k);
                let factor = self.data[sr] / pivot;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                self.data[sr] = Complex64::new(0.0, 0.0);
                for col in k + 1..=last_col {
                    let v = self.data[self.slot(k, col)];
                    let s = self.slot(r, col);
                    self.data[s] -= factor * v;
                }
                let rk = rhs[k];
                rhs[r] -= factor * rk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut acc = rhs[k];
            #[allow(clippy::needless_range_loop)]
            for col in k + 1..=last_col {
                acc -= self.data[self.slot(k, col)] * rhs[col];
            }
            rhs[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(rhs)
    }
}
