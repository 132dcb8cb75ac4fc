//! Symmetric banded matrices and their Cholesky factorization.
//!
//! Only the lower band is stored, row by row: entry `(i, i - d)` for
//! `d = 0..=bandwidth` lives at `i * (bandwidth + 1) + d`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn identity(n: usize, bandwidth: usize) -> Self {
        let mut m = Self::zeros(n, bandwidth);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Symmetric Toeplitz matrix with `stencil[d]` on the `d`-th off-diagonal.
    pub fn toeplitz(n: usize, stencil: &[f64]) -> Self {
        let bandwidth = stencil.len().saturating_sub(1);
        let mut m = Self::zeros(n, bandwidth);
        for i in 0..n {
            for (d, &c) in stencil.iter().enumerate() {
                if d <= i {
                    m.data[i * (bandwidth + 1) + d] = c;
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        (d <= self.bandwidth && r < self.n).then(|| r * (self.bandwidth + 1) + d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.index(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Sets the symmetric pair `(i, j)`, `(j, i)`.
    ///
    /// Panics if the entry lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j).expect("entry outside the band");
        self.data[k] = value;
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.n);
        for (i, &d) in diag.iter().enumerate() {
            self.data[i * (self.bandwidth + 1)] += d;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            bandwidth: self.bandwidth,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self + factor * other`; both matrices must have the same shape.
    pub fn plus_scaled(&self, factor: f64, other: &SymBanded) -> Self {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bandwidth, other.bandwidth);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + factor * b)
            .collect();
        Self {
            n: self.n,
            bandwidth: self.bandwidth,
            data,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let w = self.bandwidth + 1;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for d in 1..w.min(i + 1) {
                let j = i - d;
                y[i] += row[d] * x[j];
                y[j] += row[d] * x[i];
            }
        }
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let w = self.bandwidth + 1;
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            acc += row[0] * x[i] * x[i];
            for d in 1..w.min(i + 1) {
                acc += 2.0 * row[d] * x[i] * x[i - d];
            }
        }
        acc
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        BandedCholesky::factor(self)
    }
}

/// Lower-triangular factor `L` with `A = L L^T`, same band layout as [`SymBanded`].
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SymBanded) -> Result<Self> {
        let n = a.n;
        let bw = a.bandwidth;
        let w = bw + 1;
        let mut l = a.data.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // l[i][j] lives at offset d = i - j in row i
                let mut s = l[i * w + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Numerical(format!(
                            "banded Cholesky: non-positive pivot {s} at row {i}"
                        )));
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(Self {
            n,
            bandwidth: bw,
            data: l,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let w = self.bandwidth + 1;
        for i in 0..self.n {
            let mut s = b[i];
            for d in 1..w.min(i + 1) {
                s -= self.data[i * w + d] * b[i - d];
            }
            b[i] = s / self.data[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for d in 1..w.min(self.n - i) {
                s -= self.data[(i + d) * w + d] * b[i + d];
            }
            b[i] = s / self.data[i * w];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
