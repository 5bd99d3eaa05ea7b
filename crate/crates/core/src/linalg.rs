//! Dense complex matrices small enough for per-link covariances.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::{Error, Result, C64};

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn scaled_identity(n: usize, s: C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = s;
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(alloc::format!("{} entries for {n}x{n}", data.len())));
        }
        Ok(CMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Adds `scale * x y^H`.
    pub fn add_outer(&mut self, x: &[C64], y: &[C64], scale: f64) {
        for (row, xi) in self.data.chunks_mut(self.n).zip(x) {
            for (d, yj) in row.iter_mut().zip(y) {
                *d += xi * yj.conj() * scale;
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.data[j * self.n + i] = self.data[i * self.n + j].conj();
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol)
        })
    }

    /// Solves `self * x = b` for Hermitian positive definite `self` by
    /// Cholesky factorization.
    pub fn cholesky_solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Dimension(alloc::format!("rhs of length {} for {n}x{n}", b.len())));
        }
        // Lower factor, self = L L^H.
        let mut l = vec![C64::new(0.0, 0.0); n * n];
        let scale = self.diagonal().iter().map(|d| d.re.abs()).fold(0.0, f64::max);
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > scale * 1e-14) {
                return Err(Error::Singular);
            }
            let d = d.sqrt();
            l[j * n + j] = C64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        // L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        // L^H x = y
        let mut x = y;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i].conj() * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Ok(x)
    }
}
