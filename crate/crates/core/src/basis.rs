//! Orthonormal scaled-Legendre basis on a moving cell.
//!
//! On a cell [x_L, x_R] of width h the basis is
//! `B_i(x) = sqrt(2i + 1) / sqrt(h) * P_i(z)` with `z = (2x - x_L - x_R) / h`.
//! The element matrices below are closed forms in (h, v_L, v_R):
//!
//! * gradient `L_ij = int B_j dB_i/dx dx = 2 s_i s_j / h` for j < i, i - j odd;
//! * motion `G_ij = int B_j dB_i/dt dx` (time derivative at fixed x) with
//!   `G_ii = -(2i + 1)(v_R - v_L) / (2h)`, and for j < i
//!   `-s_i s_j (v_L + v_R) / h` when i - j is odd, `-s_i s_j (v_R - v_L) / h`
//!   when i - j is even,
//!
//! where `s_i = sqrt(2i + 1)`. Both are lower triangular.

use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use libm::sqrt;

use crate::error::{Error, Result};

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).map(|j| self[(i, j)] * v[j]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// sqrt(2i + 1)
#[inline]
pub fn norm_factor(i: usize) -> f64 {
    sqrt((2 * i + 1) as f64)
}

/// Writes P_0(z) .. P_m(z) into `out[..=m]`.
pub fn legendre_values(z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = z;
    }
    for k in 2..out.len() {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * z * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Basis of degree `order` on one cell with its edge velocities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellBasis {
    pub order: usize,
    pub x_left: f64,
    pub x_right: f64,
    pub v_left: f64,
    pub v_right: f64,
}

impl CellBasis {
    pub fn new(order: usize, x_left: f64, x_right: f64, v_left: f64, v_right: f64) -> Result<Self> {
        if !(x_right > x_left) {
            return Err(Error::InvalidMesh {
                index: 0,
                left: x_left,
                right: x_right,
            });
        }
        Ok(Self {
            order,
            x_left,
            x_right,
            v_left,
            v_right,
        })
    }

    pub fn fixed(order: usize, x_left: f64, x_right: f64) -> Result<Self> {
        Self::new(order, x_left, x_right, 0.0, 0.0)
    }

    pub fn width(&self) -> f64 {
        self.x_right - self.x_left
    }

    /// Maps a position to the reference coordinate z in [-1, 1].
    pub fn to_reference(&self, x: f64) -> f64 {
        (2.0 * x - self.x_left - self.x_right) / self.width()
    }

    pub fn to_physical(&self, z: f64) -> f64 {
        0.5 * (self.x_left + self.x_right) + 0.5 * self.width() * z
    }

    /// B_i evaluated at position `x` inside the cell.
    pub fn eval(&self, i: usize, x: f64) -> Result<f64> {
        if i > self.order {
            return Err(Error::InvalidArgument("moment index exceeds basis order"));
        }
        if !(x >= self.x_left && x <= self.x_right) {
            return Err(Error::OutOfDomain {
                value: x,
                lower: self.x_left,
                upper: self.x_right,
            });
        }
        let mut p = alloc::vec![0.0; i + 1];
        legendre_values(self.to_reference(x), &mut p);
        Ok(norm_factor(i) / sqrt(self.width()) * p[i])
    }

    /// Writes B_0 .. B_M at reference coordinate z into `out`.
    pub fn eval_all_reference(&self, z: f64, out: &mut [f64]) {
        legendre_values(z, &mut out[..=self.order]);
        let scale = 1.0 / sqrt(self.width());
        for (i, v) in out.iter_mut().enumerate().take(self.order + 1) {
            *v *= norm_factor(i) * scale;
        }
    }

    /// `L_ij = int B_j dB_i/dx dx`.
    pub fn gradient_matrix(&self) -> SquareMatrix {
        let n = self.order + 1;
        let h = self.width();
        let mut l = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in (0..i).filter(|j| (i - j) % 2 == 1) {
                l[(i, j)] = 2.0 * norm_factor(i) * norm_factor(j) / h;
            }
        }
        l
    }

    /// `G_ij = int B_j dB_i/dt dx` for the moving cell.
    pub fn motion_matrix(&self) -> SquareMatrix {
        let n = self.order + 1;
        let h = self.width();
        let stretch = self.v_right - self.v_left;
        let drift = self.v_left + self.v_right;
        let mut g = SquareMatrix::zeros(n);
        for i in 0..n {
            g[(i, i)] = -((2 * i + 1) as f64) * stretch / (2.0 * h);
            for j in 0..i {
                let rate = if (i - j) % 2 == 1 { drift } else { stretch };
                g[(i, j)] = -norm_factor(i) * norm_factor(j) * rate / h;
            }
        }
        g
    }

    /// Values of B_i at z = -1 and z = +1, as (left, right) vectors.
    pub fn edge_traces(&self) -> (Vec<f64>, Vec<f64>) {
        let scale = 1.0 / sqrt(self.width());
        let right: Vec<f64> = (0..=self.order).map(|i| norm_factor(i) * scale).collect();
        let left = right
            .iter()
            .enumerate()
            .map(|(i, &b)| if i % 2 == 0 { b } else { -b })
            .collect();
        (left, right)
    }
}
