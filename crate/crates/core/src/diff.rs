//! Periodic forward-difference transforms and the functionals built on them.
//!
//! `d_v` differences down columns, `[d_v x]_{i,j} = x_{i+1,j} - x_{i,j}`, and
//! `d_h` across rows, `[d_h x]_{i,j} = x_{i,j+1} - x_{i,j}`, with indices
//! taken modulo `n`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, Zip};

use crate::error::Result;
use crate::image::{check_same_size, Image};
use crate::mask::MaskPair;

/// The `n x n` periodic difference matrix: `-1` on the diagonal, `+1` on the
/// superdiagonal and `+1` in the bottom-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DifferenceMatrix {
    n: usize,
}

impl DifferenceMatrix {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "difference matrix needs n >= 1");
        DifferenceMatrix { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `w_i = v_{i+1} - v_i`, wrapping at the end.
    pub fn apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(v.len(), self.n);
        let n = self.n;
        Array1::from_shape_fn(n, |i| v[(i + 1) % n] - v[i])
    }

    /// Dense realization; test surface only.
    pub fn dense(&self) -> Array2<f64> {
        assert!(self.n <= 16, "dense difference matrix is limited to n <= 16");
        let n = self.n;
        let mut d = Array2::zeros((n, n));
        for i in 0..n {
            d[[i, i]] -= 1.0;
            d[[i, (i + 1) % n]] += 1.0;
        }
        d
    }
}

pub fn d_v(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    Array2::from_shape_fn(x.dim(), |(i, j)| x[[(i + 1) % n, j]] - x[[i, j]])
}

pub fn d_h(x: &Array2<f64>) -> Array2<f64> {
    let n = x.ncols();
    Array2::from_shape_fn(x.dim(), |(i, j)| x[[i, (j + 1) % n]] - x[[i, j]])
}

pub fn d_v_adjoint(y: &Array2<f64>) -> Array2<f64> {
    let n = y.nrows();
    Array2::from_shape_fn(y.dim(), |(i, j)| y[[(i + n - 1) % n, j]] - y[[i, j]])
}

pub fn d_h_adjoint(y: &Array2<f64>) -> Array2<f64> {
    let n = y.ncols();
    Array2::from_shape_fn(y.dim(), |(i, j)| y[[i, (j + n - 1) % n]] - y[[i, j]])
}

/// Vertical and horizontal difference fields of an image.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    pub vertical: Array2<f64>,
    pub horizontal: Array2<f64>,
}

impl EdgeMap {
    pub fn of(image: &Image) -> Self {
        EdgeMap {
            vertical: d_v(image.pixels()),
            horizontal: d_h(image.pixels()),
        }
    }

    pub fn n(&self) -> usize {
        self.vertical.nrows()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        EdgeMap {
            vertical: &self.vertical * alpha,
            horizontal: &self.horizontal * alpha,
        }
    }
}

/// Isotropic total variation with periodic wrap on both axes.
pub fn tv_iso(x: &Array2<f64>) -> f64 {
    let dv = d_v(x);
    let dh = d_h(x);
    Zip::from(&dv)
        .and(&dh)
        .fold(0.0, |acc, &a, &b| acc + (a * a + b * b).sqrt())
}

/// `||M_v . D_v x||^2 + ||M_h . D_h x||^2`.
pub fn masked_quadratic(x: &Array2<f64>, masks: &MaskPair) -> Result<f64> {
    check_same_size(masks.n(), x.nrows())?;
    let weighted = |field: Array2<f64>, mask: &Array2<u8>| {
        Zip::from(&field)
            .and(mask)
            .fold(0.0, |acc, &d, &m| acc + f64::from(m) * d * d)
    };
    Ok(weighted(d_v(x), &masks.vertical) + weighted(d_h(x), &masks.horizontal))
}

/// Eigenvalues of `D_v^T D_v + D_h^T D_h` in storage order of the DFT grid.
pub fn laplacian_symbol(n: usize) -> Array2<f64> {
    let axis: Vec<f64> = (0..n)
        .map(|k| {
            let s = (PI * k as f64 / n as f64).sin();
            4.0 * s * s
        })
        .collect();
    Array2::from_shape_fn((n, n), |(p, q)| axis[p] + axis[q])
}
