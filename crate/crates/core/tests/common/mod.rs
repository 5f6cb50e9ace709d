//! Independent reference implementations used as test oracles. Nothing here
//! calls into the code paths being checked.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0))
}

pub fn random_mask(n: usize, rng: &mut ChaCha8Rng) -> Array2<u8> {
    Array2::from_shape_fn((n, n), |_| u8::from(rng.gen_bool(0.7)))
}

pub fn frob(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &Array2<f64>) -> f64 {
    frob(a, a).sqrt()
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Modified Shepp-Logan ellipses `(x0, y0, a, b, degrees, delta)`, typed in
/// separately from the library table.
pub const ELLIPSES: [[f64; 6]; 10] = [
    [0.0, 0.0, 0.69, 0.92, 0.0, 1.0],
    [0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8],
    [0.22, 0.0, 0.11, 0.31, -18.0, -0.2],
    [-0.22, 0.0, 0.16, 0.41, 18.0, -0.2],
    [0.0, 0.35, 0.21, 0.25, 0.0, 0.1],
    [0.0, 0.1, 0.046, 0.046, 0.0, 0.1],
    [0.0, -0.1, 0.046, 0.046, 0.0, 0.1],
    [-0.08, -0.605, 0.046, 0.023, 0.0, 0.1],
    [0.0, -0.606, 0.023, 0.023, 0.0, 0.1],
    [0.06, -0.605, 0.023, 0.046, 0.0, 0.1],
];

pub fn phantom_oracle(n: usize, i: usize, j: usize) -> f64 {
    let x = (2 * j + 1) as f64 / n as f64 - 1.0;
    let y = 1.0 - (2 * i + 1) as f64 / n as f64;
    let mut v = 0.0;
    for e in ELLIPSES {
        let phi = e[4] * PI / 180.0;
        let (dx, dy) = (x - e[0], y - e[1]);
        let xr = dx * phi.cos() + dy * phi.sin();
        let yr = dy * phi.cos() - dx * phi.sin();
        if xr * xr / (e[2] * e[2]) + yr * yr / (e[3] * e[3]) <= 1.0 {
            v += e[5];
        }
    }
    v
}

/// Direct double-sum unitary DFT, `O(n^4)`.
pub fn brute_dft(x: &Array2<f64>) -> Array2<Complex64> {
    let n = x.nrows();
    let scale = 1.0 / n as f64;
    Array2::from_shape_fn((n, n), |(p, q)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let angle = -2.0 * PI * ((p * i + q * j) % n) as f64 / n as f64;
                acc += Complex64::from_polar(x[[i, j]], angle);
            }
        }
        acc * scale
    })
}

/// Radial line rasterization written independently: rounds half away from
/// zero by hand and aliases with modular arithmetic.
pub fn radial_oracle(n: usize, lines: usize) -> BTreeSet<(i64, i64)> {
    let ni = n as i64;
    let half = ni / 2;
    let alias = |v: i64| {
        let m = ((v % ni) + ni) % ni;
        if m > half {
            m - ni
        } else {
            m
        }
    };
    let round = |v: f64| if v >= 0.0 { (v + 0.5).floor() } else { -((-v + 0.5).floor()) } as i64;
    let mut set = BTreeSet::new();
    set.insert((0, 0));
    for l in 0..lines {
        let th = PI * l as f64 / lines as f64;
        for t in -half..=half {
            set.insert((alias(round(t as f64 * th.cos())), alias(round(t as f64 * th.sin()))));
        }
    }
    set
}

/// Periodic difference matrix built entry by entry.
pub fn dense_d(n: usize) -> Array2<f64> {
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if j == i {
                d[[i, j]] += -1.0;
            }
            if j == (i + 1) % n {
                d[[i, j]] += 1.0;
            }
        }
    }
    d
}

pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(r, c)| a[[r / br, c / bc]] * b[[r % br, c % bc]])
}

/// Row-major vectorization `x[i, j] -> v[i * n + j]`.
pub fn vec_of(x: &Array2<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

pub fn field_of(v: &[f64], n: usize) -> Array2<f64> {
    Array2::from_shape_vec((n, n), v.to_vec()).unwrap()
}

/// Dense `D_v` and `D_h` on row-major vectorized `n x n` images.
pub fn dense_dv_dh(n: usize) -> (Array2<f64>, Array2<f64>) {
    let d = dense_d(n);
    let eye = Array2::eye(n);
    (kron(&d, &eye), kron(&eye, &d))
}

/// Dense `Re(F^H diag(sel) F)` for a sampling selection in storage order.
pub fn dense_data_normal(n: usize, selected: &Array2<bool>) -> Array2<f64> {
    let nn = n * n;
    let mut out = Array2::zeros((nn, nn));
    let scale = 1.0 / (n * n) as f64;
    for p in 0..n {
        for q in 0..n {
            if !selected[[p, q]] {
                continue;
            }
            for r in 0..nn {
                let (i, j) = (r / n, r % n);
                for c in 0..nn {
                    let (k, l) = (c / n, c % n);
                    let phase = 2.0 * PI * (p as f64 * (i as f64 - k as f64) + q as f64 * (j as f64 - l as f64))
                        / n as f64;
                    out[[r, c]] += scale * phase.cos();
                }
            }
        }
    }
    out
}

pub fn diag(v: &Array2<u8>) -> Array2<f64> {
    let flat: Vec<f64> = v.iter().map(|&m| f64::from(m)).collect();
    let mut d = Array2::zeros((flat.len(), flat.len()));
    for (i, m) in flat.into_iter().enumerate() {
        d[[i, i]] = m;
    }
    d
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[[x, col]].abs().partial_cmp(&m[[y, col]].abs()).unwrap())
            .unwrap();
        if piv != col {
            for k in 0..n {
                m.swap([col, k], [piv, k]);
            }
            rhs.swap(col, piv);
        }
        let p = m[[col, col]];
        assert!(p.abs() > 1e-14, "singular system");
        for r in col + 1..n {
            let f = m[[r, col]] / p;
            if f != 0.0 {
                for k in col..n {
                    m[[r, k]] -= f * m[[col, k]];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[[r, k]] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[[r, r]];
    }
    x
}

pub fn matvec(a: &Array2<f64>, v: &[f64]) -> Vec<f64> {
    a.rows().into_iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}
