//! Edge thresholds and the binary masks that switch the quadratic
//! regularizer off at detected edges.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, Zip};

use crate::diff::EdgeMap;
use crate::error::Result;
use crate::image::{check_same_size, encode_csv_rows, write_atomic, Image};

/// Binary masks: `1` in smooth regions, `0` on edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskPair {
    pub vertical: Array2<u8>,
    pub horizontal: Array2<u8>,
}

impl MaskPair {
    pub fn ones(n: usize) -> Self {
        MaskPair {
            vertical: Array2::ones((n, n)),
            horizontal: Array2::ones((n, n)),
        }
    }

    pub fn zeros(n: usize) -> Self {
        MaskPair {
            vertical: Array2::zeros((n, n)),
            horizontal: Array2::zeros((n, n)),
        }
    }

    pub fn n(&self) -> usize {
        self.vertical.nrows()
    }

    /// Number of entries marked as edges, per orientation.
    pub fn edge_counts(&self) -> (usize, usize) {
        let zeros = |m: &Array2<u8>| m.iter().filter(|&&v| v == 0).count();
        (zeros(&self.vertical), zeros(&self.horizontal))
    }

    pub fn is_binary(&self) -> bool {
        self.vertical.iter().chain(self.horizontal.iter()).all(|&v| v <= 1)
    }
}

/// Plain PBM (P1). PBM's `1` is black, so edges (mask `0`) are written as `1`.
pub fn encode_pbm(mask: &Array2<u8>) -> String {
    let (rows, cols) = mask.dim();
    let mut out = format!("P1\n{cols} {rows}\n");
    for row in mask.rows() {
        let line: Vec<&str> = row.iter().map(|&m| if m == 0 { "1" } else { "0" }).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

pub fn encode_mask_csv(mask: &Array2<u8>) -> String {
    encode_csv_rows(&mask.mapv(f64::from))
}

pub fn save_mask(mask: &Array2<u8>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("pbm") => encode_pbm(mask),
        _ => encode_mask_csv(mask),
    };
    write_atomic(path, text.as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdParams {
    pub k: f64,
    pub tau_v: f64,
    pub tau_h: f64,
}

fn max_abs(field: &Array2<f64>) -> f64 {
    field.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `tau = 2^-k * max |edge|` per orientation.
pub fn compute_thresholds(edges: &EdgeMap, k: f64) -> ThresholdParams {
    assert!(k >= 0.0, "threshold exponent must be nonnegative");
    let scale = (-k).exp2();
    ThresholdParams {
        k,
        tau_v: scale * max_abs(&edges.vertical),
        tau_h: scale * max_abs(&edges.horizontal),
    }
}

fn threshold(field: &Array2<f64>, tau: f64) -> Array2<u8> {
    if field.iter().all(|&v| v == 0.0) {
        // No edges at all: regularize everywhere.
        return Array2::ones(field.dim());
    }
    field.mapv(|v| u8::from(v.abs() < tau))
}

pub fn build_masks(edges: &EdgeMap, params: &ThresholdParams) -> Result<MaskPair> {
    check_same_size(edges.vertical.nrows(), edges.horizontal.nrows())?;
    Ok(MaskPair {
        vertical: threshold(&edges.vertical, params.tau_v),
        horizontal: threshold(&edges.horizontal, params.tau_h),
    })
}

/// Masks detected from an image's own difference fields.
pub fn detect_masks(image: &Image, k: f64) -> MaskPair {
    let edges = EdgeMap::of(image);
    let params = compute_thresholds(&edges, k);
    build_masks(&edges, &params).expect("edge map of one image")
}

/// Masks of the ground truth; the "perfect mask" oracle.
pub fn true_masks(ground_truth: &Image, k: f64) -> MaskPair {
    detect_masks(ground_truth, k)
}

/// Mask entries that differ between two pairs.
pub fn mask_disagreement(a: &MaskPair, b: &MaskPair) -> Result<usize> {
    check_same_size(a.n(), b.n())?;
    let count = |x: &Array2<u8>, y: &Array2<u8>| {
        Zip::from(x).and(y).fold(0usize, |acc, &u, &v| acc + usize::from(u != v))
    };
    Ok(count(&a.vertical, &b.vertical) + count(&a.horizontal, &b.horizontal))
}
