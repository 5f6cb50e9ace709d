//! Edge-masked quadratic enhancement of edge-sparse image reconstructions
//! from radially sampled Fourier data.
//!
//! The pipeline: sample the unitary 2D DFT of an image on radial lines,
//! reconstruct with isotropic TV (or an un-masked quadratic), detect edges
//! with periodic forward differences, threshold them into binary masks, and
//! re-solve with a quadratic penalty that is switched off at the edges.

pub mod cli;
pub mod diff;
pub mod error;
pub mod fourier;
pub mod image;
pub mod manifest;
pub mod mask;
pub mod pipeline;
pub mod solvers;

pub use error::{Error, Result};
