//! Iterative solvers: a Krylov solver for self-adjoint positive
//! (semi)definite operators, split-Bregman isotropic TV reconstruction, and
//! the masked quadratic reconstruction shared by the un-masked initializer
//! and the enhancement step.

use std::fmt::Write as _;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::diff::{d_h, d_h_adjoint, d_v, d_v_adjoint, laplacian_symbol, tv_iso};
use crate::error::{Error, Result};
use crate::fourier::{
    freq_to_index, impose_data, keep_sampled, project_onto_data, zero_sampled, Fourier2, SampledData,
    SamplingPattern,
};
use crate::image::{check_same_size, Image};
use crate::mask::MaskPair;

/// A linear map on real `n x n` fields.
pub trait LinearOperator {
    fn apply(&self, x: &Array2<f64>) -> Array2<f64>;

    fn descriptor(&self) -> String {
        "linear operator".to_string()
    }
}

/// Adapts a closure into a [`LinearOperator`].
pub struct FnOperator<F> {
    f: F,
    label: String,
}

impl<F: Fn(&Array2<f64>) -> Array2<f64>> FnOperator<F> {
    pub fn new(label: impl Into<String>, f: F) -> Self {
        FnOperator { f, label: label.into() }
    }
}

impl<F: Fn(&Array2<f64>) -> Array2<f64>> LinearOperator for FnOperator<F> {
    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        (self.f)(x)
    }

    fn descriptor(&self) -> String {
        self.label.clone()
    }
}

/// How measured Fourier data enters a reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fidelity {
    /// Hard constraint `S F x = b`.
    Exact,
    /// Penalty `data_weight * ||S F x - b||^2`.
    Penalized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_outer_iterations: usize,
    /// Outer loop stops when the relative image update falls below this.
    pub outer_tolerance: f64,
    pub max_cg_iterations: usize,
    /// Relative residual target for the Krylov solver.
    pub cg_tolerance: f64,
    /// Augmented-Lagrangian weight of the gradient splitting; shrinkage uses `1 / penalty`.
    pub bregman_penalty: f64,
    pub lambda: f64,
    pub data_weight: f64,
    pub fidelity: Fidelity,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_outer_iterations: 300,
            outer_tolerance: 1e-7,
            max_cg_iterations: 2000,
            cg_tolerance: 1e-8,
            bregman_penalty: 10.0,
            lambda: 1e-9,
            data_weight: 1.0,
            fidelity: Fidelity::Exact,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        if self.max_outer_iterations == 0 || self.max_cg_iterations == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive".into()));
        }
        positive("cg_tolerance", self.cg_tolerance)?;
        positive("outer_tolerance", self.outer_tolerance)?;
        positive("bregman_penalty", self.bregman_penalty)?;
        positive("data_weight", self.data_weight)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub iterations_used: usize,
    pub final_residual: f64,
    /// Per-iteration residual: relative residual for Krylov solves,
    /// relative image update for the TV outer loop.
    pub residual_trace: Vec<f64>,
    /// Per-iteration objective: TV value for the TV solver; for Krylov
    /// solves this mirrors `residual_trace`.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl SolveReport {
    /// `iteration,residual,objective` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,residual,objective\n");
        for (i, (r, o)) in self.residual_trace.iter().zip(&self.objective_trace).enumerate() {
            writeln!(out, "{i},{r},{o}").unwrap();
        }
        out
    }
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

fn axpy(y: &mut Array2<f64>, alpha: f64, x: &Array2<f64>) {
    Zip::from(y).and(x).for_each(|y, &x| *y += alpha * x);
}

/// Solves `op(x) = rhs` from a zero initial guess.
///
/// Uses the conjugate residual recurrence, the member of the conjugate
/// gradient family that minimizes the residual norm over the Krylov space,
/// so the recorded residuals never increase.
pub fn cg_solve(
    op: &dyn LinearOperator,
    rhs: &Array2<f64>,
    config: &SolverConfig,
) -> Result<(Array2<f64>, SolveReport)> {
    config.validate()?;
    let mut x = Array2::zeros(rhs.dim());
    let rhs_norm = dot(rhs, rhs).sqrt();
    if !rhs_norm.is_finite() {
        return Err(Error::NonFinite(format!("right-hand side of {}", op.descriptor())));
    }
    let mut report = SolveReport::default();
    if rhs_norm == 0.0 {
        report.converged = true;
        report.residual_trace.push(0.0);
        report.objective_trace.push(0.0);
        return Ok((x, report));
    }

    let mut r = rhs.clone();
    let mut ar = op.apply(&r);
    let mut p = r.clone();
    let mut ap = ar.clone();
    let mut r_ar = dot(&r, &ar);
    let mut rel = 1.0;
    report.residual_trace.push(rel);

    for it in 0..config.max_cg_iterations {
        let ap_ap = dot(&ap, &ap);
        if !(ap_ap.is_finite() && r_ar.is_finite()) {
            return Err(Error::NonFinite(format!("iterates of {}", op.descriptor())));
        }
        if ap_ap == 0.0 || r_ar <= 0.0 {
            // Residual has left the range of the operator; no further progress.
            break;
        }
        let alpha = r_ar / ap_ap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        report.iterations_used = it + 1;
        rel = dot(&r, &r).sqrt() / rhs_norm;
        if !rel.is_finite() {
            return Err(Error::NonFinite(format!("iterates of {}", op.descriptor())));
        }
        report.residual_trace.push(rel);
        if rel <= config.cg_tolerance {
            report.converged = true;
            break;
        }
        ar = op.apply(&r);
        let r_ar_next = dot(&r, &ar);
        let beta = r_ar_next / r_ar;
        r_ar = r_ar_next;
        Zip::from(&mut p).and(&r).for_each(|p, &r| *p = r + beta * *p);
        Zip::from(&mut ap).and(&ar).for_each(|ap, &ar| *ap = ar + beta * *ap);
    }
    report.final_residual = rel;
    report.converged = rel <= config.cg_tolerance;
    report.objective_trace = report.residual_trace.clone();
    Ok((x, report))
}

fn check_data(data: &SampledData) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("no sampled data".into()));
    }
    Ok(())
}

/// Isotropic shrinkage of the gradient pair `(gv, gh)` by `t`, in place.
fn shrink_isotropic(gv: &mut Array2<f64>, gh: &mut Array2<f64>, t: f64) {
    Zip::from(gv).and(gh).for_each(|a, b| {
        let mag = (*a * *a + *b * *b).sqrt();
        let scale = if mag > t { (mag - t) / mag } else { 0.0 };
        *a *= scale;
        *b *= scale;
    });
}

type Fields = (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>);

/// Shrinkage and Bregman update: returns `(d_v, d_h, b_v, b_h)` with
/// `d = shrink(grad u + b)` and `b = grad u + b - d`.
fn split_gradient(u: &Array2<f64>, bregman: Option<(&Array2<f64>, &Array2<f64>)>, t: f64) -> Fields {
    let mut gv = d_v(u);
    let mut gh = d_h(u);
    if let Some((bv, bh)) = bregman {
        gv += bv;
        gh += bh;
    }
    let mut dv = gv.clone();
    let mut dh = gh.clone();
    shrink_isotropic(&mut dv, &mut dh, t);
    gv -= &dv;
    gh -= &dh;
    (dv, dh, gv, gh)
}

/// Split-Bregman minimization of isotropic TV under the Fourier data.
///
/// With [`Fidelity::Exact`] the quadratic subproblem is solved on the
/// unsampled coefficients only while the sampled ones are pinned to the data,
/// which is the exact projection onto `{x : S F x = b}` after every outer
/// iteration. With [`Fidelity::Penalized`] it minimizes
/// `data_weight * ||S F x - b||^2 + lambda * TV(x)`. Both subproblems are
/// diagonal in Fourier space under the periodic convention.
pub fn tv_reconstruct(data: &SampledData, config: &SolverConfig) -> Result<(Image, SolveReport)> {
    config.validate()?;
    check_data(data)?;
    let n = data.n();
    let fourier = Fourier2::new(n);
    let symbol = laplacian_symbol(n);
    let measured = data.scatter();
    let beta = config.bregman_penalty;
    let shrink = 1.0 / beta;

    if config.fidelity == Fidelity::Penalized && config.lambda == 0.0 {
        return Err(Error::InvalidArgument("penalized TV needs lambda > 0".into()));
    }
    // Penalized mode: (2w S + lambda beta L) u = 2w S^H b + lambda beta D^T(d - b).
    let penalized_denominator = match config.fidelity {
        Fidelity::Exact => None,
        Fidelity::Penalized => {
            let w2 = 2.0 * config.data_weight;
            let lb = config.lambda * beta;
            let mut den = symbol.mapv(|s| lb * s);
            Zip::from(&mut den).and(data.pattern().mask()).for_each(|d, &m| {
                if m {
                    *d += w2;
                }
            });
            Some(den)
        }
    };

    let mut u = fourier.inverse_real(&measured);
    let (mut dv, mut dh, mut bv, mut bh) = split_gradient(&u, None, shrink);
    let mut report = SolveReport::default();

    for it in 0..config.max_outer_iterations {
        let rhs = d_v_adjoint(&(&dv - &bv)) + d_h_adjoint(&(&dh - &bh));
        let mut spec = fourier.forward_real(&rhs);
        match &penalized_denominator {
            None => {
                Zip::from(&mut spec).and(&symbol).for_each(|c, &s| {
                    if s > 0.0 {
                        *c /= s;
                    }
                });
                impose_data(&mut spec, data);
            }
            Some(den) => {
                let w2 = 2.0 * config.data_weight;
                let lb = config.lambda * beta;
                Zip::from(&mut spec).and(&measured).and(den).for_each(|c, &b, &d| {
                    *c = (*c * lb + b * w2) / d;
                });
            }
        }
        let next = fourier.inverse_real(&spec);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("TV iterate".into()));
        }
        let change = {
            let diff = &next - &u;
            dot(&diff, &diff).sqrt() / dot(&next, &next).sqrt().max(f64::MIN_POSITIVE)
        };
        u = next;

        (dv, dh, bv, bh) = split_gradient(&u, Some((&bv, &bh)), shrink);

        report.iterations_used = it + 1;
        report.residual_trace.push(change);
        report.objective_trace.push(tv_iso(&u));
        if it > 0 && change < config.outer_tolerance {
            report.converged = true;
            break;
        }
    }

    report.final_residual = data_residual(&fourier, &u, data);
    Ok((Image::new(u)?, report))
}

/// `||S F x - b|| / ||b||`.
pub fn data_residual(fourier: &Fourier2, x: &Array2<f64>, data: &SampledData) -> f64 {
    let spec = fourier.forward_real(x);
    let n = data.n();
    let (mut num, mut den) = (0.0, 0.0);
    for (&(p, q), &b) in data.pattern().indices().iter().zip(data.values()) {
        let c = spec[[freq_to_index(p, n), freq_to_index(q, n)]];
        num += (c - b).norm_sqr();
        den += b.norm_sqr();
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// `D_v^T M_v D_v x + D_h^T M_h D_h x`.
pub fn masked_regularizer(x: &Array2<f64>, masks: &MaskPair) -> Array2<f64> {
    let mut gv = d_v(x);
    let mut gh = d_h(x);
    Zip::from(&mut gv).and(&masks.vertical).for_each(|g, &m| *g *= f64::from(m));
    Zip::from(&mut gh).and(&masks.horizontal).for_each(|g, &m| *g *= f64::from(m));
    d_v_adjoint(&gv) + d_h_adjoint(&gh)
}

/// `data_weight * Re(F^H S^H S F) + weight * (D_v^T M_v D_v + D_h^T M_h D_h)`,
/// the normal operator of the penalized masked problem.
pub struct MaskedNormalOperator<'a> {
    fourier: Fourier2,
    pattern: &'a SamplingPattern,
    masks: &'a MaskPair,
    weight: f64,
    data_weight: f64,
}

impl<'a> MaskedNormalOperator<'a> {
    pub fn new(pattern: &'a SamplingPattern, masks: &'a MaskPair, weight: f64, data_weight: f64) -> Result<Self> {
        check_same_size(pattern.n(), masks.n())?;
        Ok(MaskedNormalOperator {
            fourier: Fourier2::new(pattern.n()),
            pattern,
            masks,
            weight,
            data_weight,
        })
    }
}

impl LinearOperator for MaskedNormalOperator<'_> {
    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut spec = self.fourier.forward_real(x);
        keep_sampled(&mut spec, self.pattern);
        let mut out = self.fourier.inverse_real(&spec) * self.data_weight;
        if self.weight > 0.0 {
            axpy(&mut out, self.weight, &masked_regularizer(x, self.masks));
        }
        out
    }

    fn descriptor(&self) -> String {
        format!("masked normal operator (weight {})", self.weight)
    }
}

/// `P (D_v^T M_v D_v + D_h^T M_h D_h) P` with `P` the projection onto images
/// whose sampled Fourier coefficients vanish.
pub struct ProjectedMaskedOperator<'a> {
    fourier: Fourier2,
    pattern: &'a SamplingPattern,
    masks: &'a MaskPair,
}

impl<'a> ProjectedMaskedOperator<'a> {
    pub fn new(pattern: &'a SamplingPattern, masks: &'a MaskPair) -> Result<Self> {
        check_same_size(pattern.n(), masks.n())?;
        Ok(ProjectedMaskedOperator {
            fourier: Fourier2::new(pattern.n()),
            pattern,
            masks,
        })
    }

    /// Projection onto the unsampled subspace.
    pub fn project_free(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut spec = self.fourier.forward_real(x);
        zero_sampled(&mut spec, self.pattern);
        self.fourier.inverse_real(&spec)
    }
}

impl LinearOperator for ProjectedMaskedOperator<'_> {
    fn apply(&self, z: &Array2<f64>) -> Array2<f64> {
        self.project_free(&masked_regularizer(&self.project_free(z), self.masks))
    }

    fn descriptor(&self) -> String {
        "projected masked difference operator".to_string()
    }
}

/// Minimizes `||S F x - b||^2 + weight * (||M_v . D_v x||^2 + ||M_h . D_h x||^2)`.
///
/// For [`Fidelity::Exact`] the data term becomes the constraint `S F x = b`:
/// the solve runs on the unsampled Fourier coefficients only, starting from
/// the data projection of `initial`, and ends with an exact projection.
/// `weight` then only matters through being zero (inert regularizer).
pub fn masked_l2_solve(
    data: &SampledData,
    masks: &MaskPair,
    weight: f64,
    fidelity: Fidelity,
    initial: Option<&Array2<f64>>,
    config: &SolverConfig,
) -> Result<(Image, SolveReport)> {
    config.validate()?;
    check_data(data)?;
    let n = data.n();
    check_same_size(n, masks.n())?;
    if let Some(x0) = initial {
        check_same_size(n, x0.nrows())?;
    }
    if !(weight >= 0.0 && weight.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularization weight must be >= 0, got {weight}")));
    }
    let fourier = Fourier2::new(n);
    let pattern = data.pattern();

    match fidelity {
        Fidelity::Exact => {
            let start = match initial {
                Some(x0) => project_onto_data(&fourier, x0, data),
                None => fourier.inverse_real(&data.scatter()),
            };
            if weight == 0.0 {
                let report = SolveReport {
                    converged: true,
                    residual_trace: vec![0.0],
                    objective_trace: vec![0.0],
                    ..SolveReport::default()
                };
                return Ok((Image::new(start)?, report));
            }
            let op = ProjectedMaskedOperator::new(pattern, masks)?;
            let rhs = -op.project_free(&masked_regularizer(&start, masks));
            let (z, report) = cg_solve(&op, &rhs, config)?;
            let x = project_onto_data(&fourier, &(start + z), data);
            Ok((Image::new(x)?, report))
        }
        Fidelity::Penalized => {
            let op = MaskedNormalOperator::new(pattern, masks, weight, config.data_weight)?;
            let mut rhs = fourier.inverse_real(&data.scatter()) * config.data_weight;
            if let Some(x0) = initial {
                rhs -= &op.apply(x0);
            }
            let (z, report) = cg_solve(&op, &rhs, config)?;
            let x = match initial {
                Some(x0) => x0 + &z,
                None => z,
            };
            Ok((Image::new(x)?, report))
        }
    }
}

/// Un-masked anisotropic quadratic reconstruction with weight `lambda`.
pub fn anisotropic_l2_reconstruct(
    data: &SampledData,
    config: &SolverConfig,
) -> Result<(Image, SolveReport)> {
    masked_l2_solve(
        data,
        &MaskPair::ones(data.n()),
        config.lambda,
        config.fidelity,
        None,
        config,
    )
}

/// Zero-filled inverse DFT of the data (real part).
pub fn zero_filled(data: &SampledData) -> Image {
    let fourier = Fourier2::new(data.n());
    Image::new(fourier.inverse_real(&data.scatter())).expect("finite data")
}
