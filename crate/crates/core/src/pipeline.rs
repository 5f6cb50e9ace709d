//! The two-stage enhancement: initial reconstruction, edge detection,
//! masks, and the edge-masked quadratic solve, plus the experiment runners.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{acquire, add_noise, radial_pattern, SampledData};
use crate::image::{check_same_size, Image};
use crate::mask::{detect_masks, MaskPair};
use crate::solvers::{anisotropic_l2_reconstruct, masked_l2_solve, tv_reconstruct, Fidelity, SolveReport, SolverConfig};

/// `||x - x_true|| / ||x_true||` over the vectorized images.
pub fn relative_error(x: &Image, x_true: &Image) -> Result<f64> {
    check_same_size(x_true.n(), x.n())?;
    let reference = x_true.norm();
    if reference == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let diff = x.pixels().iter().zip(x_true.pixels()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(diff / reference)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhanceConfig {
    /// Threshold exponent: `tau = 2^-k * max |edge|`.
    pub k: f64,
    /// Weight of the masked regularizer.
    pub mu: f64,
    /// Enforce `S F x = b` exactly instead of penalizing the misfit.
    pub noiseless: bool,
    pub solver: SolverConfig,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig {
            k: 5.0,
            mu: 1e-2,
            noiseless: true,
            solver: SolverConfig::default(),
        }
    }
}

impl EnhanceConfig {
    pub fn fidelity(&self) -> Fidelity {
        if self.noiseless {
            Fidelity::Exact
        } else {
            Fidelity::Penalized
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidArgument(format!("k must be >= 0, got {}", self.k)));
        }
        self.solver.validate()
    }
}

/// Edge-masked quadratic reconstruction from a zero initial guess.
pub fn enhance(data: &SampledData, masks: &MaskPair, config: &EnhanceConfig) -> Result<(Image, SolveReport)> {
    config.validate()?;
    masked_l2_solve(data, masks, config.mu, config.fidelity(), None, &config.solver)
}

/// As [`enhance`], starting from `initial`. In noiseless mode with an inert
/// regularizer this returns the data projection of `initial`.
pub fn enhance_from(
    data: &SampledData,
    masks: &MaskPair,
    config: &EnhanceConfig,
    initial: &Image,
) -> Result<(Image, SolveReport)> {
    config.validate()?;
    masked_l2_solve(data, masks, config.mu, config.fidelity(), Some(initial.pixels()), &config.solver)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initializer {
    Tv,
    AnisotropicL2,
}

impl Initializer {
    pub fn label(self) -> &'static str {
        match self {
            Initializer::Tv => "tv",
            Initializer::AnisotropicL2 => "aniso-l2",
        }
    }

    pub fn reconstruct(self, data: &SampledData, config: &SolverConfig) -> Result<(Image, SolveReport)> {
        match self {
            Initializer::Tv => tv_reconstruct(data, config),
            Initializer::AnisotropicL2 => anisotropic_l2_reconstruct(data, config),
        }
    }
}

impl std::str::FromStr for Initializer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tv" => Ok(Initializer::Tv),
            "aniso-l2" | "anisotropic-l2" => Ok(Initializer::AnisotropicL2),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?} (valid: tv, aniso-l2)"
            ))),
        }
    }
}

/// Where the enhancement masks come from.
#[derive(Clone, Debug, PartialEq)]
pub enum MaskSource {
    /// Detected on the initial reconstruction.
    Detected,
    /// Detected on the ground truth with exponent `k`.
    GroundTruth { k: f64 },
    Given(MaskPair),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineParams {
    pub lines: usize,
    pub initializer: Initializer,
    pub sigma: f64,
    pub seed: u64,
    pub init_solver: SolverConfig,
    pub enhance: EnhanceConfig,
    pub masks: MaskSource,
    /// Start the enhancement from the initial reconstruction instead of zero.
    pub warm_start: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            lines: 16,
            initializer: Initializer::Tv,
            sigma: 0.0,
            seed: DEFAULT_SEEDS[0],
            init_solver: default_tv_solver(),
            enhance: EnhanceConfig::default(),
            masks: MaskSource::Detected,
            warm_start: true,
        }
    }
}

/// One row of an experiment report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub lines: usize,
    /// Threshold as recorded, e.g. `2^5`.
    pub k: String,
    pub init_method: String,
    pub init_re: f64,
    pub enh_re: f64,
    pub init_seconds: f64,
    pub enh_seconds: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: &str = "lines,k,init_method,init_re,enh_re,init_seconds,enh_seconds,seed";

impl ExperimentReport {
    /// Report CSV. Wall-clock columns are left empty unless `with_timings`,
    /// so that repeated runs produce identical bytes.
    pub fn to_csv(&self, with_timings: bool) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let (ti, te) = if with_timings {
                (format!("{:.3}", r.init_seconds), format!("{:.3}", r.enh_seconds))
            } else {
                (String::new(), String::new())
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.lines, r.k, r.init_method, r.init_re, r.enh_re, ti, te, r.seed
            )
            .unwrap();
        }
        out
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("lines,seed,init_seconds,enh_seconds\n");
        for r in &self.rows {
            writeln!(out, "{},{},{:.3},{:.3}", r.lines, r.seed, r.init_seconds, r.enh_seconds).unwrap();
        }
        out
    }
}

/// Formats a threshold exponent the way it is recorded in reports.
pub fn k_label(k: f64) -> String {
    let div = k.exp2();
    if div.fract() == 0.0 && div < 1e15 {
        format!("2^{k}={div}")
    } else {
        format!("2^{k}")
    }
}

/// Everything produced by one end-to-end run.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub data: SampledData,
    pub initial: Image,
    pub enhanced: Image,
    pub masks: MaskPair,
    pub init_report: SolveReport,
    pub enh_report: SolveReport,
    pub row: ReportRow,
}

/// sample -> noise -> initializer -> masks -> enhancement -> errors, reusing
/// the same data in both stages.
pub fn run_pipeline(ground_truth: &Image, params: &PipelineParams) -> Result<PipelineRun> {
    let n = ground_truth.n();
    let pattern = radial_pattern(n, params.lines).map_err(|e| e.in_stage("sampling"))?;
    let clean = acquire(ground_truth, &pattern).map_err(|e| e.in_stage("sampling"))?;
    let data = add_noise(&clean, params.sigma, params.seed).map_err(|e| e.in_stage("noise"))?;
    run_on_data(ground_truth, data, params)
}

/// As [`run_pipeline`] for already acquired data.
pub fn run_on_data(ground_truth: &Image, data: SampledData, params: &PipelineParams) -> Result<PipelineRun> {
    let t0 = Instant::now();
    let (initial, init_report) = params
        .initializer
        .reconstruct(&data, &params.init_solver)
        .map_err(|e| e.in_stage("initial reconstruction"))?;
    let init_seconds = t0.elapsed().as_secs_f64();

    let masks = match &params.masks {
        MaskSource::Detected => detect_masks(&initial, params.enhance.k),
        MaskSource::GroundTruth { k } => detect_masks(ground_truth, *k),
        MaskSource::Given(m) => m.clone(),
    };

    let t1 = Instant::now();
    let (enhanced, enh_report) = if params.warm_start {
        enhance_from(&data, &masks, &params.enhance, &initial)
    } else {
        enhance(&data, &masks, &params.enhance)
    }
    .map_err(|e| e.in_stage("enhancement"))?;
    let enh_seconds = t1.elapsed().as_secs_f64();

    let k = match &params.masks {
        MaskSource::GroundTruth { k } => format!("true:{}", k_label(*k)),
        MaskSource::Given(_) => "given".to_string(),
        MaskSource::Detected => k_label(params.enhance.k),
    };
    let row = ReportRow {
        lines: data.pattern().line_count(),
        k,
        init_method: params.initializer.label().to_string(),
        init_re: relative_error(&initial, ground_truth)?,
        enh_re: relative_error(&enhanced, ground_truth)?,
        init_seconds,
        enh_seconds,
        seed: params.seed,
    };
    Ok(PipelineRun {
        data,
        initial,
        enhanced,
        masks,
        init_report,
        enh_report,
        row,
    })
}

pub const DEFAULT_SEEDS: [u64; 3] = [20190401, 20190402, 20190403];

/// Solver settings used for the initial TV reconstructions.
pub fn default_tv_solver() -> SolverConfig {
    SolverConfig::default()
}

/// Radial line counts of the noiseless sweep.
pub const TABLE1_LINES: [usize; 5] = [12, 13, 14, 15, 16];

/// Threshold divisors `2^k` assigned to each line count.
pub const TABLE1_ROW_DIVISORS: [(usize, f64); 5] =
    [(12, 32.0), (13, 32.0), (14, 32.0), (15, 64.0), (16, 256.0)];

/// Exponent used for every row by default.
pub const TABLE1_DEFAULT_K: f64 = 5.0;

/// How each sweep row chooses its threshold exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `k = 5` in every row.
    Uniform,
    /// `k = log2(divisor)` from the per-row divisors.
    RowDivisors,
}

pub fn table1_rows(mode: ThresholdMode) -> Vec<(usize, f64)> {
    match mode {
        ThresholdMode::Uniform => TABLE1_LINES.iter().map(|&l| (l, TABLE1_DEFAULT_K)).collect(),
        ThresholdMode::RowDivisors => TABLE1_ROW_DIVISORS
            .iter()
            .map(|&(l, d)| (l, d.log2()))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1Config {
    pub n: usize,
    /// `(radial lines, threshold exponent k)` per row.
    pub rows: Vec<(usize, f64)>,
    pub tv_solver: SolverConfig,
    pub enhance_solver: SolverConfig,
    pub parallel: bool,
}

impl Default for Table1Config {
    fn default() -> Self {
        Table1Config {
            n: 256,
            rows: table1_rows(ThresholdMode::Uniform),
            tv_solver: default_tv_solver(),
            enhance_solver: SolverConfig::default(),
            parallel: true,
        }
    }
}

impl Table1Config {
    pub fn params(&self, lines: usize, k: f64) -> PipelineParams {
        PipelineParams {
            lines,
            initializer: Initializer::Tv,
            sigma: 0.0,
            seed: 0,
            init_solver: self.tv_solver.clone(),
            enhance: EnhanceConfig {
                k,
                mu: 1.0,
                noiseless: true,
                solver: self.enhance_solver.clone(),
            },
            masks: MaskSource::Detected,
            warm_start: true,
        }
    }
}

/// Noiseless Shepp-Logan sweep over radial line counts with TV initializer.
/// Rows are returned in ascending line order.
pub fn run_table1(config: &Table1Config) -> Result<(ExperimentReport, Vec<PipelineRun>)> {
    let truth = crate::image::shepp_logan(config.n);
    let run = |&(lines, k): &(usize, f64)| run_pipeline(&truth, &config.params(lines, k));
    let mut runs: Vec<PipelineRun> = if config.parallel {
        config.rows.par_iter().map(run).collect::<Result<_>>()?
    } else {
        config.rows.iter().map(run).collect::<Result<_>>()?
    };
    runs.sort_by_key(|r| r.row.lines);
    let report = ExperimentReport {
        rows: runs.iter().map(|r| r.row.clone()).collect(),
    };
    Ok((report, runs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub n: usize,
    pub lines: usize,
    pub sigma: f64,
    pub seeds: Vec<u64>,
    /// Weight of the un-masked initial reconstruction.
    pub init_lambda: f64,
    pub mu: f64,
    pub k: f64,
    pub solver: SolverConfig,
    pub parallel: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            n: 256,
            lines: 60,
            sigma: 1e-2,
            seeds: DEFAULT_SEEDS.to_vec(),
            init_lambda: NOISE_INIT_LAMBDA,
            mu: 1e-2,
            k: 4.0,
            solver: SolverConfig {
                fidelity: Fidelity::Penalized,
                ..SolverConfig::default()
            },
            parallel: true,
        }
    }
}

/// Initializer weight for the noisy experiment.
pub const NOISE_INIT_LAMBDA: f64 = 1e-9;

impl NoiseConfig {
    pub fn params(&self, seed: u64) -> PipelineParams {
        let fidelity = if self.sigma == 0.0 && self.solver.fidelity == Fidelity::Exact {
            Fidelity::Exact
        } else {
            self.solver.fidelity
        };
        PipelineParams {
            lines: self.lines,
            initializer: Initializer::AnisotropicL2,
            sigma: self.sigma,
            seed,
            init_solver: SolverConfig {
                lambda: self.init_lambda,
                fidelity,
                ..self.solver.clone()
            },
            enhance: EnhanceConfig {
                k: self.k,
                mu: self.mu,
                noiseless: fidelity == Fidelity::Exact,
                solver: SolverConfig {
                    fidelity,
                    ..self.solver.clone()
                },
            },
            masks: MaskSource::Detected,
            warm_start: true,
        }
    }
}

/// Un-masked quadratic initializer on noisy radial data, then the masked
/// enhancement, once per seed.
pub fn run_noise_experiment(config: &NoiseConfig) -> Result<(ExperimentReport, Vec<PipelineRun>)> {
    let truth = crate::image::shepp_logan(config.n);
    let run = |&seed: &u64| run_pipeline(&truth, &config.params(seed));
    let runs: Vec<PipelineRun> = if config.parallel {
        config.seeds.par_iter().map(run).collect::<Result<_>>()?
    } else {
        config.seeds.iter().map(run).collect::<Result<_>>()?
    };
    let report = ExperimentReport {
        rows: runs.iter().map(|r| r.row.clone()).collect(),
    };
    Ok((report, runs))
}
