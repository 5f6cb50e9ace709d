//! Command-line front end.
//!
//! Exit codes: `0` success, `2` usage or validation error, `1` runtime or
//! solver failure. Every command writes a JSON manifest recording its
//! arguments, resolved parameters and output checksums; `replay` re-runs a
//! manifest and checks that the outputs are reproduced byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{acquire, add_noise, radial_pattern, SampledData};
use crate::image::{cross_section, load_image, save_image, shepp_logan, write_atomic, Image, Orientation};
use crate::manifest::RunManifest;
use crate::mask::{detect_masks, save_mask, MaskPair};
use crate::pipeline::{
    default_tv_solver, enhance_from, k_label, relative_error, run_noise_experiment, run_table1,
    table1_rows, EnhanceConfig, ExperimentReport, Initializer, NoiseConfig, PipelineRun, Table1Config,
    ThresholdMode, DEFAULT_SEEDS, TABLE1_LINES,
};
use crate::solvers::{Fidelity, SolveReport, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "edgemask", version, propagate_version = true, about = "Edge-masked enhancement of Fourier reconstructions")]
pub struct Cli {
    /// TOML file with solver defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Shepp-Logan phantom.
    Phantom(PhantomArgs),
    /// Sample an image's DFT on radial lines.
    Sample(SampleArgs),
    /// Initial reconstruction from sampled data.
    Reconstruct(ReconstructArgs),
    /// Detect edges on an initial image and run the masked enhancement.
    Enhance(EnhanceArgs),
    /// Noiseless radial line sweep with TV initializer.
    Table1(Table1Args),
    /// Noisy radial data with an un-masked quadratic initializer.
    Noise(NoiseArgs),
    /// Re-run a manifest and verify its output checksums.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Output image (.csv or .pgm).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Image to sample; the phantom is used when absent.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Phantom size when no image is given.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long)]
    pub lines: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = DEFAULT_SEEDS[0])]
    pub seed: u64,
    /// Output data file (p,q,re,im CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Tv,
    AnisoL2,
}

impl From<Method> for Initializer {
    fn from(m: Method) -> Self {
        match m {
            Method::Tv => Initializer::Tv,
            Method::AnisoL2 => Initializer::AnisotropicL2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FidelityArg {
    Exact,
    Penalized,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Sampled data (p,q,re,im CSV), or an image to be sampled with `--lines`.
    #[arg(long)]
    pub in_data: PathBuf,
    /// Radial lines, when `--in-data` is an image.
    #[arg(long)]
    pub lines: Option<usize>,
    /// Grid size for data files without a `# n=` line.
    #[arg(long)]
    pub n: Option<usize>,
    /// Ground truth for error reporting.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_cg: Option<usize>,
    #[arg(long)]
    pub cg_tol: Option<f64>,
    /// Split-Bregman penalty of the TV solver.
    #[arg(long)]
    pub penalty: Option<f64>,
}

impl SolverArgs {
    fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.max_outer {
            cfg.max_outer_iterations = v;
        }
        if let Some(v) = self.max_cg {
            cfg.max_cg_iterations = v;
        }
        if let Some(v) = self.cg_tol {
            cfg.cg_tolerance = v;
        }
        if let Some(v) = self.penalty {
            cfg.bregman_penalty = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Method::Tv)]
    pub method: Method,
    /// Regularization weight (penalized fidelity only).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value_t = FidelityArg::Exact)]
    pub fidelity: FidelityArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Initial reconstruction on which edges are detected.
    #[arg(long)]
    pub init_image: PathBuf,
    /// Threshold exponent, `tau = 2^-k max|edge|`.
    #[arg(long, conflicts_with = "k_div")]
    pub k: Option<f64>,
    /// Threshold divisor, `tau = max|edge| / k_div`.
    #[arg(long)]
    pub k_div: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub mu: f64,
    /// Enforce the data exactly.
    #[arg(long)]
    pub noiseless: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    /// The same exponent for every row (`--k`, default 5).
    Uniform,
    /// Per-row divisors 32, 32, 32, 64, 256 read as `2^k`.
    PerRow,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = ThresholdArg::Uniform)]
    pub thresholds: ThresholdArg,
    /// Exponent for uniform thresholds.
    #[arg(long, default_value_t = 5.0)]
    pub k: f64,
    /// Fill the wall-clock columns of the report.
    #[arg(long)]
    pub timings: bool,
    /// Run rows one after another.
    #[arg(long)]
    pub serial: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1e-2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 60)]
    pub lines: usize,
    /// Noise seed; repeat for several runs.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    #[arg(long)]
    pub init_lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub mu: f64,
    #[arg(long, default_value_t = 4.0)]
    pub k: f64,
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub serial: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Optional TOML defaults.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub tv_solver: Option<SolverConfig>,
    pub quadratic_solver: Option<SolverConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    fn tv(&self) -> SolverConfig {
        self.tv_solver.clone().unwrap_or_else(default_tv_solver)
    }

    fn quadratic(&self) -> SolverConfig {
        self.quadratic_solver.clone().unwrap_or_default()
    }
}

/// Parses and runs a command line; returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli, &argv[1.min(argv.len())..]) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::NotSquare { .. } => 2,
        Error::Stage { source, .. } => exit_code(source),
        _ => 1,
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    let file_cfg = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Phantom(a) => cmd_phantom(a, argv),
        Command::Sample(a) => cmd_sample(a, argv),
        Command::Reconstruct(a) => cmd_reconstruct(a, &file_cfg, argv),
        Command::Enhance(a) => cmd_enhance(a, &file_cfg, argv),
        Command::Table1(a) => cmd_table1(a, &file_cfg, argv),
        Command::Noise(a) => cmd_noise(a, &file_cfg, argv),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn sidecar_manifest(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(manifest: &mut RunManifest, path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    manifest.add_output(path)
}

fn write_image(manifest: &mut RunManifest, dir: &Path, stem: &str, image: &Image) -> Result<()> {
    for ext in ["csv", "pgm"] {
        let path = dir.join(format!("{stem}.{ext}"));
        save_image(image, &path)?;
        manifest.add_output(&path)?;
    }
    Ok(())
}

fn write_masks(manifest: &mut RunManifest, dir: &Path, masks: &MaskPair) -> Result<()> {
    for (name, m) in [("mask_v", &masks.vertical), ("mask_h", &masks.horizontal)] {
        for ext in ["pbm", "csv"] {
            let path = dir.join(format!("{name}.{ext}"));
            save_mask(m, &path)?;
            manifest.add_output(&path)?;
        }
    }
    Ok(())
}

fn write_report(manifest: &mut RunManifest, dir: &Path, name: &str, report: &SolveReport) -> Result<()> {
    write_text(manifest, &dir.join(name), &report.to_csv())
}

/// Vertical cross-sections through the middle column.
fn cross_section_csv(images: &[(&str, &Image)]) -> Result<String> {
    let n = images[0].1.n();
    let column = n / 2;
    let sections = images
        .iter()
        .map(|(_, img)| cross_section(img, Orientation::Vertical, column))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("row");
    for (name, _) in images {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&i.to_string());
        for s in &sections {
            out.push(',');
            out.push_str(&s[i].to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

fn write_error_artifacts(
    manifest: &mut RunManifest,
    dir: &Path,
    truth: &Image,
    initial: &Image,
    enhanced: Option<&Image>,
) -> Result<()> {
    save_error_map(manifest, &dir.join("error_initial.csv"), initial, truth)?;
    let mut sections = vec![("truth", truth), ("initial", initial)];
    if let Some(enh) = enhanced {
        save_error_map(manifest, &dir.join("error_enhanced.csv"), enh, truth)?;
        sections.push(("enhanced", enh));
    }
    write_text(manifest, &dir.join("cross_section.csv"), &cross_section_csv(&sections)?)
}

fn save_error_map(manifest: &mut RunManifest, path: &Path, image: &Image, truth: &Image) -> Result<()> {
    save_image(&image.abs_diff(truth)?, path)?;
    manifest.add_output(path)
}

fn looks_like_sampled_data(path: &Path) -> bool {
    fs::read_to_string(path)
        .ok()
        .and_then(|t| {
            t.lines()
                .map(str::trim)
                .find(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.replace(' ', "") == "p,q,re,im")
        })
        .unwrap_or(false)
}

fn load_data(args: &DataArgs, manifest: &mut RunManifest) -> Result<SampledData> {
    manifest.add_input(&args.in_data)?;
    if looks_like_sampled_data(&args.in_data) {
        return SampledData::load(&args.in_data, args.n);
    }
    let lines = args.lines.ok_or_else(|| {
        Error::InvalidArgument("--lines is required when --in-data is an image".into())
    })?;
    let image = load_image(&args.in_data)?;
    acquire(&image, &radial_pattern(image.n(), lines)?)
}

fn load_truth(args: &DataArgs, manifest: &mut RunManifest, n: usize) -> Result<Option<Image>> {
    let Some(path) = &args.truth else {
        return Ok(None);
    };
    manifest.add_input(path)?;
    let truth = load_image(path)?;
    if truth.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: truth.n(),
        });
    }
    Ok(Some(truth))
}

fn cmd_phantom(a: &PhantomArgs, argv: &[String]) -> Result<()> {
    let n = a.n as usize;
    let image = shepp_logan(n);
    save_image(&image, &a.out)?;
    let mut m = RunManifest::new("phantom", argv);
    m.param("n", n);
    m.add_output(&a.out)?;
    m.save(&sidecar_manifest(&a.out))?;
    println!("wrote {n}x{n} phantom to {}", a.out.display());
    Ok(())
}

fn cmd_sample(a: &SampleArgs, argv: &[String]) -> Result<()> {
    let mut m = RunManifest::new("sample", argv);
    let image = match &a.image {
        Some(p) => {
            m.add_input(p)?;
            load_image(p)?
        }
        None => shepp_logan(a.n as usize),
    };
    let clean = acquire(&image, &radial_pattern(image.n(), a.lines)?)?;
    let data = add_noise(&clean, a.sigma, a.seed)?;
    data.save(&a.out)?;
    m.param("n", image.n());
    m.param("lines", a.lines);
    m.param("sigma", a.sigma);
    m.param("samples", data.len());
    m.seeds.push(a.seed);
    m.add_output(&a.out)?;
    m.save(&sidecar_manifest(&a.out))?;
    println!("wrote {} samples on {} lines to {}", data.len(), a.lines, a.out.display());
    Ok(())
}

fn cmd_reconstruct(a: &ReconstructArgs, file_cfg: &FileConfig, argv: &[String]) -> Result<()> {
    let method: Initializer = a.method.into();
    let mut cfg = match method {
        Initializer::Tv => file_cfg.tv(),
        Initializer::AnisotropicL2 => file_cfg.quadratic(),
    };
    a.solver.apply(&mut cfg);
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    cfg.fidelity = match a.fidelity {
        FidelityArg::Exact => Fidelity::Exact,
        FidelityArg::Penalized => Fidelity::Penalized,
    };
    cfg.validate()?;

    let mut m = RunManifest::new("reconstruct", argv);
    let data = load_data(&a.data, &mut m)?;
    let truth = load_truth(&a.data, &mut m, data.n())?;
    let (image, report) = method.reconstruct(&data, &cfg)?;

    ensure_dir(&a.out)?;
    write_image(&mut m, &a.out, "reconstruction", &image)?;
    write_report(&mut m, &a.out, "solve_report.csv", &report)?;
    m.param("method", method.label());
    m.param("solver", &cfg);
    m.param("n", data.n());
    m.param("lines", data.pattern().line_count());
    m.param("samples", data.len());
    m.metrics.insert("iterations".into(), report.iterations_used as f64);
    m.metrics.insert("final_residual".into(), report.final_residual);
    if let Some(truth) = &truth {
        let re = relative_error(&image, truth)?;
        m.metrics.insert("relative_error".into(), re);
        write_error_artifacts(&mut m, &a.out, truth, &image, None)?;
        println!("relative error {re:.6}");
    }
    m.save(&a.out.join("manifest.json"))?;
    println!(
        "{} reconstruction: {} iterations, converged={}",
        method.label(),
        report.iterations_used,
        report.converged
    );
    Ok(())
}

fn cmd_enhance(a: &EnhanceArgs, file_cfg: &FileConfig, argv: &[String]) -> Result<()> {
    let k = match (a.k, a.k_div) {
        (Some(k), _) => k,
        (None, Some(div)) if div >= 1.0 => div.log2(),
        (None, Some(div)) => {
            return Err(Error::InvalidArgument(format!("--k-div must be >= 1, got {div}")))
        }
        (None, None) => 5.0,
    };
    let mut solver = file_cfg.quadratic();
    a.solver.apply(&mut solver);
    let cfg = EnhanceConfig {
        k,
        mu: a.mu,
        noiseless: a.noiseless,
        solver,
    };
    cfg.validate()?;

    let mut m = RunManifest::new("enhance", argv);
    let data = load_data(&a.data, &mut m)?;
    m.add_input(&a.init_image)?;
    let initial = load_image(&a.init_image)?;
    if initial.n() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            actual: initial.n(),
        });
    }
    let truth = load_truth(&a.data, &mut m, data.n())?;
    let masks = detect_masks(&initial, k);
    let (enhanced, report) = enhance_from(&data, &masks, &cfg, &initial)?;

    ensure_dir(&a.out)?;
    write_image(&mut m, &a.out, "enhanced", &enhanced)?;
    write_masks(&mut m, &a.out, &masks)?;
    write_report(&mut m, &a.out, "solve_report.csv", &report)?;
    m.param("enhance", &cfg);
    m.param("k_label", k_label(k));
    m.param("n", data.n());
    m.param("samples", data.len());
    let (ev, eh) = masks.edge_counts();
    m.param("edge_counts", [ev, eh]);
    m.metrics.insert("iterations".into(), report.iterations_used as f64);
    m.metrics.insert("final_residual".into(), report.final_residual);
    if let Some(truth) = &truth {
        let init_re = relative_error(&initial, truth)?;
        let enh_re = relative_error(&enhanced, truth)?;
        m.metrics.insert("init_relative_error".into(), init_re);
        m.metrics.insert("relative_error".into(), enh_re);
        write_error_artifacts(&mut m, &a.out, truth, &initial, Some(&enhanced))?;
        println!("relative error {init_re:.6} -> {enh_re:.6}");
    }
    m.save(&a.out.join("manifest.json"))?;
    println!(
        "enhancement: {} iterations, converged={}, edges (v,h)=({ev},{eh})",
        report.iterations_used, report.converged
    );
    Ok(())
}

fn write_runs(
    m: &mut RunManifest,
    out_dir: &Path,
    truth: &Image,
    report: &ExperimentReport,
    runs: &[PipelineRun],
    csv_name: &str,
    timings: bool,
) -> Result<()> {
    for run in runs {
        let dir = out_dir.join(format!("lines{:03}_seed{}", run.row.lines, run.row.seed));
        ensure_dir(&dir)?;
        write_image(m, &dir, "initial", &run.initial)?;
        write_image(m, &dir, "enhanced", &run.enhanced)?;
        write_masks(m, &dir, &run.masks)?;
        write_error_artifacts(m, &dir, truth, &run.initial, Some(&run.enhanced))?;
        write_report(m, &dir, "init_report.csv", &run.init_report)?;
        write_report(m, &dir, "enh_report.csv", &run.enh_report)?;
    }
    write_text(m, &out_dir.join(csv_name), &report.to_csv(timings))?;
    // Wall-clock times vary between runs and are kept out of the checksums.
    write_atomic(&out_dir.join("timings.csv"), report.timings_csv().as_bytes())?;
    for r in &report.rows {
        m.metrics.insert(format!("init_re_lines{}_seed{}", r.lines, r.seed), r.init_re);
        m.metrics.insert(format!("enh_re_lines{}_seed{}", r.lines, r.seed), r.enh_re);
    }
    Ok(())
}

fn print_report(report: &ExperimentReport) {
    println!("{:>6} {:>12} {:>10} {:>10} {:>10}", "lines", "k", "seed", "initial", "enhanced");
    for r in &report.rows {
        println!("{:>6} {:>12} {:>10} {:>10.4} {:>10.4}", r.lines, r.k, r.seed, r.init_re, r.enh_re);
    }
}

fn cmd_table1(a: &Table1Args, file_cfg: &FileConfig, argv: &[String]) -> Result<()> {
    if !(a.k >= 0.0 && a.k.is_finite()) {
        return Err(Error::InvalidArgument(format!("--k must be >= 0, got {}", a.k)));
    }
    let rows = match a.thresholds {
        ThresholdArg::Uniform => TABLE1_LINES.iter().map(|&l| (l, a.k)).collect(),
        ThresholdArg::PerRow => table1_rows(ThresholdMode::RowDivisors),
    };
    let mut tv_solver = file_cfg.tv();
    a.solver.apply(&mut tv_solver);
    let mut enhance_solver = file_cfg.quadratic();
    a.solver.apply(&mut enhance_solver);
    let cfg = Table1Config {
        n: a.n as usize,
        rows,
        tv_solver,
        enhance_solver,
        parallel: !a.serial,
    };
    let (report, runs) = run_table1(&cfg)?;

    ensure_dir(&a.out_dir)?;
    let mut m = RunManifest::new("table1", argv);
    m.param("n", cfg.n);
    m.param("rows", &cfg.rows);
    m.param("tv_solver", &cfg.tv_solver);
    m.param("enhance_solver", &cfg.enhance_solver);
    let truth = shepp_logan(cfg.n);
    write_runs(&mut m, &a.out_dir, &truth, &report, &runs, "table1.csv", a.timings)?;
    m.save(&a.out_dir.join("manifest.json"))?;
    print_report(&report);
    Ok(())
}

fn cmd_noise(a: &NoiseArgs, file_cfg: &FileConfig, argv: &[String]) -> Result<()> {
    let defaults = NoiseConfig::default();
    let mut solver = file_cfg.quadratic_solver.clone().unwrap_or(defaults.solver.clone());
    if file_cfg.quadratic_solver.is_none() {
        solver.fidelity = Fidelity::Penalized;
    }
    a.solver.apply(&mut solver);
    let cfg = NoiseConfig {
        n: a.n as usize,
        lines: a.lines,
        sigma: a.sigma,
        seeds: if a.seeds.is_empty() { defaults.seeds.clone() } else { a.seeds.clone() },
        init_lambda: a.init_lambda.unwrap_or(defaults.init_lambda),
        mu: a.mu,
        k: a.k,
        solver,
        parallel: !a.serial,
    };
    let (report, runs) = run_noise_experiment(&cfg)?;

    ensure_dir(&a.out_dir)?;
    let mut m = RunManifest::new("noise", argv);
    m.param("n", cfg.n);
    m.param("lines", cfg.lines);
    m.param("sigma", cfg.sigma);
    m.param("init_lambda", cfg.init_lambda);
    m.param("mu", cfg.mu);
    m.param("k", cfg.k);
    m.param("solver", &cfg.solver);
    m.seeds = cfg.seeds.clone();
    let truth = shepp_logan(cfg.n);
    write_runs(&mut m, &a.out_dir, &truth, &report, &runs, "noise.csv", a.timings)?;
    m.save(&a.out_dir.join("manifest.json"))?;
    print_report(&report);
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let recorded = RunManifest::load(&a.manifest)?;
    if recorded.argv.first().map(String::as_str) == Some("replay") {
        return Err(Error::InvalidArgument("cannot replay a replay".into()));
    }
    let mut argv = vec!["edgemask".to_string()];
    argv.extend(recorded.argv.iter().cloned());
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| Error::InvalidArgument(format!("manifest arguments do not parse: {e}")))?;
    execute(&cli, &recorded.argv)?;
    let mismatched = recorded.verify_outputs()?;
    if mismatched.is_empty() {
        println!("replay reproduced {} outputs", recorded.outputs.len());
        Ok(())
    } else {
        let list: Vec<String> = mismatched.iter().map(|p| p.display().to_string()).collect();
        Err(Error::ReplayMismatch(list.join(", ")))
    }
}
