//! Unitary 2D DFT, radial-line sampling on the DFT grid, and the sampling
//! operator with its adjoint.
//!
//! Frequencies are signed pairs `(p, q)` with `p` conjugate to the row index
//! `i` and `q` conjugate to the column index `j`, each in
//! `-ceil(n/2)+1 ..= floor(n/2)`. Coefficient arrays are stored in the usual
//! FFT order, so `(p, q)` lives at `[p mod n, q mod n]`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{check_same_size, write_atomic, Image};

pub type Frequency = (i64, i64);

/// Largest representable frequency on an `n`-point axis.
pub fn max_frequency(n: usize) -> i64 {
    (n / 2) as i64
}

/// Smallest representable frequency on an `n`-point axis.
pub fn min_frequency(n: usize) -> i64 {
    max_frequency(n) - n as i64 + 1
}

/// Storage index of a signed frequency.
pub fn freq_to_index(f: i64, n: usize) -> usize {
    f.rem_euclid(n as i64) as usize
}

/// Signed frequency of a storage index.
pub fn index_to_freq(k: usize, n: usize) -> i64 {
    if k as i64 <= max_frequency(n) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Aliases any integer frequency into the representable range.
pub fn wrap_frequency(f: i64, n: usize) -> i64 {
    index_to_freq(freq_to_index(f, n), n)
}

/// Planned unitary 2D transforms for one grid size.
#[derive(Clone)]
pub struct Fourier2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier2").field("n", &self.n).finish()
    }
}

impl Fourier2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fourier2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.dim(), (n, n), "transform size mismatch");
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let scale = 1.0 / n as f64;
        for pass in 0..2 {
            {
                let buf = data.as_slice_mut().expect("standard layout");
                plan.process_with_scratch(buf, &mut scratch);
            }
            let transposed = data.t().as_standard_layout().into_owned();
            *data = transposed;
            if pass == 1 {
                data.mapv_inplace(|c| c * scale);
            }
        }
    }

    pub fn forward_complex(&self, field: &Array2<Complex64>) -> Array2<Complex64> {
        let mut data = field.as_standard_layout().into_owned();
        self.transform(&mut data, &self.forward);
        data
    }

    pub fn inverse_complex(&self, coeffs: &Array2<Complex64>) -> Array2<Complex64> {
        let mut data = coeffs.as_standard_layout().into_owned();
        self.transform(&mut data, &self.inverse);
        data
    }

    pub fn forward_real(&self, field: &Array2<f64>) -> Array2<Complex64> {
        let mut data = field.mapv(|v| Complex64::new(v, 0.0));
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&self, coeffs: &Array2<Complex64>) -> Array2<f64> {
        self.inverse_complex(coeffs).mapv(|c| c.re)
    }
}

/// 2D DFT coefficients of an `n x n` image, unitary normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    coeffs: Array2<Complex64>,
}

impl Spectrum {
    pub fn new(coeffs: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = coeffs.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("spectrum".into()));
        }
        Ok(Spectrum { coeffs })
    }

    pub fn zeros(n: usize) -> Self {
        Spectrum {
            coeffs: Array2::zeros((n, n)),
        }
    }

    pub fn n(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<Complex64> {
        self.coeffs
    }

    pub fn get(&self, freq: Frequency) -> Complex64 {
        let n = self.n();
        self.coeffs[[freq_to_index(freq.0, n), freq_to_index(freq.1, n)]]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn dft2(image: &Image) -> Spectrum {
    Spectrum {
        coeffs: Fourier2::new(image.n()).forward_real(image.pixels()),
    }
}

/// Inverse unitary DFT; the result is complex in general.
pub fn idft2(spectrum: &Spectrum) -> Array2<Complex64> {
    Fourier2::new(spectrum.n()).inverse_complex(&spectrum.coeffs)
}

/// A duplicate-free, sorted set of DFT grid frequencies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingPattern {
    n: usize,
    line_count: usize,
    indices: Vec<Frequency>,
    mask: Array2<bool>,
}

impl SamplingPattern {
    /// Builds a pattern from arbitrary in-range frequencies; DC is always added.
    pub fn from_indices(
        n: usize,
        line_count: usize,
        indices: impl IntoIterator<Item = Frequency>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("grid size must be at least 1".into()));
        }
        let (lo, hi) = (min_frequency(n), max_frequency(n));
        let mut set = BTreeSet::new();
        set.insert((0, 0));
        for (p, q) in indices {
            if !(lo..=hi).contains(&p) || !(lo..=hi).contains(&q) {
                return Err(Error::InvalidArgument(format!(
                    "frequency ({p}, {q}) outside {lo}..={hi}"
                )));
            }
            set.insert((p, q));
        }
        let mut mask = Array2::from_elem((n, n), false);
        for &(p, q) in &set {
            mask[[freq_to_index(p, n), freq_to_index(q, n)]] = true;
        }
        Ok(SamplingPattern {
            n,
            line_count,
            indices: set.into_iter().collect(),
            mask,
        })
    }

    /// Every frequency of the grid.
    pub fn full(n: usize) -> Self {
        let (lo, hi) = (min_frequency(n), max_frequency(n));
        let all = (lo..=hi).flat_map(|p| (lo..=hi).map(move |q| (p, q)));
        SamplingPattern::from_indices(n, 0, all).expect("in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn line_count(&self) -> usize {
        self.line_count
    }

    pub fn indices(&self) -> &[Frequency] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Boolean selection in storage order.
    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn contains(&self, freq: Frequency) -> bool {
        self.mask[[freq_to_index(freq.0, self.n), freq_to_index(freq.1, self.n)]]
    }

    /// True if `-f` (aliased) is sampled whenever `f` is.
    pub fn is_conjugate_symmetric(&self) -> bool {
        let n = self.n;
        self.indices
            .iter()
            .all(|&(p, q)| self.contains((wrap_frequency(-p, n), wrap_frequency(-q, n))))
    }
}

/// Union of `lines` rasterized radial lines through DC at angles `pi * l / lines`.
///
/// Each line is stepped at integer radii `t` in `-floor(n/2) ..= floor(n/2)` and
/// `(t cos, t sin)` is rounded to the nearest grid frequency. A rounded value
/// that falls just outside the signed range (only `-n/2` for even `n`) is
/// aliased to its periodic equivalent, which keeps the pattern conjugate
/// symmetric.
pub fn radial_pattern(n: usize, lines: usize) -> Result<SamplingPattern> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be at least 1".into()));
    }
    let half = max_frequency(n);
    let mut points = Vec::with_capacity(lines * n);
    for l in 0..lines {
        let theta = PI * l as f64 / lines as f64;
        let (s, c) = theta.sin_cos();
        for t in -half..=half {
            let p = (t as f64 * c).round() as i64;
            let q = (t as f64 * s).round() as i64;
            points.push((wrap_frequency(p, n), wrap_frequency(q, n)));
        }
    }
    SamplingPattern::from_indices(n, lines, points)
}

/// Fourier coefficients collected on a sampling pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledData {
    pattern: SamplingPattern,
    values: Vec<Complex64>,
}

impl SampledData {
    pub fn new(pattern: SamplingPattern, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != pattern.len() {
            return Err(Error::DimensionMismatch {
                expected: pattern.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("sampled data".into()));
        }
        Ok(SampledData { pattern, values })
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Zero-filled spectrum carrying the data at sampled positions.
    pub fn scatter(&self) -> Array2<Complex64> {
        let n = self.n();
        let mut coeffs = Array2::zeros((n, n));
        for (&(p, q), &v) in self.pattern.indices.iter().zip(&self.values) {
            coeffs[[freq_to_index(p, n), freq_to_index(q, n)]] = v;
        }
        coeffs
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 48);
        writeln!(out, "# n={},lines={}", self.n(), self.pattern.line_count).unwrap();
        out.push_str("p,q,re,im\n");
        for (&(p, q), v) in self.pattern.indices.iter().zip(&self.values) {
            writeln!(out, "{p},{q},{},{}", v.re, v.im).unwrap();
        }
        out
    }

    /// Parses the `p,q,re,im` format. Rows are re-sorted into pattern order.
    /// The grid size comes from the `# n=..` comment, or `n_hint` when absent.
    pub fn from_csv(text: &str, n_hint: Option<usize>, path: &Path) -> Result<Self> {
        let mut n = n_hint;
        let mut lines_meta = 0usize;
        let mut saw_header = false;
        let mut rows: Vec<(Frequency, Complex64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split(',') {
                    match kv.trim().split_once('=') {
                        Some(("n", v)) => {
                            n = Some(v.trim().parse().map_err(|e| {
                                Error::parse(path, lineno + 1, format!("bad n: {e}"))
                            })?)
                        }
                        Some(("lines", v)) => {
                            lines_meta = v.trim().parse().map_err(|e| {
                                Error::parse(path, lineno + 1, format!("bad lines: {e}"))
                            })?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !saw_header {
                if line.replace(' ', "") != "p,q,re,im" {
                    return Err(Error::parse(path, lineno + 1, "expected header p,q,re,im"));
                }
                saw_header = true;
                continue;
            }
            let toks: Vec<&str> = line.split(',').map(str::trim).collect();
            if toks.len() != 4 {
                return Err(Error::parse(path, lineno + 1, "expected 4 fields"));
            }
            let int = |s: &str| {
                s.parse::<i64>()
                    .map_err(|e| Error::parse(path, lineno + 1, format!("{s:?}: {e}")))
            };
            let real = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse(path, lineno + 1, format!("{s:?}: {e}")))
            };
            rows.push((
                (int(toks[0])?, int(toks[1])?),
                Complex64::new(real(toks[2])?, real(toks[3])?),
            ));
        }
        if !saw_header {
            return Err(Error::parse(path, 1, "missing header p,q,re,im"));
        }
        let n = n.ok_or_else(|| Error::parse(path, 1, "grid size unknown (no `# n=` line)"))?;
        rows.sort_by_key(|r| r.0);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::parse(path, 1, format!("duplicate frequency {:?}", w[0].0)));
            }
        }
        if !rows.iter().any(|r| r.0 == (0, 0)) {
            return Err(Error::parse(path, 1, "DC coefficient (0,0) missing"));
        }
        let pattern = SamplingPattern::from_indices(n, lines_meta, rows.iter().map(|r| r.0))?;
        SampledData::new(pattern, rows.into_iter().map(|r| r.1).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_csv().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>, n_hint: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SampledData::from_csv(&text, n_hint, path)
    }
}

pub fn sample(spectrum: &Spectrum, pattern: &SamplingPattern) -> Result<SampledData> {
    check_same_size(pattern.n, spectrum.n())?;
    let values = pattern.indices.iter().map(|&f| spectrum.get(f)).collect();
    SampledData::new(pattern.clone(), values)
}

pub fn sample_adjoint(data: &SampledData) -> Spectrum {
    Spectrum {
        coeffs: data.scatter(),
    }
}

/// Sampled Fourier data of a real image.
pub fn acquire(image: &Image, pattern: &SamplingPattern) -> Result<SampledData> {
    sample(&dft2(image), pattern)
}

/// Adds i.i.d. `N(0, sigma^2)` draws to the real and imaginary parts separately.
pub fn add_noise(data: &SampledData, sigma: f64, seed: u64) -> Result<SampledData> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(data.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = data
        .values
        .iter()
        .map(|v| {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            v + Complex64::new(re, im)
        })
        .collect();
    SampledData::new(data.pattern.clone(), values)
}

/// Replaces the sampled coefficients of `spectrum` with the data, in place.
pub fn impose_data(spectrum: &mut Array2<Complex64>, data: &SampledData) {
    let n = data.n();
    for (&(p, q), &v) in data.pattern.indices.iter().zip(&data.values) {
        spectrum[[freq_to_index(p, n), freq_to_index(q, n)]] = v;
    }
}

/// Zeroes the sampled coefficients of `spectrum`, in place.
pub(crate) fn zero_sampled(spectrum: &mut Array2<Complex64>, pattern: &SamplingPattern) {
    Zip::from(spectrum).and(&pattern.mask).for_each(|c, &m| {
        if m {
            *c = Complex64::new(0.0, 0.0);
        }
    });
}

/// Zeroes the unsampled coefficients of `spectrum`, in place.
pub(crate) fn keep_sampled(spectrum: &mut Array2<Complex64>, pattern: &SamplingPattern) {
    Zip::from(spectrum).and(&pattern.mask).for_each(|c, &m| {
        if !m {
            *c = Complex64::new(0.0, 0.0);
        }
    });
}

/// Exact projection onto `{x : S F x = b}` followed by the real part.
pub fn project_onto_data(fourier: &Fourier2, image: &Array2<f64>, data: &SampledData) -> Array2<f64> {
    let mut spec = fourier.forward_real(image);
    impose_data(&mut spec, data);
    fourier.inverse_real(&spec)
}
