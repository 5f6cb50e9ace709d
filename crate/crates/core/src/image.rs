//! Square grayscale images, the Shepp-Logan phantom and raster I/O.
//!
//! Pixel `(i, j)` is row `i` (vertical, top to bottom) and column `j`
//! (horizontal, left to right). The phantom is sampled at pixel centres
//! mapped to `(x, y) = (-1 + (2j+1)/n, 1 - (2i+1)/n)`, so the y axis points up.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// A real-valued `n x n` image with finite pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pixels: Array2<f64>,
}

impl Image {
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        let (rows, cols) = pixels.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::InvalidArgument("image side length must be at least 1".into()));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image pixels".into()));
        }
        Ok(Image { pixels })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "image side length must be at least 1");
        Image {
            pixels: Array2::zeros((n, n)),
        }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        assert!(n >= 1, "image side length must be at least 1");
        assert!(value.is_finite());
        Image {
            pixels: Array2::from_elem((n, n), value),
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Image::new(Array2::from_shape_fn((n, n), |(i, j)| f(i, j)))
    }

    pub fn n(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Array2<f64> {
        self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[[i, j]]
    }

    /// Euclidean norm of the vectorized image.
    pub fn norm(&self) -> f64 {
        self.pixels.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Pointwise `|self - other|`, used for error maps.
    pub fn abs_diff(&self, other: &Image) -> Result<Image> {
        check_same_size(self.n(), other.n())?;
        Ok(Image {
            pixels: (&self.pixels - &other.pixels).mapv(f64::abs),
        })
    }

    pub fn scaled(&self, alpha: f64) -> Image {
        Image {
            pixels: &self.pixels * alpha,
        }
    }
}

pub(crate) fn check_same_size(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Maps pixel `(i, j)` of an `n x n` grid to its centre in `[-1, 1]^2`.
pub fn pixel_center(n: usize, i: usize, j: usize) -> (f64, f64) {
    let n = n as f64;
    let x = -1.0 + (2.0 * j as f64 + 1.0) / n;
    let y = 1.0 - (2.0 * i as f64 + 1.0) / n;
    (x, y)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub center_x: f64,
    pub center_y: f64,
    pub semi_axis_a: f64,
    pub semi_axis_b: f64,
    /// Counter-clockwise rotation of the `a` axis from the x axis, radians.
    pub rotation: f64,
    pub intensity_delta: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.rotation.sin_cos();
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.semi_axis_a).powi(2) + (v / self.semi_axis_b).powi(2) <= 1.0
    }
}

/// Modified-contrast (Toft) Shepp-Logan table:
/// `(intensity, a, b, x0, y0, rotation in degrees)`.
const SHEPP_LOGAN_TABLE: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

pub fn shepp_logan_ellipses() -> Vec<Ellipse> {
    SHEPP_LOGAN_TABLE
        .iter()
        .map(|&(delta, a, b, x0, y0, deg)| Ellipse {
            center_x: x0,
            center_y: y0,
            semi_axis_a: a,
            semi_axis_b: b,
            rotation: deg.to_radians(),
            intensity_delta: delta,
        })
        .collect()
}

/// Rasterizes a sum of ellipse indicators by point membership at pixel centres.
pub fn rasterize_ellipses(n: usize, ellipses: &[Ellipse]) -> Image {
    assert!(n >= 1, "image side length must be at least 1");
    let pixels = Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = pixel_center(n, i, j);
        ellipses
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity_delta)
            .sum()
    });
    Image { pixels }
}

pub fn shepp_logan(n: usize) -> Image {
    rasterize_ellipses(n, &shepp_logan_ellipses())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// A row, read left to right.
    Horizontal,
    /// A column, read top to bottom.
    Vertical,
}

pub fn cross_section(image: &Image, orientation: Orientation, index: usize) -> Result<Vec<f64>> {
    let n = image.n();
    if index >= n {
        return Err(Error::IndexOutOfRange { index, n });
    }
    let line = match orientation {
        Orientation::Horizontal => image.pixels.row(index),
        Orientation::Vertical => image.pixels.column(index),
    };
    Ok(line.to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Csv,
    Pgm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "csv" => Ok(ImageFormat::Csv),
            Some(ext) if ext == "pgm" => Ok(ImageFormat::Pgm),
            _ => Err(Error::InvalidArgument(format!(
                "cannot infer image format from {} (expected .csv or .pgm)",
                path.display()
            ))),
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    match ImageFormat::from_path(path)? {
        ImageFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&text, path)
        }
        ImageFormat::Pgm => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_pgm(&bytes, path)
        }
    }
}

pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Csv => encode_csv(image).into_bytes(),
        ImageFormat::Pgm => encode_pgm(image),
    };
    write_atomic(path, &bytes)
}

/// Writes to a sibling temp file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn encode_csv(image: &Image) -> String {
    encode_csv_rows(image.pixels())
}

pub(crate) fn encode_csv_rows(field: &Array2<f64>) -> String {
    let mut out = String::with_capacity(field.len() * 20);
    for row in field.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            // `Display` for f64 prints the shortest string that round-trips.
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Image> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(path, lineno + 1, format!("{tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if n_rows == 0 {
        return Err(Error::parse(path, 1, "empty image file"));
    }
    if n_rows != n_cols {
        return Err(Error::NotSquare {
            rows: n_rows,
            cols: n_cols,
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let pixels = Array2::from_shape_vec((n_rows, n_cols), flat).expect("row lengths checked");
    Image::new(pixels)
}

pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let n = image.n();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(
        image
            .pixels()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<Image> {
    // Header: magic, width, height, maxval, separated by whitespace, with
    // '#' comments running to end of line, then one whitespace byte.
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(path, 1, "truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::parse(path, 1, format!("unsupported magic {:?}", fields[0])));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::parse(path, 1, format!("bad header field {s:?}: {e}")))
    };
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(Error::parse(path, 1, format!("unsupported maxval {maxval}")));
    }
    if width != height {
        return Err(Error::NotSquare {
            rows: height,
            cols: width,
        });
    }
    let data = bytes.get(pos..pos + width * height).ok_or_else(|| {
        Error::parse(path, 1, format!("expected {} pixel bytes", width * height))
    })?;
    let pixels = Array2::from_shape_vec(
        (height, width),
        data.iter().map(|&b| f64::from(b) / 255.0).collect(),
    )
    .expect("length checked");
    Image::new(pixels)
}
