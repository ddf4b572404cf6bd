//! Image and watermark quality measures: MSE, PSNR, Pearson correlation,
//! normalized correlation of bit matrices and extraction error rate.

use crate::color::Raster;
use crate::error::{Error, Result};
use crate::plane::Plane;

/// Anything that can be viewed as a flat sequence of gray levels.
pub trait Samples {
    /// `(rows, cols, channels)`.
    fn shape(&self) -> (usize, usize, usize);
    fn sample_vec(&self) -> Vec<f64>;
}

impl Samples for Raster {
    fn shape(&self) -> (usize, usize, usize) {
        (self.height(), self.width(), 3)
    }

    fn sample_vec(&self) -> Vec<f64> {
        self.data().iter().map(|&v| f64::from(v)).collect()
    }
}

impl Samples for Plane {
    fn shape(&self) -> (usize, usize, usize) {
        (self.height(), self.width(), 1)
    }

    fn sample_vec(&self) -> Vec<f64> {
        self.data().to_vec()
    }
}

fn paired<S: Samples + ?Sized>(a: &S, b: &S) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (a, b) = (a.sample_vec(), b.sample_vec());
    if a.is_empty() {
        return Err(Error::ShapeMismatch("no samples to compare".into()));
    }
    Ok((a, b))
}

/// Mean squared error over every sample of every channel.
pub fn mse<S: Samples + ?Sized>(a: &S, b: &S) -> Result<f64> {
    let (a, b) = paired(a, b)?;
    let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / a.len() as f64)
}

/// PSNR for 8-bit data from a precomputed MSE; `+inf` when the MSE is zero.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

pub fn psnr<S: Samples + ?Sized>(a: &S, b: &S) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

/// Pearson correlation of the flattened samples.
///
/// A single constant input against a varying one correlates at 0; two
/// constant inputs are rejected.
pub fn corr<S: Samples + ?Sized>(a: &S, b: &S) -> Result<f64> {
    let (a, b) = paired(a, b)?;
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        let (da, db) = (x - mean_a, y - mean_b);
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    match (var_a > 0.0, var_b > 0.0) {
        (false, false) => Err(Error::Undefined("correlation of two constant inputs")),
        (true, true) => Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0)),
        _ => Ok(0.0),
    }
}

/// Normalized correlation between an original bit matrix and a recovered one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCorrelation {
    /// `sum(w * w') / sum(w^2)`; lies in `[0, 1]` for binary inputs.
    pub normalized: f64,
    /// `sum(w * w') / sqrt(sum(w^2))`, the variant with a square-root
    /// denominator. Grows with the number of ones, so it is reported for
    /// comparison only.
    pub sqrt_denominator: f64,
}

/// `w` and `w_rec` are flattened matrices of equal shape; positions that
/// were not recovered must already be zero in `w_rec`.
pub fn nc(w: &[u8], w_rec: &[u8]) -> Result<NormalizedCorrelation> {
    if w.len() != w_rec.len() {
        return Err(Error::ShapeMismatch(format!(
            "watermark has {} entries, recovered matrix {}",
            w.len(),
            w_rec.len()
        )));
    }
    let energy: f64 = w.iter().map(|&v| f64::from(v).powi(2)).sum();
    if energy == 0.0 {
        return Err(Error::Undefined("NC against an all-zero watermark"));
    }
    let cross: f64 = w
        .iter()
        .zip(w_rec)
        .map(|(&a, &b)| f64::from(a) * f64::from(b))
        .sum();
    Ok(NormalizedCorrelation {
        normalized: cross / energy,
        sqrt_denominator: cross / energy.sqrt(),
    })
}

/// Percentage of embedded bits that were not recovered correctly.
pub fn error_rate(embedded: usize, correctly_recovered: usize) -> Result<f64> {
    if embedded == 0 {
        return Err(Error::Undefined("error rate with zero embedded bits"));
    }
    if correctly_recovered > embedded {
        return Err(Error::Params(format!(
            "{correctly_recovered} correct bits out of {embedded} embedded"
        )));
    }
    Ok(100.0 * (embedded - correctly_recovered) as f64 / embedded as f64)
}

/// The four fidelity/robustness figures reported for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub mse: f64,
    pub psnr: f64,
    pub corr: Option<f64>,
    pub nc: Option<f64>,
    pub error_rate_percent: Option<f64>,
}

impl QualityReport {
    pub const CSV_HEADER: [&'static str; 5] =
        ["mse", "psnr_db", "corr", "nc", "error_rate_percent"];

    /// Image-side figures only; watermark-side fields are left empty.
    pub fn between<S: Samples + ?Sized>(host: &S, marked: &S) -> Result<Self> {
        let mse = mse(host, marked)?;
        Ok(Self {
            mse,
            psnr: psnr_from_mse(mse),
            corr: corr(host, marked).ok(),
            nc: None,
            error_rate_percent: None,
        })
    }

    pub fn csv_row(&self) -> [String; 5] {
        [
            format!("{:.6}", self.mse),
            format_db(self.psnr),
            format_opt(self.corr, 6),
            format_opt(self.nc, 4),
            format_opt(self.error_rate_percent, 2),
        ]
    }
}

/// `inf` for the lossless sentinel, four decimals otherwise.
pub fn format_db(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.4}")
    }
}

pub(crate) fn format_opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|v| format!("{v:.decimals$}")).unwrap_or_default()
}
