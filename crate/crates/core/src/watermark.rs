//! Key-seeded binary watermark cast into the coarsest approximation subband.
//!
//! Embedding selects approximation coefficients with `T1 < |w| < T2` and
//! forces each magnitude to `T1 + X1` (bit 0) or `T2 - X1` (bit 1), keeping
//! its sign. Extraction is blind: it re-selects every coefficient with
//! `T1 + X2 <= |w| <= T2 - X2` and reads the bit off the midpoint
//! `(T1 + T2) / 2`. Since `X2 < X1`, the embedded magnitudes sit `X1 - X2`
//! inside the extraction window.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::color::{self, Raster};
use crate::dwt::{forward_dwt2, inverse_dwt2, FilterBank};
use crate::error::{Error, Result};
use crate::metrics;
use crate::plane::Plane;

/// `(row, col)` inside the approximation subband.
pub type Position = (usize, usize);

/// Minimum fraction of agreeing bits for a blind presence verdict.
pub const PRESENCE_SCORE_THRESHOLD: f64 = 0.9;
/// Minimum number of recovered bits before presence can be declared.
pub const PRESENCE_MIN_BITS: usize = 16;

/// Which plane of the image carries the watermark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelMode {
    /// Luma of the full-range YCbCr conversion.
    YcbcrY,
    RgbR,
    RgbG,
    RgbB,
}

impl ChannelMode {
    pub const ALL: [ChannelMode; 4] = [Self::YcbcrY, Self::RgbR, Self::RgbG, Self::RgbB];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::YcbcrY => "ycbcr-y",
            Self::RgbR => "rgb-r",
            Self::RgbG => "rgb-g",
            Self::RgbB => "rgb-b",
        }
    }

    fn rgb_channel(self) -> Option<usize> {
        match self {
            Self::YcbcrY => None,
            Self::RgbR => Some(0),
            Self::RgbG => Some(1),
            Self::RgbB => Some(2),
        }
    }
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ycbcr-y" | "ycbcr" | "y" => Ok(Self::YcbcrY),
            "rgb-r" | "r" => Ok(Self::RgbR),
            "rgb-g" | "rgb" | "g" => Ok(Self::RgbG),
            "rgb-b" | "b" => Ok(Self::RgbB),
            _ => Err(Error::Params(format!("unknown channel mode `{s}`"))),
        }
    }
}

/// Thresholds, key and layout for embedding and extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedParams {
    pub t1: f64,
    pub t2: f64,
    /// Offset of the quantized magnitudes from the thresholds.
    pub x1: f64,
    /// Guard applied to the thresholds when re-selecting at extraction.
    pub x2: f64,
    pub key: u64,
    pub levels: usize,
    pub channel: ChannelMode,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self {
            t1: 1500.0,
            t2: 1600.0,
            x1: 20.0,
            x2: 10.0,
            key: 0,
            levels: 3,
            channel: ChannelMode::YcbcrY,
        }
    }
}

impl EmbedParams {
    pub fn with_key(key: u64) -> Self {
        Self {
            key,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t1, self.t2, self.x1, self.x2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Params("thresholds must be finite".into()));
        }
        if !(0.0 < self.t1 && self.t1 < self.t2) {
            return Err(Error::Params(format!(
                "need 0 < T1 < T2, got T1={} T2={}",
                self.t1, self.t2
            )));
        }
        if !(0.0 < self.x2 && self.x2 < self.x1 && self.x1 < (self.t2 - self.t1) / 2.0) {
            return Err(Error::Params(format!(
                "need 0 < X2 < X1 < (T2-T1)/2, got X1={} X2={}",
                self.x1, self.x2
            )));
        }
        if self.levels == 0 {
            return Err(Error::Params("levels must be at least 1".into()));
        }
        Ok(())
    }

    /// Magnitude a coefficient is set to for `bit`.
    pub fn quantized_magnitude(&self, bit: u8) -> f64 {
        if bit == 0 {
            self.t1 + self.x1
        } else {
            self.t2 - self.x1
        }
    }

    /// Inclusive magnitude window used by blind extraction.
    pub fn extraction_range(&self) -> (f64, f64) {
        (self.t1 + self.x2, self.t2 - self.x2)
    }

    pub fn decision_threshold(&self) -> f64 {
        (self.t1 + self.t2) / 2.0
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4B_7C15;

/// Binary matrix the size of the approximation subband.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WatermarkBits {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl WatermarkBits {
    /// Bits are drawn row-major from a SplitMix64 stream seeded with `key`;
    /// each bit is the top bit of one output word.
    pub fn generate(key: u64, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Params(format!(
                "watermark must be at least 1x1, got {rows}x{cols}"
            )));
        }
        let mut state = key;
        let bits = (0..rows * cols)
            .map(|_| {
                state = state.wrapping_add(GOLDEN_GAMMA);
                let mut z = state;
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                z ^= z >> 31;
                (z >> 63) as u8
            })
            .collect();
        Ok(Self { rows, cols, bits })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, (row, col): Position) -> u8 {
        self.bits[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Copy with everything outside `positions` cleared.
    pub fn masked(&self, positions: impl IntoIterator<Item = Position>) -> Vec<u8> {
        let mut out = vec![0; self.bits.len()];
        for p in positions {
            let i = p.0 * self.cols + p.1;
            out[i] = self.bits[i];
        }
        out
    }
}

pub fn generate_watermark(key: u64, rows: usize, cols: usize) -> Result<WatermarkBits> {
    WatermarkBits::generate(key, rows, cols)
}

/// Signs of the approximation coefficients before embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    cols: usize,
    signs: Vec<i8>,
}

impl SignMatrix {
    pub fn of(plane: &Plane) -> Self {
        Self {
            cols: plane.width(),
            signs: plane
                .data()
                .iter()
                .map(|&v| if v >= 0.0 { 1 } else { -1 })
                .collect(),
        }
    }

    pub fn get(&self, (row, col): Position) -> f64 {
        f64::from(self.signs[row * self.cols + col])
    }
}

/// Positions with `t1 < |w| < t2`, row-major.
pub fn select_coefficients(ll: &Plane, t1: f64, t2: f64) -> Vec<Position> {
    positions_where(ll, |m| t1 < m && m < t2)
}

/// Positions with `lo <= |w| <= hi`, row-major.
pub fn select_inclusive(ll: &Plane, lo: f64, hi: f64) -> Vec<Position> {
    positions_where(ll, |m| lo <= m && m <= hi)
}

fn positions_where(ll: &Plane, keep: impl Fn(f64) -> bool) -> Vec<Position> {
    let mut out = Vec::new();
    for row in 0..ll.height() {
        for col in 0..ll.width() {
            if keep(ll.at(row, col).abs()) {
                out.push((row, col));
            }
        }
    }
    out
}

/// Quantize the selected coefficients of `ll` in place and return the
/// positions that now carry a bit.
pub fn embed_in_approx(
    ll: &mut Plane,
    watermark: &WatermarkBits,
    params: &EmbedParams,
) -> Vec<Position> {
    let signs = SignMatrix::of(ll);
    let positions = select_coefficients(ll, params.t1, params.t2);
    for &p in &positions {
        *ll.at_mut(p.0, p.1) = signs.get(p) * params.quantized_magnitude(watermark.get(p));
    }
    positions
}

/// Blind decoding of every coefficient inside the extraction window.
pub fn decode_approx(ll: &Plane, params: &EmbedParams) -> BTreeMap<Position, u8> {
    let (lo, hi) = params.extraction_range();
    let mid = params.decision_threshold();
    select_inclusive(ll, lo, hi)
        .into_iter()
        .map(|p| (p, u8::from(ll.at(p.0, p.1).abs() >= mid)))
        .collect()
}

/// `(T1, T2)` at 45% and 85% of the largest coefficient magnitude.
pub fn suggest_thresholds(ll: &Plane) -> Result<(f64, f64)> {
    let peak = ll.max_abs();
    if ll.data().is_empty() || peak == 0.0 || !peak.is_finite() {
        return Err(Error::Undefined(
            "threshold suggestion on an all-zero subband",
        ));
    }
    Ok((0.45 * peak, 0.85 * peak))
}

/// [`suggest_thresholds`] on the approximation subband of `host`'s carrier
/// channel.
pub fn suggest_thresholds_for(host: &Raster, params: &EmbedParams) -> Result<(f64, f64)> {
    let pyr = forward_dwt2(
        &carrier_plane(host, params.channel),
        params.levels,
        &FilterBank::default(),
    )?;
    suggest_thresholds(&pyr.approx)
}

/// Outcome of one embedding run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedReport {
    pub params: EmbedParams,
    pub ll_rows: usize,
    pub ll_cols: usize,
    /// Row-major positions that carry a watermark bit.
    pub positions: Vec<Position>,
    pub psnr: f64,
    /// `None` when the host is flat and correlation is undefined.
    pub corr: Option<f64>,
}

impl EmbedReport {
    pub fn embedded_count(&self) -> usize {
        self.positions.len()
    }

    /// Set when no coefficient fell inside `(T1, T2)`.
    pub fn nothing_embedded(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Bits recovered by blind extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionReport {
    pub ll_rows: usize,
    pub ll_cols: usize,
    pub recovered: BTreeMap<Position, u8>,
}

impl ExtractionReport {
    pub fn extracted_count(&self) -> usize {
        self.recovered.len()
    }

    /// Recovered matrix with unrecovered positions as 0.
    pub fn recovered_matrix(&self) -> Vec<u8> {
        let mut out = vec![0; self.ll_rows * self.ll_cols];
        for (&(r, c), &bit) in &self.recovered {
            out[r * self.ll_cols + c] = bit;
        }
        out
    }
}

/// Scores against the embedding record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedScore {
    pub embedded_count: usize,
    pub correctly_recovered: usize,
    pub error_rate_percent: Option<f64>,
    pub nc: Option<metrics::NormalizedCorrelation>,
}

/// Result of correlating an extraction with the key's watermark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub recovered_count: usize,
    pub matching_count: usize,
    /// Fraction of recovered bits that agree with the key's watermark.
    pub score: f64,
    pub present: bool,
    pub against_embed: Option<EmbedScore>,
}

fn split_planes(img: &Raster, channel: ChannelMode) -> (color::PlaneSet, usize) {
    match channel.rgb_channel() {
        None => (color::rgb_to_ycbcr(img), 0),
        Some(c) => (color::rgb_planes(img), c),
    }
}

fn carrier_plane(img: &Raster, channel: ChannelMode) -> Plane {
    match channel.rgb_channel() {
        None => color::luma(img),
        Some(c) => img.channel(c),
    }
}

/// Cast the key's watermark into `host`.
pub fn embed(host: &Raster, params: &EmbedParams) -> Result<(Raster, EmbedReport)> {
    embed_with(host, params, &FilterBank::default())
}

pub fn embed_with(
    host: &Raster,
    params: &EmbedParams,
    fb: &FilterBank,
) -> Result<(Raster, EmbedReport)> {
    params.validate()?;
    let (mut planes, idx) = split_planes(host, params.channel);
    let mut pyr = forward_dwt2(&planes.planes[idx], params.levels, fb)?;
    let (ll_rows, ll_cols) = pyr.approx.shape();
    let watermark = WatermarkBits::generate(params.key, ll_rows, ll_cols)?;

    let positions = embed_in_approx(&mut pyr.approx, &watermark, params);
    let marked = if positions.is_empty() {
        host.clone()
    } else {
        planes.planes[idx] = inverse_dwt2(&pyr, fb)?;
        planes.to_raster()
    };

    let mse = metrics::mse(host, &marked)?;
    let report = EmbedReport {
        params: *params,
        ll_rows,
        ll_cols,
        positions,
        psnr: metrics::psnr_from_mse(mse),
        corr: metrics::corr(host, &marked).ok(),
    };
    Ok((marked, report))
}

/// Blind extraction: only the (possibly attacked) image and the parameters
/// are needed.
pub fn extract(img: &Raster, params: &EmbedParams) -> Result<ExtractionReport> {
    extract_with(img, params, &FilterBank::default())
}

pub fn extract_with(
    img: &Raster,
    params: &EmbedParams,
    fb: &FilterBank,
) -> Result<ExtractionReport> {
    params.validate()?;
    let pyr = forward_dwt2(&carrier_plane(img, params.channel), params.levels, fb)?;
    let (ll_rows, ll_cols) = pyr.approx.shape();
    Ok(ExtractionReport {
        ll_rows,
        ll_cols,
        recovered: decode_approx(&pyr.approx, params),
    })
}

/// Correlate recovered bits with the watermark regenerated from `key`.
///
/// With an embedding record, NC and error rate are computed over the
/// positions that were actually embedded; without one, presence is decided
/// from the agreement ratio alone.
pub fn verify(
    extraction: &ExtractionReport,
    key: u64,
    embed_report: Option<&EmbedReport>,
) -> Result<Verification> {
    let watermark = WatermarkBits::generate(key, extraction.ll_rows, extraction.ll_cols)?;
    let matching_count = extraction
        .recovered
        .iter()
        .filter(|(&p, &bit)| watermark.get(p) == bit)
        .count();
    let recovered_count = extraction.extracted_count();
    let score = if recovered_count == 0 {
        0.0
    } else {
        matching_count as f64 / recovered_count as f64
    };

    let against_embed = match embed_report {
        None => None,
        Some(report) => {
            if (report.ll_rows, report.ll_cols) != (extraction.ll_rows, extraction.ll_cols) {
                return Err(Error::ShapeMismatch(format!(
                    "embedded into {}x{} subband, extracted from {}x{}",
                    report.ll_rows, report.ll_cols, extraction.ll_rows, extraction.ll_cols
                )));
            }
            let correctly_recovered = report
                .positions
                .iter()
                .filter(|p| extraction.recovered.get(p) == Some(&watermark.get(**p)))
                .count();
            let cast = watermark.masked(report.positions.iter().copied());
            Some(EmbedScore {
                embedded_count: report.embedded_count(),
                correctly_recovered,
                error_rate_percent: metrics::error_rate(
                    report.embedded_count(),
                    correctly_recovered,
                )
                .ok(),
                nc: metrics::nc(&cast, &extraction.recovered_matrix()).ok(),
            })
        }
    };

    Ok(Verification {
        recovered_count,
        matching_count,
        score,
        present: recovered_count >= PRESENCE_MIN_BITS && score >= PRESENCE_SCORE_THRESHOLD,
        against_embed,
    })
}
