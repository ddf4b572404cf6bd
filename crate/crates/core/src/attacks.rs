//! Deterministic attack simulators: JPEG-style compression to a target
//! ratio, rotation with realignment, and median filtering.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use crate::color::{self, quantize, Raster};
use crate::error::{Error, Result};

/// One attack with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackSpec {
    /// Compress to roughly this compression ratio.
    Jpeg { cr: f64 },
    /// Rotate by this many degrees and back.
    Rotate { angle: f64 },
    /// Median filter with a square window of this side.
    Median { window: usize },
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::AttackSpec {
                spec: self.to_string(),
                reason: reason.to_string(),
            })
        };
        match *self {
            Self::Jpeg { cr } if !(cr.is_finite() && cr > 1.0) => {
                fail("compression ratio must exceed 1")
            }
            Self::Rotate { angle } if !(angle > -180.0 && angle <= 180.0) => {
                fail("angle must lie in (-180, 180]")
            }
            Self::Median { window } if window != 3 && window != 5 => fail("window must be 3 or 5"),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, img: &Raster) -> Result<Attacked> {
        self.validate()?;
        Ok(match *self {
            Self::Jpeg { cr } => {
                let outcome = jpeg_attack(img, cr)?;
                Attacked {
                    image: outcome.image,
                    jpeg: Some(outcome.stats),
                }
            }
            Self::Rotate { angle } => Attacked {
                image: rotate_attack(img, angle),
                jpeg: None,
            },
            Self::Median { window } => Attacked {
                image: median_attack(img, window)?,
                jpeg: None,
            },
        })
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Jpeg { cr } => write!(f, "jpeg:cr={cr}"),
            Self::Rotate { angle } => write!(f, "rotate:angle={angle}"),
            Self::Median { window } => write!(f, "median:window={window}"),
        }
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::AttackSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| bad("expected `kind:key=value`"))?;
        let (key, value) = arg
            .split_once('=')
            .ok_or_else(|| bad("expected `key=value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| bad("value is not a number"))
        };
        let spec = match (kind.trim().to_ascii_lowercase().as_str(), key) {
            ("jpeg", "cr") => Self::Jpeg { cr: number()? },
            ("rotate", "angle") => Self::Rotate { angle: number()? },
            ("median", "window") => Self::Median {
                window: value
                    .parse()
                    .map_err(|_| bad("window must be an integer"))?,
            },
            _ => return Err(bad("unknown attack or parameter")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// An attacked image plus compression statistics for JPEG runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Attacked {
    pub image: Raster,
    pub jpeg: Option<JpegStats>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JpegStats {
    pub target_cr: f64,
    pub achieved_cr: f64,
    /// Quality factor on the 1..=100 scale, possibly fractional.
    pub quality: f64,
    /// Whether `achieved_cr` is within 5% of the target.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JpegOutcome {
    pub image: Raster,
    pub stats: JpegStats,
}

const BLOCK: usize = 8;

/// Acceptable relative deviation of the achieved ratio from the target.
pub const CR_TOLERANCE: f64 = 0.05;

/// Bits charged for markers, quantization and Huffman tables.
pub const JPEG_HEADER_BITS: f64 = 600.0 * 8.0;

#[rustfmt::skip]
const LUMA_TABLE: [f64; 64] = [
    16., 11., 10., 16., 24., 40., 51., 61.,
    12., 12., 14., 19., 26., 58., 60., 55.,
    14., 13., 16., 24., 40., 57., 69., 56.,
    14., 17., 22., 29., 51., 87., 80., 62.,
    18., 22., 37., 56., 68., 109., 103., 77.,
    24., 35., 55., 64., 81., 104., 113., 92.,
    49., 64., 78., 87., 103., 121., 120., 101.,
    72., 92., 95., 98., 112., 100., 103., 99.,
];

#[rustfmt::skip]
const CHROMA_TABLE: [f64; 64] = [
    17., 18., 24., 47., 99., 99., 99., 99.,
    18., 21., 26., 66., 99., 99., 99., 99.,
    24., 26., 56., 99., 99., 99., 99., 99.,
    47., 66., 99., 99., 99., 99., 99., 99.,
    99., 99., 99., 99., 99., 99., 99., 99.,
    99., 99., 99., 99., 99., 99., 99., 99.,
    99., 99., 99., 99., 99., 99., 99., 99.,
    99., 99., 99., 99., 99., 99., 99., 99.,
];

/// Orthonormal 8-point DCT-II basis, `COS[u][x]`.
static COS: LazyLock<[[f64; BLOCK]; BLOCK]> = LazyLock::new(|| {
    let mut t = [[0.0; BLOCK]; BLOCK];
    for (u, row) in t.iter_mut().enumerate() {
        let alpha = if u == 0 {
            (1.0 / 8.0f64).sqrt()
        } else {
            (2.0 / 8.0f64).sqrt()
        };
        for (x, v) in row.iter_mut().enumerate() {
            *v = alpha * (((2 * x + 1) as f64 * u as f64 * PI) / 16.0).cos();
        }
    }
    t
});

fn dct_block(block: &[f64; 64]) -> [f64; 64] {
    let c = &*COS;
    let mut tmp = [0.0; 64];
    for u in 0..BLOCK {
        for x in 0..BLOCK {
            tmp[u * BLOCK + x] = (0..BLOCK).map(|y| c[u][y] * block[y * BLOCK + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            out[u * BLOCK + v] = (0..BLOCK).map(|x| tmp[u * BLOCK + x] * c[v][x]).sum();
        }
    }
    out
}

fn idct_block(coef: &[f64; 64]) -> [f64; 64] {
    let c = &*COS;
    let mut tmp = [0.0; 64];
    for y in 0..BLOCK {
        for v in 0..BLOCK {
            tmp[y * BLOCK + v] = (0..BLOCK).map(|u| c[u][y] * coef[u * BLOCK + v]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..BLOCK {
        for x in 0..BLOCK {
            out[y * BLOCK + x] = (0..BLOCK).map(|v| tmp[y * BLOCK + v] * c[v][x]).sum();
        }
    }
    out
}

/// Baseline table scaled to a (possibly fractional) quality factor using
/// the IJG convention.
pub fn scaled_table(base: &[f64; 64], quality: f64) -> [f64; 64] {
    let q = quality.clamp(1.0, 100.0);
    let scale = if q < 50.0 {
        5000.0 / q
    } else {
        200.0 - 2.0 * q
    };
    base.map(|b| ((b * scale + 50.0) / 100.0).floor().clamp(1.0, 255.0))
}

/// DCT coefficients of every block of the three level-shifted YCbCr planes.
struct BlockCoefficients {
    width: usize,
    height: usize,
    blocks_x: usize,
    blocks_y: usize,
    /// `planes[p][block]`
    planes: [Vec<[f64; 64]>; 3],
}

impl BlockCoefficients {
    fn of(img: &Raster) -> Self {
        let ycc = color::rgb_to_ycbcr(img);
        let (w, h) = (img.width(), img.height());
        let (bx, by) = (w.div_ceil(BLOCK), h.div_ceil(BLOCK));
        let planes = ycc.planes.each_ref().map(|plane| {
            let mut blocks = Vec::with_capacity(bx * by);
            for j in 0..by {
                for i in 0..bx {
                    let mut block = [0.0; 64];
                    for y in 0..BLOCK {
                        for x in 0..BLOCK {
                            // replicate edges into partial blocks
                            let row = (j * BLOCK + y).min(h - 1);
                            let col = (i * BLOCK + x).min(w - 1);
                            block[y * BLOCK + x] = plane.at(row, col) - 128.0;
                        }
                    }
                    blocks.push(dct_block(&block));
                }
            }
            blocks
        });
        Self {
            width: w,
            height: h,
            blocks_x: bx,
            blocks_y: by,
            planes,
        }
    }

    fn tables(quality: f64) -> [[f64; 64]; 3] {
        let luma = scaled_table(&LUMA_TABLE, quality);
        let chroma = scaled_table(&CHROMA_TABLE, quality);
        [luma, chroma, chroma]
    }

    fn quantized(&self, quality: f64) -> impl Iterator<Item = i64> + '_ {
        let tables = Self::tables(quality);
        self.planes.iter().zip(tables).flat_map(|(blocks, table)| {
            blocks
                .iter()
                .flat_map(move |b| b.iter().zip(table).map(|(c, q)| (c / q).round() as i64))
        })
    }

    /// Raw bits over estimated coded bits at `quality`.
    fn compression_ratio(&self, quality: f64) -> f64 {
        let mut histogram = std::collections::BTreeMap::<i64, usize>::new();
        let mut n = 0usize;
        for v in self.quantized(quality) {
            *histogram.entry(v).or_default() += 1;
            n += 1;
        }
        let total = n as f64;
        let entropy: f64 = histogram
            .values()
            .map(|&k| {
                let p = k as f64 / total;
                -p * p.log2()
            })
            .sum();
        let raw_bits = (self.width * self.height * 24) as f64;
        raw_bits / (total * entropy + JPEG_HEADER_BITS)
    }

    fn decode(&self, quality: f64) -> Raster {
        let tables = Self::tables(quality);
        let (w, h) = (self.width, self.height);
        let mut planes = [
            crate::plane::Plane::zeros(w, h),
            crate::plane::Plane::zeros(w, h),
            crate::plane::Plane::zeros(w, h),
        ];
        for ((plane, blocks), table) in planes.iter_mut().zip(&self.planes).zip(tables) {
            for j in 0..self.blocks_y {
                for i in 0..self.blocks_x {
                    let mut coef = blocks[j * self.blocks_x + i];
                    for (c, q) in coef.iter_mut().zip(table) {
                        *c = (*c / q).round() * q;
                    }
                    let pixels = idct_block(&coef);
                    for y in 0..BLOCK {
                        for x in 0..BLOCK {
                            let (row, col) = (j * BLOCK + y, i * BLOCK + x);
                            if row < h && col < w {
                                *plane.at_mut(row, col) = pixels[y * BLOCK + x] + 128.0;
                            }
                        }
                    }
                }
            }
        }
        color::ycbcr_to_rgb(&color::PlaneSet {
            mode: color::ColorMode::YCbCr,
            planes,
        })
    }
}

/// Estimated compression ratio of `img` at a given quality factor.
pub fn estimated_cr(img: &Raster, quality: f64) -> f64 {
    BlockCoefficients::of(img).compression_ratio(quality)
}

/// Compress and decompress `img` at a fixed quality factor.
pub fn jpeg_at_quality(img: &Raster, quality: f64) -> Raster {
    BlockCoefficients::of(img).decode(quality)
}

/// Compress to approximately `target_cr`, searching the quality factor by
/// bisection. If the target lies outside what qualities 1..=100 reach, the
/// closest end is used and `converged` is false.
pub fn jpeg_attack(img: &Raster, target_cr: f64) -> Result<JpegOutcome> {
    AttackSpec::Jpeg { cr: target_cr }.validate()?;
    let coefs = BlockCoefficients::of(img);
    let cr = |q: f64| coefs.compression_ratio(q);

    // Ratio falls as quality rises.
    let (mut lo, mut hi) = (1.0f64, 100.0f64);
    let (cr_lo, cr_hi) = (cr(lo), cr(hi));
    let (quality, achieved) = if target_cr >= cr_lo {
        (lo, cr_lo)
    } else if target_cr <= cr_hi {
        (hi, cr_hi)
    } else {
        let mut best = (hi, cr_hi);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let value = cr(mid);
            if (value - target_cr).abs() < (best.1 - target_cr).abs() {
                best = (mid, value);
            }
            if value > target_cr {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-6 {
                break;
            }
        }
        for q in [lo, hi] {
            let value = cr(q);
            if (value - target_cr).abs() < (best.1 - target_cr).abs() {
                best = (q, value);
            }
        }
        best
    };

    Ok(JpegOutcome {
        image: coefs.decode(quality),
        stats: JpegStats {
            target_cr,
            achieved_cr: achieved,
            quality,
            converged: (achieved - target_cr).abs() <= CR_TOLERANCE * target_cr,
        },
    })
}

/// Resample `src` rotated by `angle_deg` about its center into an
/// `out_w` x `out_h` canvas sharing that center. Samples that fall outside
/// the source are black.
fn rotate_into(src: &Raster, angle_deg: f64, out_w: usize, out_h: usize) -> Raster {
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let (w, h) = (src.width() as f64, src.height() as f64);
    let (scx, scy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let (dcx, dcy) = ((out_w as f64 - 1.0) / 2.0, (out_h as f64 - 1.0) / 2.0);

    let fetch = |x: i64, y: i64| -> [f64; 3] {
        if x < 0 || y < 0 || x >= src.width() as i64 || y >= src.height() as i64 {
            [0.0; 3]
        } else {
            src.pixel(y as usize, x as usize).map(f64::from)
        }
    };

    Raster::from_fn(out_w, out_h, |row, col| {
        let (dx, dy) = (col as f64 - dcx, row as f64 - dcy);
        let sx = cos * dx + sin * dy + scx;
        let sy = -sin * dx + cos * dy + scy;
        if sx <= -1.0 || sy <= -1.0 || sx >= w || sy >= h {
            return [0, 0, 0];
        }
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let (p00, p01, p10, p11) = (
            fetch(x0, y0),
            fetch(x0 + 1, y0),
            fetch(x0, y0 + 1),
            fetch(x0 + 1, y0 + 1),
        );
        let mut out = [0u8; 3];
        for ch in 0..3 {
            let top = p00[ch] * (1.0 - fx) + p01[ch] * fx;
            let bottom = p10[ch] * (1.0 - fx) + p11[ch] * fx;
            out[ch] = quantize(top * (1.0 - fy) + bottom * fy);
        }
        out
    })
}

/// Rotate by `angle_deg` onto a canvas large enough to hold the whole
/// rotated image, then rotate back by the same amount and crop to the
/// original size. Both passes are bilinear and produce 8-bit images.
pub fn rotate_attack(img: &Raster, angle_deg: f64) -> Raster {
    if angle_deg == 0.0 {
        return img.clone();
    }
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let (w, h) = (img.width() as f64, img.height() as f64);
    // Slack absorbs rounding of sin/cos at quarter turns.
    let canvas_w = (w * cos.abs() + h * sin.abs() - 1e-9).ceil() as usize;
    let canvas_h = (w * sin.abs() + h * cos.abs() - 1e-9).ceil() as usize;
    let rotated = rotate_into(img, angle_deg, canvas_w, canvas_h);
    rotate_into(&rotated, -angle_deg, img.width(), img.height())
}

/// Per-channel median over a `window` x `window` neighbourhood with edge
/// replication.
pub fn median_attack(img: &Raster, window: usize) -> Result<Raster> {
    AttackSpec::Median { window }.validate()?;
    let r = (window / 2) as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut buf = Vec::with_capacity(window * window);
    Ok(Raster::from_fn(img.width(), img.height(), |row, col| {
        let mut out = [0u8; 3];
        for (ch, slot) in out.iter_mut().enumerate() {
            buf.clear();
            for dy in -r..=r {
                for dx in -r..=r {
                    let y = (row as isize + dy).clamp(0, h - 1) as usize;
                    let x = (col as isize + dx).clamp(0, w - 1) as usize;
                    buf.push(img.pixel(y, x)[ch]);
                }
            }
            let mid = buf.len() / 2;
            *slot = *buf.select_nth_unstable(mid).1;
        }
        out
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psnr;

    fn textured(w: usize, h: usize) -> Raster {
        Raster::from_fn(w, h, |r, c| {
            let (x, y) = (c as f64, r as f64);
            let v = |a: f64, b: f64| {
                (128.0 + 90.0 * ((x / a).sin() * (y / b).cos()) + 20.0 * ((x * y) / 97.0).sin())
                    as u8
            };
            [v(7.0, 11.0), v(13.0, 5.0), v(3.0, 17.0)]
        })
    }

    #[test]
    fn spec_strings_parse_and_print() {
        let cases = [
            ("jpeg:cr=15", AttackSpec::Jpeg { cr: 15.0 }),
            ("rotate:angle=-60", AttackSpec::Rotate { angle: -60.0 }),
            ("median:window=3", AttackSpec::Median { window: 3 }),
        ];
        for (text, spec) in cases {
            assert_eq!(text.parse::<AttackSpec>().unwrap(), spec);
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        for text in [
            "rotate:angle=200",
            "rotate:angle=-180",
            "median:window=4",
            "median:window=7",
            "jpeg:cr=1",
            "jpeg:cr=abc",
            "blur:sigma=2",
            "jpeg",
            "jpeg:15",
        ] {
            assert!(text.parse::<AttackSpec>().is_err(), "{text}");
        }
        assert!("rotate:angle=180".parse::<AttackSpec>().is_ok());
    }

    #[test]
    fn dct_round_trip() {
        let mut block = [0.0; 64];
        for (i, v) in block.iter_mut().enumerate() {
            *v = ((i * 37) % 255) as f64 - 128.0;
        }
        let back = idct_block(&dct_block(&block));
        for (a, b) in block.iter().zip(back) {
            assert!((a - b).abs() < 1e-9);
        }
        // DC of a flat block is 8x its value.
        let flat = dct_block(&[10.0; 64]);
        assert!((flat[0] - 80.0).abs() < 1e-9);
        assert!(flat[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn quality_scaling_follows_ijg() {
        assert_eq!(scaled_table(&LUMA_TABLE, 50.0), LUMA_TABLE);
        assert!(scaled_table(&LUMA_TABLE, 100.0).iter().all(|&v| v == 1.0));
        assert_eq!(scaled_table(&LUMA_TABLE, 1.0)[0], 255.0);
        assert_eq!(scaled_table(&LUMA_TABLE, 75.0)[0], 8.0);
    }

    #[test]
    fn near_lossless_limit() {
        let img = textured(64, 64);
        let out = jpeg_attack(&img, 1.01).unwrap();
        assert_eq!(out.stats.quality, 100.0);
        assert!(!out.stats.converged);
        assert!(psnr(&img, &out.image).unwrap() > 45.0);
    }

    #[test]
    fn ratio_falls_as_quality_rises() {
        let img = textured(64, 64);
        let coefs = BlockCoefficients::of(&img);
        let mut previous = f64::INFINITY;
        for q in (1..=100).map(f64::from) {
            let cr = coefs.compression_ratio(q);
            assert!(cr <= previous + 1e-9, "q={q}: {cr} > {previous}");
            previous = cr;
        }
    }

    #[test]
    fn bisection_hits_reachable_targets() {
        let img = textured(64, 64);
        for target in [5.0, 10.0, 15.0] {
            let out = jpeg_attack(&img, target).unwrap();
            assert!(out.stats.converged, "{target}: {:?}", out.stats);
            assert_eq!(out.image.width(), 64);
        }
    }

    #[test]
    fn jpeg_handles_partial_blocks() {
        let img = textured(20, 13);
        let out = jpeg_at_quality(&img, 90.0);
        assert_eq!((out.width(), out.height()), (20, 13));
        assert!(psnr(&img, &out).unwrap() > 30.0);
    }

    #[test]
    fn zero_rotation_is_identity() {
        let img = textured(32, 32);
        assert_eq!(rotate_attack(&img, 0.0), img);
    }

    #[test]
    fn quarter_turn_is_exact_on_square() {
        let img = textured(32, 32);
        assert_eq!(rotate_attack(&img, 90.0), img);
        assert_eq!(rotate_attack(&img, -90.0), img);
        assert_eq!(rotate_attack(&img, 180.0), img);
    }

    #[test]
    fn rotation_keeps_shape_and_content() {
        let img = textured(48, 32);
        for angle in [20.0, -60.0, 130.0, -110.0] {
            let out = rotate_attack(&img, angle);
            assert_eq!((out.width(), out.height()), (48, 32));
            assert!(psnr(&img, &out).unwrap() > 20.0, "{angle}");
        }
    }

    #[test]
    fn median_cases() {
        let flat = Raster::filled(9, 9, [40, 80, 120]);
        assert_eq!(median_attack(&flat, 3).unwrap(), flat);
        assert_eq!(median_attack(&flat, 5).unwrap(), flat);

        let mut salted = flat.clone();
        salted.set_pixel(4, 4, [255, 255, 255]);
        assert_eq!(median_attack(&salted, 3).unwrap(), flat);

        assert!(median_attack(&flat, 4).is_err());
    }

    #[test]
    fn median_is_per_channel() {
        let img = textured(16, 16);
        let whole = median_attack(&img, 3).unwrap();
        for ch in 0..3 {
            let single = Raster::from_fn(16, 16, |r, c| [img.pixel(r, c)[ch]; 3]);
            let filtered = median_attack(&single, 3).unwrap();
            for r in 0..16 {
                for c in 0..16 {
                    assert_eq!(filtered.pixel(r, c)[0], whole.pixel(r, c)[ch]);
                }
            }
        }
    }

    #[test]
    fn attacks_are_deterministic() {
        let img = textured(32, 32);
        for spec in ["jpeg:cr=8", "rotate:angle=33", "median:window=5"] {
            let spec: AttackSpec = spec.parse().unwrap();
            assert_eq!(spec.apply(&img).unwrap(), spec.apply(&img).unwrap());
        }
    }
}
