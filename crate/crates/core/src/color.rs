//! Conversion between interleaved 8-bit RGB rasters and floating-point planes.
//!
//! The YCbCr transform is the full-range (JPEG) BT.601 matrix. Planes stay in
//! `f64` until they are written back to a [`Raster`], which is the only place
//! rounding and clamping happen.

use std::sync::LazyLock;

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Forward RGB -> YCbCr matrix, before the +128 chroma offset.
const RGB_TO_YCBCR: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
];

const CHROMA_OFFSET: f64 = 128.0;

/// Exact inverse of [`RGB_TO_YCBCR`], so an unmodified round trip lands back
/// on the original integers.
static YCBCR_TO_RGB: LazyLock<[[f64; 3]; 3]> = LazyLock::new(|| invert3(&RGB_TO_YCBCR));

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let cofactor = |r: usize, c: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
        m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
    };
    let det = m[0][0] * cofactor(0, 0) + m[0][1] * cofactor(0, 1) + m[0][2] * cofactor(0, 2);
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            // adjugate is the transposed cofactor matrix
            *v = cofactor(c, r) / det;
        }
    }
    inv
}

/// An 8-bit, 3-channel image with row-major interleaved RGB samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::Raster(format!(
                "expected {} samples for {width}x{height} RGB, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for row in 0..height {
            for col in 0..width {
                data.extend_from_slice(&f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// One channel (0 = R, 1 = G, 2 = B) as a float plane.
    pub fn channel(&self, channel: usize) -> Plane {
        Plane::from_fn(self.width, self.height, |r, c| {
            f64::from(self.pixel(r, c)[channel])
        })
    }
}

/// Which color space the planes of a [`PlaneSet`] are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    YCbCr,
    Rgb,
}

/// Three equally sized float planes: (Y, Cb, Cr) or (R, G, B).
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSet {
    pub mode: ColorMode,
    pub planes: [Plane; 3],
}

impl PlaneSet {
    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    /// Write back to 8 bits, whatever the mode.
    pub fn to_raster(&self) -> Raster {
        match self.mode {
            ColorMode::YCbCr => ycbcr_to_rgb(self),
            ColorMode::Rgb => {
                let [r, g, b] = &self.planes;
                Raster::from_fn(self.width(), self.height(), |row, col| {
                    [
                        quantize(r.at(row, col)),
                        quantize(g.at(row, col)),
                        quantize(b.at(row, col)),
                    ]
                })
            }
        }
    }
}

/// Round half away from zero, then clamp to the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Per-pixel YCbCr triple for one RGB sample, unrounded.
#[inline]
pub fn ycbcr_of(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(f64::from);
    let m = &RGB_TO_YCBCR;
    [
        m[0][0] * r + m[0][1] * g + m[0][2] * b,
        CHROMA_OFFSET + m[1][0] * r + m[1][1] * g + m[1][2] * b,
        CHROMA_OFFSET + m[2][0] * r + m[2][1] * g + m[2][2] * b,
    ]
}

/// Per-pixel inverse of [`ycbcr_of`], unrounded.
#[inline]
pub fn rgb_of(ycbcr: [f64; 3]) -> [f64; 3] {
    let y = ycbcr[0];
    let cb = ycbcr[1] - CHROMA_OFFSET;
    let cr = ycbcr[2] - CHROMA_OFFSET;
    let m = &*YCBCR_TO_RGB;
    [
        m[0][0] * y + m[0][1] * cb + m[0][2] * cr,
        m[1][0] * y + m[1][1] * cb + m[1][2] * cr,
        m[2][0] * y + m[2][1] * cb + m[2][2] * cr,
    ]
}

pub fn rgb_to_ycbcr(img: &Raster) -> PlaneSet {
    let (w, h) = (img.width(), img.height());
    let mut planes = [Plane::zeros(w, h), Plane::zeros(w, h), Plane::zeros(w, h)];
    for row in 0..h {
        for col in 0..w {
            let ycc = ycbcr_of(img.pixel(row, col));
            for (plane, v) in planes.iter_mut().zip(ycc) {
                *plane.at_mut(row, col) = v;
            }
        }
    }
    PlaneSet {
        mode: ColorMode::YCbCr,
        planes,
    }
}

/// Inverse conversion; the result is rounded and clamped per sample.
///
/// The planes are interpreted as Y, Cb, Cr regardless of `p.mode`.
pub fn ycbcr_to_rgb(p: &PlaneSet) -> Raster {
    let [y, cb, cr] = &p.planes;
    Raster::from_fn(p.width(), p.height(), |row, col| {
        rgb_of([y.at(row, col), cb.at(row, col), cr.at(row, col)]).map(quantize)
    })
}

/// Split into float R, G, B planes without any color transform.
pub fn rgb_planes(img: &Raster) -> PlaneSet {
    PlaneSet {
        mode: ColorMode::Rgb,
        planes: [img.channel(0), img.channel(1), img.channel(2)],
    }
}

/// Luma of every pixel as a float plane.
pub fn luma(img: &Raster) -> Plane {
    Plane::from_fn(img.width(), img.height(), |r, c| {
        ycbcr_of(img.pixel(r, c))[0]
    })
}
