//! Blind watermarking of color images in the wavelet domain.
//!
//! A key-derived bit matrix is cast into the level-3 approximation subband
//! of the luma plane (or one RGB channel) by snapping selected coefficient
//! magnitudes to one of two levels. Extraction needs only the marked image
//! and the key.

pub mod attacks;
pub mod bench;
pub mod color;
pub mod dwt;
pub mod error;
pub mod io;
pub mod metrics;
pub mod plane;
pub mod report;
pub mod watermark;

pub use error::{Error, Result};
