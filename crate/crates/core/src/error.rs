use thiserror::Error;

/// Errors produced by the watermarking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimensions {width}x{height} are not divisible by {divisor}")]
    Dimensions {
        width: usize,
        height: usize,
        divisor: usize,
    },

    #[error("invalid raster: {0}")]
    Raster(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("malformed pyramid: {0}")]
    Pyramid(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("invalid attack spec `{spec}`: {reason}")]
    AttackSpec { spec: String, reason: String },

    #[error("{0} is undefined for these inputs")]
    Undefined(&'static str),

    #[error("report line {line}: {reason}")]
    Report { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
