//! Process exit codes.

use std::fmt;
use std::path::Path;

use wavemark::Error;

pub const FAILURE: u8 = 1;
pub const IO: u8 = 2;
pub const DIMENSIONS: u8 = 3;
/// Unparsable attack spec, invalid parameters or bad command line.
pub const BAD_SPEC: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    message: String,
}

impl Failure {
    /// Failures touching `path` are I/O failures, except for dimension
    /// problems discovered while decoding.
    pub fn io(path: &Path, err: Error) -> Self {
        let code = match err {
            Error::Dimensions { .. } => DIMENSIONS,
            _ => IO,
        };
        Self {
            code,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::Dimensions { .. } => DIMENSIONS,
            Error::AttackSpec { .. } | Error::Params(_) => BAD_SPEC,
            Error::Io(_)
            | Error::Image(_)
            | Error::Csv(_)
            | Error::Report { .. }
            | Error::Raster(_) => IO,
            _ => FAILURE,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
