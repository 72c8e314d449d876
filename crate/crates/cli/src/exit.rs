use std::fmt;
use std::path::Path;

use sca_doe::Error;

pub const USAGE: u8 = 2;
pub const IO: u8 = 3;
pub const DATA: u8 = 4;
/// A run or numeric routine failed on otherwise valid input.
pub const FAILED: u8 = 1;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Failure {
            code: IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn code_of(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) | Error::Schema { .. } => USAGE,
        Error::Io(_) | Error::MalformedFile(_) | Error::Json(_) => IO,
        Error::LengthMismatch { .. }
        | Error::MissingClass(_)
        | Error::DegenerateInput(_)
        | Error::CurveAbsent
        | Error::EmptyPareto => DATA,
        Error::NumericalError(_) | Error::Executor(_) => FAILED,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure {
            code: code_of(&err),
            message: err.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Attaches a path to library errors that came from touching the filesystem.
pub trait WithPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> WithPath<T> for sca_doe::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| {
            let code = code_of(&e);
            Failure {
                code,
                message: format!("{}: {e}", path.display()),
            }
        })
    }
}

impl<T> WithPath<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| Failure::io(path, e))
    }
}
