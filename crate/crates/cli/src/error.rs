use std::fmt;
use std::path::Path;

use qvn_core::Error;

/// A failure reported as one `CODE: message` line.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub exit: i32,
    pub message: String,
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: "E_IO",
            exit: 2,
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: "E_USAGE",
            exit: 2,
            message: message.into(),
        }
    }

    /// Tags a core error with the file it came from.
    pub fn in_file(path: &Path, err: Error) -> Self {
        let mut e = Self::from(err);
        e.message = format!("{}: {}", path.display(), e.message);
        e
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let exit = match err {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Argument(_)
            | Error::Dimension(_) => 3,
            Error::Instruction { ref source, .. } if matches!(**source, Error::Validation(_)) => 3,
            _ => 1,
        };
        Self {
            code: err.code(),
            exit,
            message: err.to_string().replace('\n', " "),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}
