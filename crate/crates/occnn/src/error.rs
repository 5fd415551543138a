use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: bad magic {found:?}, expected {expected:?}", path.display())]
    BadMagic {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },

    #[error("{}: unsupported version {found}", path.display())]
    Version { path: PathBuf, found: u16 },

    /// The file ends before a field that its header promises.
    #[error("{}: truncated at byte {offset} while reading {what}", path.display())]
    Truncated {
        path: PathBuf,
        offset: usize,
        what: &'static str,
    },

    /// Structurally readable but inconsistent binary content.
    #[error("{}: corrupt at byte {offset}: {reason}", path.display())]
    Corrupt {
        path: PathBuf,
        offset: usize,
        reason: String,
    },

    /// A text line that does not parse.
    #[error("{}:{line}: {reason}", path.display())]
    Parse { path: PathBuf, line: usize, reason: String },

    /// Well-formed content that disagrees with its context (row widths,
    /// manifest dimensions, unknown classes).
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] occnn_core::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARTIAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CORRUPT: i32 = 3;
    pub const DIVERGENCE: i32 = 4;
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use occnn_core::Error as Core;
        match self {
            Error::BadMagic { .. } | Error::Version { .. } | Error::Truncated { .. } | Error::Corrupt { .. } => {
                exit::CORRUPT
            }
            Error::Core(Core::Divergence { .. } | Core::Numerical(_) | Core::Convergence { .. }) => exit::DIVERGENCE,
            _ => exit::USAGE,
        }
    }
}
