use std::path::PathBuf;

/// Errors produced anywhere in the discretization pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh validation error: {0}")]
    Validation(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate cell {cell}: {reason}")]
    DegenerateCell { cell: usize, reason: String },

    #[error("boundary data is incompatible: net outflow {flux:e} exceeds {tolerance:e}")]
    Compatibility { flux: f64, tolerance: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("manufactured case `{case}` failed its self-check: {reason}")]
    CaseDefinition { case: String, reason: String },

    #[error("{context}: {source}")]
    Level {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the refinement level it came from.
    pub fn at_level(self, level: usize) -> Self {
        Error::Level {
            context: format!("level {level}"),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
