use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("{field} = {value} is out of range ({constraint})")]
    Domain {
        field: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("cell {m} lies outside the lattice [-{half_width}, {half_width}]")]
    Index { m: i64, half_width: usize },

    #[error("dimension mismatch: expected {expected} cells, got {got}")]
    Dimension { expected: usize, got: usize },

    /// |mu| == |nu|: the Bloch gap closes and the winding is undefined.
    #[error("gap closes at |mu| = |nu| = {0}; winding number is undefined")]
    Degenerate(f64),

    #[error("integration diverged at step {step}: max |amplitude| = {max_amplitude}")]
    Diverged { step: usize, max_amplitude: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {}: {source}", path.display())]
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
}
