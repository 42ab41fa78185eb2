use std::path::{Path, PathBuf};

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{context}: {source}")]
    Core {
        context: String,
        source: ris_dfrc_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("table: {0}")]
    Table(String),

    #[error("{freq_mhz} MHz is not on the frequency grid; nearest grid frequencies (MHz): {}", fmt_list(nearest_mhz))]
    OffGrid { freq_mhz: f64, nearest_mhz: Vec<f64> },

    #[error("the grid has {points} space-frequency points; runs above {limit} need --full-scale")]
    ScaleGate { points: usize, limit: usize },

    #[error("RIS_DFRC_THREADS: {0}")]
    Threads(String),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Attaches a description of the failing step to core errors.
pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for ris_dfrc_core::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: what.into(),
            source,
        })
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ")
}
