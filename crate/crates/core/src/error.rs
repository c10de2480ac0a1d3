use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shooting bisection did not converge: slope bracket [{lo}, {hi}] after {iterations} iterations")]
    ShootingNotConverged { lo: f64, hi: f64, iterations: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "radial box too small at r = {r_box:e} (energy {energy:e}, ell {ell}); enlarge the box"
    )]
    BoxTooSmall { r_box: f64, energy: f64, ell: u32 },

    #[error("bound state not found: ell {ell}, radial index {radial_index} (only {available} states below threshold)")]
    StateNotFound {
        ell: u32,
        radial_index: usize,
        available: usize,
    },

    #[error("only {available} bound electrons available, {requested} requested")]
    InsufficientBoundStates { available: f64, requested: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cache schema error: {0}")]
    Schema(String),

    #[error("unsupported cache schema version {found} (supported: {supported})")]
    SchemaVersion { found: u32, supported: u32 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ShootingNotConverged { .. }
                | Error::Numerical(_)
                | Error::BoxTooSmall { .. }
                | Error::StateNotFound { .. }
                | Error::InsufficientBoundStates { .. }
        )
    }
}
