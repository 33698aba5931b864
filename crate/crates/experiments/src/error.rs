use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("simulation error: {0}")]
    Core(#[from] stochflow::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("encoding error: {0}")]
    Encode(#[from] serde_json::Error),
    #[error("scenario invalidated: {0}")]
    Tripped(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

impl ExperimentError {
    /// Process exit code: 2 configuration, 3 numerical failure, 4 guard or
    /// floor trip that invalidates the scenario, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) | Self::Config { .. } => 2,
            Self::Core(stochflow::Error::NonFinite(_))
            | Self::Core(stochflow::Error::StepUnderflow { .. }) => 3,
            Self::Core(stochflow::Error::DensityFloor { .. }) | Self::Tripped(_) => 4,
            Self::Core(stochflow::Error::InvalidParameter { .. })
            | Self::Core(stochflow::Error::BeyondNyquist { .. })
            | Self::Core(stochflow::Error::InvalidGrid(..)) => 2,
            _ => 1,
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}
