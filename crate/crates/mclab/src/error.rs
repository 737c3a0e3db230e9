use thiserror::Error;

use mclab_core::concentration::ConcentrationError;
use mclab_core::estimation::EstimationError;
use mclab_core::graphs::GraphError;
use mclab_core::linalg::LinalgError;
use mclab_core::quantum::QuantumError;
use mclab_core::rounding::RoundingError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown experiment {0:?} (try `mclab list`)")]
    UnknownExperiment(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Concentration(#[from] ConcentrationError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

impl HarnessError {
    /// Process exit code: 3 for configuration problems, 1 for failures
    /// inside a run. Verdict failures are not errors and exit with 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::UnknownExperiment(_) | Self::BadParams(_) | Self::Io(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::BadParams(msg.into())
}
