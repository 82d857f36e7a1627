use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{value} is outside the domain [0, 1]")]
    Domain { value: f64 },

    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("ill-conditioned system: {0}")]
    Conditioning(String),

    #[error("training diverged at iteration {iteration} (learning rate {learning_rate})")]
    Divergence { iteration: usize, learning_rate: f64 },

    #[error("evidence requires {dim} retained parameters, above the cap of {cap}")]
    EvidenceTooLarge { dim: usize, cap: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("calibration error: {0}")]
    Calibration(String),
}

impl Error {
    /// Stable machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::Domain { .. } => "domain",
            Error::Data(_) => "data",
            Error::Shape { .. } => "shape",
            Error::Conditioning(_) => "conditioning",
            Error::Divergence { .. } => "divergence",
            Error::EvidenceTooLarge { .. } => "evidence_too_large",
            Error::Numerical(_) => "numerical",
            Error::Calibration(_) => "calibration",
        }
    }
}
