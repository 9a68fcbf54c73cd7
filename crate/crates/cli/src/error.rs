use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rotolab_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 for singularities, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use rotolab_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::SingularConfiguration { .. }
                | E::SingularDenominator { .. }
                | E::CoincidentBodies { .. }
                | E::FiberSingular { .. }
                | E::StepUnderflow { .. } => 3,
                E::BadParameter(_) | E::InvalidShape(_) | E::InvalidState(_) | E::Unsupported(_) | E::ZeroVector => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
