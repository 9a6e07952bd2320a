use thiserror::Error;

/// Bad config, bad arguments or an invalid design.
pub const EXIT_CONFIG: i32 = 2;
/// Calibration found no cell under the type I error cap.
pub const EXIT_INFEASIBLE: i32 = 3;
/// A predictive probability was requested past the end of the trial.
pub const EXIT_TRIAL_COMPLETE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bivpp_core::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("failed to parse config: {0}")]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("failed to start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use bivpp_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Toml(_) => EXIT_CONFIG,
            CliError::Core(E::NoFeasibleCell) => EXIT_INFEASIBLE,
            CliError::Core(E::TrialComplete { .. }) => EXIT_TRIAL_COMPLETE,
            CliError::Core(
                E::InvalidDesign(_)
                | E::InvalidProbTable(_)
                | E::InvalidHyperparameter
                | E::DegenerateOffDiagonal
                | E::NonPositiveCell
                | E::SampleSizeMismatch { .. }
                | E::WrongSampleSize { .. },
            ) => EXIT_CONFIG,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
