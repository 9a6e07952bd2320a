use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability table is invalid: {0}")]
    InvalidProbTable(&'static str),

    #[error("p12 + p21 = 0, the off-diagonal conditionals are undefined")]
    DegenerateOffDiagonal,

    #[error("distributions have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("input is not a probability distribution")]
    NotADistribution,

    #[error("all four cells must be strictly positive for the asymptotic covariance")]
    NonPositiveCell,

    #[error("Dirichlet hyperparameters must be positive and finite")]
    InvalidHyperparameter,

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("observed {n} participants but the trial ends at {n_max}")]
    TrialComplete { n: u32, n_max: u32 },

    #[error("final analysis needs {expected} participants, got {got}")]
    WrongSampleSize { expected: u32, got: u32 },

    #[error("observed plus future counts total {total}, expected n_max = {n_max}")]
    SampleSizeMismatch { total: u32, n_max: u32 },

    #[error("predictive weights sum to {sum}, expected 1")]
    WeightNormalization { sum: f64 },

    #[error("invalid design: {0}")]
    InvalidDesign(&'static str),

    #[error("no (lambda, theta_L) pair keeps the type I error within the cap")]
    NoFeasibleCell,
}
