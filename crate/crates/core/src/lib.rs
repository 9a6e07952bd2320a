//! Bayesian predictive-probability monitoring for single-arm trials with a
//! binary efficacy endpoint and a binary toxicity endpoint.
//!
//! Each participant falls into one cell of a 2x2 table (efficacy yes/no by
//! toxicity yes/no). The table is summarised by a pair of normalised
//! Jensen-Shannon distances from the worst case, `(phi_eff, phi_tox)`, and
//! the experimental arm is compared with an informative historical control
//! through the posterior of the index difference.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! thread-parallel drivers live in the `bivpp` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dirichlet;
pub mod error;
pub mod index;
pub mod inference;
pub mod monitor;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod table;

pub use dirichlet::{
    dcm_log_pmf, enumerate_outcomes, outcome_count, outcome_rank, posterior_params,
    sample_dirichlet, DirichletParams, DirichletSampler, Outcomes, PredictiveWeights,
};
pub use error::{Error, Result};
pub use index::{
    asymptotic_cov, conditional_probs, jsd, phi_eff, phi_tox, phi_vector, CovMatrix2, IndexVector,
};
pub use inference::{
    b_asymptotic, b_montecarlo, bvn_upper_orthant, difference_cov, difference_distribution,
    index_difference_estimate, plugin_estimate_e, plugin_estimate_s, BivariateNormal,
    PosteriorSpec,
};
pub use monitor::{
    b_for_final, final_analysis, interim_decision, predictive_probability, predictive_probability_with,
    BTable, Decision, DesignConfig, DirectPosterior, FinalClaim, Method, OutcomeRow,
    PosteriorSource, PpReport,
};
pub use sim::{
    calibrate, calibrate_with, operating_characteristics, select_cell, CalibrationPlan, simulate_trial, CalibrationCell, CalibrationGrid,
    OperatingCharacteristics, PpMemo, Scenario, Simulator, Tally, TrialOutcome,
};
pub use table::{CountTable, ProbTable};
