//! Rayon drivers over the sequential core.
//!
//! Work is split by index (outcome rank, trial index, Monte Carlo chunk) and
//! merged with integer sums or in rank order, so every result here equals
//! its sequential counterpart bit for bit for any worker count.

use bivpp_core::inference::{mc_chunk_count, McPosterior};
use bivpp_core::{
    b_for_final, calibrate_with, outcome_rank, predictive_probability_with, BTable,
    CalibrationGrid, CalibrationPlan, CountTable, DesignConfig, OperatingCharacteristics,
    Outcomes, PosteriorSource, PosteriorSpec, PpReport, Scenario, Simulator, Tally,
};
use rayon::prelude::*;

use crate::error::Result;

/// Trials per parallel work item.
const TRIAL_BATCH: u64 = 256;

/// Runs `f` on a pool of `workers` threads, or on rayon's global pool when
/// `workers` is `None`.
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?;
            Ok(pool.install(f))
        }
    }
}

pub fn build_b_table(cfg: &DesignConfig) -> Result<BTable> {
    cfg.validate()?;
    let tables: Vec<_> = Outcomes::new(cfg.n_max).collect();
    let values = tables
        .par_iter()
        .map(|t| b_for_final(cfg, t))
        .collect::<bivpp_core::Result<Vec<f64>>>()?;
    Ok(BTable::from_values(cfg.n_max, values)?)
}

pub fn simulator(cfg: &DesignConfig) -> Result<Simulator> {
    let table = build_b_table(cfg)?;
    Ok(Simulator::with_table(*cfg, table)?)
}

/// `B` for every completion `x + y`, indexed by the rank of `y`.
struct Completions {
    x: CountTable,
    values: Vec<f64>,
}

impl PosteriorSource for Completions {
    fn b(&self, final_counts: &CountTable) -> bivpp_core::Result<f64> {
        let [a, b, c, d] = final_counts.as_array();
        let [xa, xb, xc, xd] = self.x.as_array();
        let y = CountTable::new(a - xa, b - xb, c - xc, d - xd);
        Ok(self.values[outcome_rank(&y)])
    }
}

/// Predictive probability with the `B` values of all completions computed
/// in parallel first.
pub fn predictive_probability(cfg: &DesignConfig, x: &CountTable) -> Result<PpReport> {
    cfg.validate()?;
    let n = x.total();
    if n > cfg.n_max {
        return Err(bivpp_core::Error::TrialComplete { n, n_max: cfg.n_max }.into());
    }
    let ys: Vec<_> = Outcomes::new(cfg.n_max - n).collect();
    let values = ys
        .par_iter()
        .map(|y| b_for_final(cfg, &(*x + *y)))
        .collect::<bivpp_core::Result<Vec<f64>>>()?;
    let source = Completions { x: *x, values };
    Ok(predictive_probability_with(cfg, x, &source)?)
}

/// Tally of trials `0..n_trials`.
pub fn run_trials(sim: &Simulator, sc: &Scenario, seed: u64, n_trials: u64) -> bivpp_core::Result<Tally> {
    let batches = n_trials.div_ceil(TRIAL_BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * TRIAL_BATCH;
            sim.run_range(sc, seed, start..(start + TRIAL_BATCH).min(n_trials))
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
}

pub fn operating_characteristics(
    sim: &Simulator,
    sc: &Scenario,
    n_trials: u64,
    seed: u64,
) -> Result<OperatingCharacteristics> {
    if n_trials == 0 {
        return Err(bivpp_core::Error::InvalidDesign("n_trials must be positive").into());
    }
    Ok(run_trials(sim, sc, seed, n_trials)?.summary())
}

pub fn calibrate(base_cfg: &DesignConfig, plan: &CalibrationPlan) -> Result<CalibrationGrid> {
    let table = build_b_table(base_cfg)?;
    Ok(calibrate_with(base_cfg, &table, plan, run_trials)?)
}

/// Parallel Monte Carlo `B`; equal to [`bivpp_core::b_montecarlo`] with the
/// same arguments.
pub fn b_montecarlo(spec: &PosteriorSpec, n_sims: u64, seed: u64) -> f64 {
    assert!(n_sims > 0, "n_sims must be positive");
    let mc = McPosterior::new(spec);
    let hits: u64 = (0..mc_chunk_count(n_sims))
        .into_par_iter()
        .map(|chunk| mc.chunk_successes(seed, chunk, n_sims))
        .sum();
    hits as f64 / n_sims as f64
}
