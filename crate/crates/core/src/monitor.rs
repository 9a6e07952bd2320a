//! Predictive probability of eventual success and the interim decision rule.

use alloc::vec::Vec;

use crate::dirichlet::{outcome_count, outcome_rank, DirichletParams, Outcomes, PredictiveWeights};
use crate::error::{Error, Result};
use crate::inference::{b_asymptotic, b_montecarlo, PosteriorSpec};
use crate::rng::{derive_seed, domain};
use crate::table::CountTable;

/// How `B` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Asymptotic,
    MonteCarlo { sims: u64 },
}

/// A complete monitoring design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConfig {
    pub alpha_e: DirichletParams,
    pub alpha_s: DirichletParams,
    pub n_min: u32,
    pub n_max: u32,
    pub cohort: u32,
    /// Posterior threshold `B >= lambda` for declaring success at the end.
    pub lambda: f64,
    /// Stop for futility when `PP < theta_l`.
    pub theta_l: f64,
    /// Stop for success when `PP > theta_u`. At 1 this never fires.
    pub theta_u: f64,
    pub delta0: [f64; 2],
    pub method: Method,
    pub seed: u64,
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_max == 0 {
            return Err(Error::InvalidDesign("n_min and n_max must be positive"));
        }
        if self.n_min > self.n_max {
            return Err(Error::InvalidDesign("n_min must not exceed n_max"));
        }
        if self.cohort == 0 {
            return Err(Error::InvalidDesign("cohort must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidDesign("lambda must lie in (0, 1)"));
        }
        if !(self.theta_l >= 0.0 && self.theta_l < self.theta_u && self.theta_u <= 1.0) {
            return Err(Error::InvalidDesign("need 0 <= theta_L < theta_U <= 1"));
        }
        if !self.delta0.iter().all(|d| d.is_finite()) {
            return Err(Error::InvalidDesign("delta0 must be finite"));
        }
        if let Method::MonteCarlo { sims: 0 } = self.method {
            return Err(Error::InvalidDesign("Monte Carlo needs at least one draw"));
        }
        Ok(())
    }

    /// Sample sizes at which interim predictive probabilities are computed:
    /// `n_min, n_min + cohort, ...`, stopping before `n_max`.
    pub fn look_schedule(&self) -> impl Iterator<Item = u32> + '_ {
        (self.n_min..self.n_max).step_by(self.cohort as usize)
    }

    /// Posterior spec for a table of final data.
    pub fn final_spec(&self, final_counts: &CountTable) -> Result<PosteriorSpec> {
        Ok(PosteriorSpec::new(
            self.alpha_e,
            self.alpha_s,
            *final_counts,
            CountTable::zero(),
            self.n_max,
        )?
        .with_delta0(self.delta0))
    }
}

/// `B` computed for one final table with the configured method.
///
/// Monte Carlo draws use a stream keyed by the table's rank, so the value
/// for a table does not depend on evaluation order.
pub fn b_for_final(cfg: &DesignConfig, final_counts: &CountTable) -> Result<f64> {
    let spec = cfg.final_spec(final_counts)?;
    match cfg.method {
        Method::Asymptotic => b_asymptotic(&spec),
        Method::MonteCarlo { sims } => {
            let seed = derive_seed(cfg.seed, &[domain::B_TABLE, outcome_rank(final_counts) as u64]);
            Ok(b_montecarlo(&spec, sims, seed))
        }
    }
}

/// Anything that can report `B` for a table of final data.
pub trait PosteriorSource {
    fn b(&self, final_counts: &CountTable) -> Result<f64>;
}

/// Computes `B` on demand.
#[derive(Debug, Clone, Copy)]
pub struct DirectPosterior<'a> {
    pub cfg: &'a DesignConfig,
}

impl PosteriorSource for DirectPosterior<'_> {
    fn b(&self, final_counts: &CountTable) -> Result<f64> {
        b_for_final(self.cfg, final_counts)
    }
}

/// `B` for every table of total `n_max`, indexed by enumeration rank.
///
/// `B` depends on the data only through `x + y`, so one table serves every
/// interim look and the final analysis of every simulated trial.
#[derive(Debug, Clone)]
pub struct BTable {
    n_max: u32,
    values: Vec<f64>,
}

impl BTable {
    pub fn build(cfg: &DesignConfig) -> Result<Self> {
        let values = Outcomes::new(cfg.n_max)
            .map(|t| b_for_final(cfg, &t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_max: cfg.n_max,
            values,
        })
    }

    /// Wraps values computed elsewhere, in [`Outcomes`] order.
    pub fn from_values(n_max: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != outcome_count(n_max) {
            return Err(Error::InvalidDesign("B table has the wrong number of entries"));
        }
        Ok(Self { n_max, values })
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl PosteriorSource for BTable {
    fn b(&self, final_counts: &CountTable) -> Result<f64> {
        let got = final_counts.total();
        if got != self.n_max {
            return Err(Error::WrongSampleSize {
                expected: self.n_max,
                got,
            });
        }
        Ok(self.values[outcome_rank(final_counts)])
    }
}

/// One future outcome in the predictive sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeRow {
    pub y: CountTable,
    pub f_m: f64,
    pub b: f64,
    pub indicator: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpReport {
    pub pp: f64,
    pub rows: Vec<OutcomeRow>,
}

const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Shared PP loop. `on_row` sees every enumerated outcome.
pub(crate) fn pp_scan<S, F>(cfg: &DesignConfig, x: &CountTable, source: &S, mut on_row: F) -> Result<f64>
where
    S: PosteriorSource + ?Sized,
    F: FnMut(OutcomeRow),
{
    let n = x.total();
    if n > cfg.n_max {
        return Err(Error::TrialComplete { n, n_max: cfg.n_max });
    }
    let m = cfg.n_max - n;
    let weights = PredictiveWeights::new(&cfg.alpha_e.posterior(x), m);
    let mut pp = 0.0;
    let mut weight_sum = 0.0;
    for y in Outcomes::new(m) {
        let f_m = weights.pmf(&y);
        let b = source.b(&(*x + y))?;
        let indicator = b >= cfg.lambda;
        weight_sum += f_m;
        if indicator {
            pp += f_m;
        }
        on_row(OutcomeRow { y, f_m, b, indicator });
    }
    if (weight_sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::WeightNormalization { sum: weight_sum });
    }
    Ok(pp.clamp(0.0, 1.0))
}

/// `PP = sum_y f_m(y | alpha_E, x) I(B(x + y) >= lambda)` with one detail
/// row per future table `y`.
pub fn predictive_probability_with<S>(cfg: &DesignConfig, x: &CountTable, source: &S) -> Result<PpReport>
where
    S: PosteriorSource + ?Sized,
{
    let mut rows = Vec::with_capacity(outcome_count(cfg.n_max.saturating_sub(x.total())));
    let pp = pp_scan(cfg, x, source, |r| rows.push(r))?;
    Ok(PpReport { pp, rows })
}

pub fn predictive_probability(cfg: &DesignConfig, x: &CountTable) -> Result<PpReport> {
    predictive_probability_with(cfg, x, &DirectPosterior { cfg })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    StopFutility { pp: f64 },
    StopSuccess { pp: f64 },
    Continue { pp: f64 },
}

impl Decision {
    pub fn pp(&self) -> f64 {
        match *self {
            Decision::StopFutility { pp } | Decision::StopSuccess { pp } | Decision::Continue { pp } => pp,
        }
    }

    pub fn stops(&self) -> bool {
        !matches!(self, Decision::Continue { .. })
    }
}

pub fn interim_decision(cfg: &DesignConfig, pp: f64) -> Decision {
    if pp < cfg.theta_l {
        Decision::StopFutility { pp }
    } else if pp > cfg.theta_u {
        Decision::StopSuccess { pp }
    } else {
        Decision::Continue { pp }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinalClaim {
    ClaimEffective { b: f64 },
    ClaimNotEffective { b: f64 },
}

impl FinalClaim {
    pub fn is_effective(&self) -> bool {
        matches!(self, FinalClaim::ClaimEffective { .. })
    }

    pub fn b(&self) -> f64 {
        match *self {
            FinalClaim::ClaimEffective { b } | FinalClaim::ClaimNotEffective { b } => b,
        }
    }
}

/// End-of-trial claim: effective iff `B(x_full) >= lambda`.
pub fn final_analysis<S>(cfg: &DesignConfig, x_full: &CountTable, source: &S) -> Result<FinalClaim>
where
    S: PosteriorSource + ?Sized,
{
    let got = x_full.total();
    if got != cfg.n_max {
        return Err(Error::WrongSampleSize {
            expected: cfg.n_max,
            got,
        });
    }
    let b = source.b(x_full)?;
    Ok(if b >= cfg.lambda {
        FinalClaim::ClaimEffective { b }
    } else {
        FinalClaim::ClaimNotEffective { b }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn worked_example() -> DesignConfig {
        DesignConfig {
            alpha_e: DirichletParams::jeffreys(),
            alpha_s: DirichletParams::new(10.0, 9.0, 11.0, 30.0).unwrap(),
            n_min: 10,
            n_max: 30,
            cohort: 5,
            lambda: 0.80,
            theta_l: 0.001,
            theta_u: 1.0,
            delta0: [0.0, 0.0],
            method: Method::Asymptotic,
            seed: 1,
        }
    }

    #[test]
    fn worked_example_pp() {
        let cfg = worked_example();
        let a = predictive_probability(&cfg, &CountTable::new(5, 10, 0, 10)).unwrap();
        assert_eq!(a.rows.len(), 56);
        assert!((a.pp - 0.907).abs() < 2e-3, "{}", a.pp);
        let b = predictive_probability(&cfg, &CountTable::new(0, 10, 5, 10)).unwrap();
        assert!((b.pp - 0.732).abs() < 2e-3, "{}", b.pp);
    }

    #[test]
    fn complete_data_is_single_indicator() {
        let cfg = worked_example();
        let x = CountTable::new(5, 13, 2, 10);
        let r = predictive_probability(&cfg, &x).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.pp == 0.0 || r.pp == 1.0);
        let claim = final_analysis(&cfg, &x, &DirectPosterior { cfg: &cfg }).unwrap();
        assert_eq!(r.pp == 1.0, claim.is_effective());

        let over = CountTable::new(5, 13, 2, 11);
        assert_eq!(
            predictive_probability(&cfg, &over),
            Err(Error::TrialComplete { n: 31, n_max: 30 })
        );
    }

    #[test]
    fn decision_rule() {
        let cfg = worked_example();
        assert_eq!(interim_decision(&cfg, 0.0005), Decision::StopFutility { pp: 0.0005 });
        assert_eq!(interim_decision(&cfg, 1.0), Decision::Continue { pp: 1.0 });
        assert_eq!(interim_decision(&cfg, 0.5), Decision::Continue { pp: 0.5 });
        let strict = DesignConfig { theta_u: 0.9, ..cfg };
        assert_eq!(interim_decision(&strict, 0.95), Decision::StopSuccess { pp: 0.95 });
        assert!(!interim_decision(&cfg, cfg.theta_l).stops());
    }

    #[test]
    fn final_claims() {
        let cfg = worked_example();
        let src = DirectPosterior { cfg: &cfg };
        let x = CountTable::new(5, 10, 0, 10);
        let good = final_analysis(&cfg, &(x + CountTable::new(0, 3, 2, 0)), &src).unwrap();
        assert!(good.is_effective());
        let bad = final_analysis(&cfg, &(x + CountTable::new(5, 0, 0, 0)), &src).unwrap();
        assert!(!bad.is_effective());
        assert!((bad.b() - 0.5239).abs() < 1e-3);

        let lax = DesignConfig { lambda: 1e-9, ..cfg };
        let any = final_analysis(&lax, &(x + CountTable::new(0, 0, 5, 0)), &src).unwrap();
        assert!(any.is_effective());

        assert_eq!(
            final_analysis(&cfg, &x, &src),
            Err(Error::WrongSampleSize { expected: 30, got: 25 })
        );
    }

    #[test]
    fn b_table_agrees_with_direct() {
        let cfg = DesignConfig { n_max: 12, ..worked_example() };
        let table = BTable::build(&cfg).unwrap();
        let direct = DirectPosterior { cfg: &cfg };
        for t in Outcomes::new(12).step_by(17) {
            assert_eq!(table.b(&t).unwrap(), direct.b(&t).unwrap());
        }
        assert!(table.b(&CountTable::new(1, 1, 1, 1)).is_err());
    }

    #[test]
    fn validation() {
        let cfg = worked_example();
        assert!(cfg.validate().is_ok());
        assert!(DesignConfig { lambda: 1.0, ..cfg }.validate().is_err());
        assert!(DesignConfig { theta_l: 1.0, ..cfg }.validate().is_err());
        assert!(DesignConfig { n_min: 31, ..cfg }.validate().is_err());
        assert!(DesignConfig { cohort: 0, ..cfg }.validate().is_err());
        let looks: Vec<u32> = DesignConfig { n_max: 40, ..cfg }.look_schedule().collect();
        assert_eq!(looks, [10, 15, 20, 25, 30, 35]);
    }
}
