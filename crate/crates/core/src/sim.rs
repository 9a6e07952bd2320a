//! Operating characteristics by simulation, and calibration of
//! `(lambda, theta_L)` against a type I error cap.
//!
//! Trial `i` of a run draws from the stream derived from `(seed, i)`, and
//! tallies are plain integer counts, so any partition of the trial range
//! across workers merges to the same result.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;
use core::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::dirichlet::outcome_rank;
use crate::error::{Error, Result};
use crate::monitor::{final_analysis, interim_decision, pp_scan, BTable, Decision, DesignConfig};
use crate::rng::{derived_stream, domain, Stream};
use crate::table::{CountTable, ProbTable};

/// A true data-generating table for the experimental arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub p_true: ProbTable,
    pub label: String,
}

impl Scenario {
    pub fn new(label: impl Into<String>, p_true: ProbTable) -> Self {
        Self {
            p_true,
            label: label.into(),
        }
    }

    /// Draws the cell of one participant.
    pub fn draw_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let p = self.p_true.as_array();
        let mut acc = 0.0;
        for (cell, &pc) in p.iter().enumerate().take(3) {
            acc += pc;
            if u < acc {
                return cell;
            }
        }
        3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub stopped_early: bool,
    pub claimed: bool,
    pub sample_size: u32,
}

/// Integer counts over a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub n_trials: u64,
    pub stopped_early: u64,
    pub stopped_success: u64,
    pub claimed: u64,
    pub reached_max: u64,
    pub total_sample_size: u64,
}

impl Tally {
    pub fn record(&mut self, t: &TrialOutcome, success_stop: bool, n_max: u32) {
        self.n_trials += 1;
        self.stopped_early += u64::from(t.stopped_early);
        self.stopped_success += u64::from(success_stop);
        self.claimed += u64::from(t.claimed);
        self.reached_max += u64::from(t.sample_size == n_max);
        self.total_sample_size += u64::from(t.sample_size);
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.n_trials += other.n_trials;
        self.stopped_early += other.stopped_early;
        self.stopped_success += other.stopped_success;
        self.claimed += other.claimed;
        self.reached_max += other.reached_max;
        self.total_sample_size += other.total_sample_size;
        self
    }

    pub fn summary(&self) -> OperatingCharacteristics {
        let n = self.n_trials.max(1) as f64;
        OperatingCharacteristics {
            pet: self.stopped_early as f64 / n,
            prn: self.claimed as f64 / n,
            ass: self.total_sample_size as f64 / n,
            n_trials: self.n_trials,
            stopped_success: self.stopped_success,
            reached_max: self.reached_max,
        }
    }
}

/// PET, PRN and ASS over a batch of simulated trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingCharacteristics {
    /// Fraction of trials stopped at an interim look.
    pub pet: f64,
    /// Fraction of trials that end with an effectiveness claim.
    pub prn: f64,
    /// Mean number of participants enrolled.
    pub ass: f64,
    pub n_trials: u64,
    pub stopped_success: u64,
    pub reached_max: u64,
}

fn pentatope(n: usize) -> usize {
    n * (n + 1) * (n + 2) * (n + 3) / 24
}

/// Lock-free memo of interim predictive probabilities, one slot per
/// interim table. Racing writers store the same value.
#[derive(Debug)]
pub struct PpMemo {
    n_max: u32,
    slots: Vec<AtomicU64>,
}

const EMPTY: u64 = u64::MAX;

impl PpMemo {
    /// Slots for every table with total below `n_max`.
    pub fn new(n_max: u32) -> Self {
        let len = pentatope(n_max as usize);
        let mut slots = Vec::with_capacity(len);
        slots.resize_with(len, || AtomicU64::new(EMPTY));
        Self { n_max, slots }
    }

    fn slot(&self, x: &CountTable) -> Option<&AtomicU64> {
        let n = x.total();
        (n < self.n_max).then(|| &self.slots[pentatope(n as usize) + outcome_rank(x)])
    }

    pub fn get(&self, x: &CountTable) -> Option<f64> {
        let bits = self.slot(x)?.load(Ordering::Relaxed);
        (bits != EMPTY).then(|| f64::from_bits(bits))
    }

    pub fn insert(&self, x: &CountTable, pp: f64) {
        if let Some(slot) = self.slot(x) {
            slot.store(pp.to_bits(), Ordering::Relaxed);
        }
    }

    pub fn filled(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.load(Ordering::Relaxed) != EMPTY)
            .count()
    }
}

/// A design with its precomputed `B` table and predictive-probability memo.
/// Shareable across threads.
#[derive(Debug)]
pub struct Simulator {
    cfg: DesignConfig,
    table: BTable,
    memo: PpMemo,
}

impl Simulator {
    pub fn new(cfg: DesignConfig) -> Result<Self> {
        cfg.validate()?;
        let table = BTable::build(&cfg)?;
        Self::with_table(cfg, table)
    }

    /// Reuses a `B` table. `B` ignores `lambda`, `theta_L`, `theta_U`,
    /// `n_min` and `cohort`, so designs differing only in those can share one.
    pub fn with_table(cfg: DesignConfig, table: BTable) -> Result<Self> {
        cfg.validate()?;
        if table.n_max() != cfg.n_max {
            return Err(Error::InvalidDesign("B table built for a different n_max"));
        }
        Ok(Self {
            memo: PpMemo::new(cfg.n_max),
            cfg,
            table,
        })
    }

    pub fn cfg(&self) -> &DesignConfig {
        &self.cfg
    }

    pub fn b_table(&self) -> &BTable {
        &self.table
    }

    pub fn memo(&self) -> &PpMemo {
        &self.memo
    }

    /// Interim predictive probability, memoised by the interim table.
    pub fn pp(&self, x: &CountTable) -> Result<f64> {
        if let Some(pp) = self.memo.get(x) {
            return Ok(pp);
        }
        let pp = pp_scan(&self.cfg, x, &self.table, |_| {})?;
        self.memo.insert(x, pp);
        Ok(pp)
    }

    fn run_one(&self, sc: &Scenario, rng: &mut Stream) -> Result<(TrialOutcome, bool)> {
        let cfg = &self.cfg;
        let mut x = CountTable::zero();
        for look in cfg.look_schedule() {
            while x.total() < look {
                x.record(sc.draw_cell(rng));
            }
            match interim_decision(cfg, self.pp(&x)?) {
                Decision::Continue { .. } => {}
                d => {
                    let success = matches!(d, Decision::StopSuccess { .. });
                    let outcome = TrialOutcome {
                        stopped_early: true,
                        claimed: success,
                        sample_size: look,
                    };
                    return Ok((outcome, success));
                }
            }
        }
        while x.total() < cfg.n_max {
            x.record(sc.draw_cell(rng));
        }
        let claim = final_analysis(cfg, &x, &self.table)?;
        let outcome = TrialOutcome {
            stopped_early: false,
            claimed: claim.is_effective(),
            sample_size: cfg.n_max,
        };
        Ok((outcome, false))
    }

    pub fn simulate_trial(&self, sc: &Scenario, rng: &mut Stream) -> Result<TrialOutcome> {
        self.run_one(sc, rng).map(|(t, _)| t)
    }

    /// Runs trial indices `range` of the run keyed by `seed`.
    pub fn run_range(&self, sc: &Scenario, seed: u64, range: Range<u64>) -> Result<Tally> {
        let mut tally = Tally::default();
        for i in range {
            let mut rng = derived_stream(seed, &[domain::TRIAL, i]);
            let (t, success) = self.run_one(sc, &mut rng)?;
            tally.record(&t, success, self.cfg.n_max);
        }
        Ok(tally)
    }

    pub fn operating_characteristics(&self, sc: &Scenario, n_trials: u64, seed: u64) -> Result<OperatingCharacteristics> {
        if n_trials == 0 {
            return Err(Error::InvalidDesign("n_trials must be positive"));
        }
        Ok(self.run_range(sc, seed, 0..n_trials)?.summary())
    }
}

pub fn simulate_trial(sim: &Simulator, sc: &Scenario, rng: &mut Stream) -> Result<TrialOutcome> {
    sim.simulate_trial(sc, rng)
}

pub fn operating_characteristics(
    cfg: &DesignConfig,
    sc: &Scenario,
    n_trials: u64,
    seed: u64,
) -> Result<OperatingCharacteristics> {
    Simulator::new(*cfg)?.operating_characteristics(sc, n_trials, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCell {
    pub lambda: f64,
    pub theta_l: f64,
    pub null: OperatingCharacteristics,
    pub alternative: OperatingCharacteristics,
}

impl CalibrationCell {
    pub fn type1(&self) -> f64 {
        self.null.prn
    }

    pub fn power(&self) -> f64 {
        self.alternative.prn
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid {
    pub lambdas: Vec<f64>,
    pub theta_ls: Vec<f64>,
    pub h0: Scenario,
    pub h1: Scenario,
    pub type1_cap: f64,
    pub power_floor: f64,
    pub power_tolerance: f64,
    /// Row-major over `theta_ls`, then `lambdas`.
    pub cells: Vec<CalibrationCell>,
    pub selected: usize,
}

impl CalibrationGrid {
    pub fn cell(&self, lambda_idx: usize, theta_idx: usize) -> &CalibrationCell {
        &self.cells[theta_idx * self.lambdas.len() + lambda_idx]
    }

    pub fn selected_cell(&self) -> &CalibrationCell {
        &self.cells[self.selected]
    }

    pub fn selected_pair(&self) -> (f64, f64) {
        let c = self.selected_cell();
        (c.lambda, c.theta_l)
    }

    pub fn power_floor_met(&self) -> bool {
        self.selected_cell().power() >= self.power_floor
    }
}

/// Grid search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPlan {
    pub lambdas: Vec<f64>,
    pub theta_ls: Vec<f64>,
    pub h0: Scenario,
    pub h1: Scenario,
    pub n_trials: u64,
    pub type1_cap: f64,
    pub power_floor: f64,
    /// Cells whose power is within this of the best feasible power count
    /// as tied; ties go to the larger `theta_L`, then the smaller type I
    /// error. Zero means plain argmax.
    pub power_tolerance: f64,
    pub seed: u64,
}

/// Picks the feasible cell with the highest power (see
/// [`CalibrationPlan::power_tolerance`] for ties).
pub fn select_cell(cells: &[CalibrationCell], type1_cap: f64, power_tolerance: f64) -> Result<usize> {
    let feasible: Vec<usize> = (0..cells.len())
        .filter(|&i| cells[i].type1() <= type1_cap)
        .collect();
    let best = feasible
        .iter()
        .map(|&i| cells[i].power())
        .fold(f64::NEG_INFINITY, f64::max);
    if feasible.is_empty() {
        return Err(Error::NoFeasibleCell);
    }
    feasible
        .into_iter()
        .filter(|&i| cells[i].power() >= best - power_tolerance)
        .max_by(|&a, &b| {
            cells[a]
                .theta_l
                .total_cmp(&cells[b].theta_l)
                .then(cells[b].type1().total_cmp(&cells[a].type1()))
                .then(cells[a].power().total_cmp(&cells[b].power()))
                .then(b.cmp(&a))
        })
        .ok_or(Error::NoFeasibleCell)
}

/// Calibration with a prebuilt `B` table for `base_cfg` and a
/// caller-supplied batch runner (for example a thread-parallel one). The
/// runner must return the tally of trials `0..n` for the seed it is given.
pub fn calibrate_with<F>(
    base_cfg: &DesignConfig,
    table: &BTable,
    plan: &CalibrationPlan,
    mut run: F,
) -> Result<CalibrationGrid>
where
    F: FnMut(&Simulator, &Scenario, u64, u64) -> Result<Tally>,
{
    if plan.lambdas.is_empty() || plan.theta_ls.is_empty() {
        return Err(Error::InvalidDesign("calibration grids must be nonempty"));
    }
    if plan.n_trials == 0 {
        return Err(Error::InvalidDesign("n_trials must be positive"));
    }
    base_cfg.validate()?;
    let mut cells = Vec::with_capacity(plan.lambdas.len() * plan.theta_ls.len());
    for &theta_l in &plan.theta_ls {
        for &lambda in &plan.lambdas {
            let cfg = DesignConfig {
                lambda,
                theta_l,
                ..*base_cfg
            };
            let sim = Simulator::with_table(cfg, table.clone())?;
            let null = run(&sim, &plan.h0, plan.seed, plan.n_trials)?.summary();
            let alternative = run(&sim, &plan.h1, plan.seed, plan.n_trials)?.summary();
            cells.push(CalibrationCell {
                lambda,
                theta_l,
                null,
                alternative,
            });
        }
    }
    let selected = select_cell(&cells, plan.type1_cap, plan.power_tolerance)?;
    Ok(CalibrationGrid {
        lambdas: plan.lambdas.clone(),
        theta_ls: plan.theta_ls.clone(),
        h0: plan.h0.clone(),
        h1: plan.h1.clone(),
        type1_cap: plan.type1_cap,
        power_floor: plan.power_floor,
        power_tolerance: plan.power_tolerance,
        cells,
        selected,
    })
}

pub fn calibrate(base_cfg: &DesignConfig, plan: &CalibrationPlan) -> Result<CalibrationGrid> {
    base_cfg.validate()?;
    let table = BTable::build(base_cfg)?;
    calibrate_with(base_cfg, &table, plan, |sim, sc, seed, n| sim.run_range(sc, seed, 0..n))
}
