//! Dirichlet-multinomial algebra on the four cells.

use alloc::vec::Vec;

use libm::{lgamma, log};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::table::{CountTable, ProbTable};

/// Positive pseudo-counts of a Dirichlet over the four cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletParams {
    cells: [f64; 4],
}

impl DirichletParams {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Result<Self> {
        Self::from_array([a11, a12, a21, a22])
    }

    pub fn from_array(cells: [f64; 4]) -> Result<Self> {
        if cells.iter().all(|a| a.is_finite() && *a > 0.0) {
            Ok(Self { cells })
        } else {
            Err(Error::InvalidHyperparameter)
        }
    }

    /// Dir(0.5, 0.5, 0.5, 0.5).
    pub fn jeffreys() -> Self {
        Self { cells: [0.5; 4] }
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.cells
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.cells[cell]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// `alpha / sum(alpha)`.
    pub fn mean(&self) -> ProbTable {
        let total = self.total();
        ProbTable::from_array(self.cells.map(|a| a / total))
            .or_else(|_| ProbTable::normalized(self.cells))
            .expect("positive hyperparameters always give a valid mean table")
    }

    /// Conjugate update `alpha + data`.
    pub fn posterior(&self, data: &CountTable) -> Self {
        let mut cells = self.cells;
        for (a, &n) in cells.iter_mut().zip(data.as_array().iter()) {
            *a += f64::from(n);
        }
        Self { cells }
    }
}

pub fn posterior_params(prior: &DirichletParams, data: &CountTable) -> DirichletParams {
    prior.posterior(data)
}

/// Draws from a fixed Dirichlet by normalising four independent gammas.
///
/// `rand_distr::Gamma` uses Marsaglia-Tsang with the `U^(1/a)` boost for
/// shapes below one, which matters for the 0.5 cells of a Jeffreys prior.
#[derive(Debug, Clone)]
pub struct DirichletSampler {
    gammas: [Gamma<f64>; 4],
}

impl DirichletSampler {
    pub fn new(params: &DirichletParams) -> Self {
        let gammas = params
            .cells
            .map(|a| Gamma::new(a, 1.0).expect("validated positive shape"));
        Self { gammas }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ProbTable {
        loop {
            let draws = [
                self.gammas[0].sample(rng),
                self.gammas[1].sample(rng),
                self.gammas[2].sample(rng),
                self.gammas[3].sample(rng),
            ];
            // A gamma draw can underflow to zero at tiny shapes; redraw so
            // the table stays strictly positive.
            if draws.iter().all(|&g| g > 0.0 && g.is_finite()) {
                if let Ok(p) = ProbTable::normalized(draws) {
                    return p;
                }
            }
        }
    }
}

pub fn sample_dirichlet<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> ProbTable {
    DirichletSampler::new(params).sample(rng)
}

/// `ln f_m(y | alpha, x)`: the Dirichlet-compound-multinomial log mass of
/// future counts `y` given the posterior `Dir(alpha + x)`.
pub fn dcm_log_pmf(y: &CountTable, alpha: &DirichletParams, x: &CountTable) -> f64 {
    let post = alpha.posterior(x);
    let m = f64::from(y.total());
    let a_total = post.total();
    let mut value = lgamma(m + 1.0) + lgamma(a_total) - lgamma(a_total + m);
    for cell in 0..4 {
        let yc = f64::from(y.get(cell));
        let ac = post.get(cell);
        value += lgamma(ac + yc) - lgamma(ac) - lgamma(yc + 1.0);
    }
    value
}

/// Precomputed DCM log-masses for every future table of a fixed size `m`.
///
/// Ratios of gamma functions at integer offsets are rising factorials, so
/// each cell needs only a running sum of logs up to `m`.
#[derive(Debug, Clone)]
pub struct PredictiveWeights {
    m: u32,
    log_fact: Vec<f64>,
    log_rising: [Vec<f64>; 4],
    log_norm: f64,
}

fn log_rising_table(a: f64, m: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(m as usize + 1);
    let mut acc = 0.0;
    out.push(acc);
    for j in 0..m {
        acc += log(a + f64::from(j));
        out.push(acc);
    }
    out
}

impl PredictiveWeights {
    /// `posterior` is `alpha + x`.
    pub fn new(posterior: &DirichletParams, m: u32) -> Self {
        let log_fact = log_rising_table(1.0, m);
        let log_rising = [0, 1, 2, 3].map(|c| log_rising_table(posterior.get(c), m));
        let log_norm = log_rising_table(posterior.total(), m)[m as usize];
        Self {
            m,
            log_fact,
            log_rising,
            log_norm,
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Panics if `y.total() != m`.
    pub fn log_pmf(&self, y: &CountTable) -> f64 {
        assert_eq!(y.total(), self.m, "future table must total m");
        let mut value = self.log_fact[self.m as usize] - self.log_norm;
        for cell in 0..4 {
            let k = y.get(cell) as usize;
            value += self.log_rising[cell][k] - self.log_fact[k];
        }
        value
    }

    pub fn pmf(&self, y: &CountTable) -> f64 {
        libm::exp(self.log_pmf(y))
    }
}

/// Number of four-cell tables with total `m`, `C(m + 3, 3)`.
pub fn outcome_count(m: u32) -> usize {
    let m = m as usize;
    (m + 1) * (m + 2) * (m + 3) / 6
}

/// Position of `y` in [`enumerate_outcomes`]`(y.total())`.
pub fn outcome_rank(y: &CountTable) -> usize {
    let m = y.total() as usize;
    let [a, b, c, _] = y.as_array().map(|v| v as usize);
    // Tables with a smaller first cell: sum over i < a of C(m - i + 2, 2).
    let first: usize = (0..a).map(|i| (m - i + 1) * (m - i + 2) / 2).sum();
    // Same first cell, smaller second cell.
    let rest = m - a;
    let second: usize = (0..b).map(|j| rest - j + 1).sum();
    first + second + c
}

/// Iterator over all tables with a given total, in ascending lexicographic
/// order on `(y11, y12, y21)`.
#[derive(Debug, Clone)]
pub struct Outcomes {
    m: u32,
    next: Option<[u32; 3]>,
}

impl Outcomes {
    pub fn new(m: u32) -> Self {
        Self {
            m,
            next: Some([0, 0, 0]),
        }
    }
}

impl Iterator for Outcomes {
    type Item = CountTable;

    fn next(&mut self) -> Option<CountTable> {
        let [a, b, c] = self.next?;
        let m = self.m;
        let item = CountTable::new(a, b, c, m - a - b - c);
        self.next = if a + b + c < m {
            Some([a, b, c + 1])
        } else if a + b < m {
            Some([a, b + 1, 0])
        } else if a < m {
            Some([a + 1, 0, 0])
        } else {
            None
        };
        Some(item)
    }
}

pub fn enumerate_outcomes(m: u32) -> Vec<CountTable> {
    Outcomes::new(m).collect()
}
