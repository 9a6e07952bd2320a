//! 2x2 efficacy-by-toxicity tables.
//!
//! Cells are stored row-major: `[11, 12, 21, 22]` where the first index is
//! efficacy (1 = response, 2 = no response) and the second is toxicity
//! (1 = toxicity, 2 = no toxicity). So `p12` is "response without toxicity"
//! and `p21` is "toxicity without response".

use core::ops::Add;

use crate::error::{Error, Result};

/// Tolerance on `sum(p) = 1` when a table is constructed.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Joint cell probabilities of a 2x2 efficacy/toxicity table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbTable {
    cells: [f64; 4],
}

impl ProbTable {
    pub fn new(p11: f64, p12: f64, p21: f64, p22: f64) -> Result<Self> {
        Self::from_array([p11, p12, p21, p22])
    }

    /// Validates that every cell is a finite probability and that the cells
    /// sum to one within [`SUM_TOLERANCE`]. Never renormalises.
    pub fn from_array(cells: [f64; 4]) -> Result<Self> {
        if cells.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidProbTable("non-finite cell"));
        }
        if cells.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
            return Err(Error::InvalidProbTable("cell outside [0, 1]"));
        }
        let sum: f64 = cells.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidProbTable("cells do not sum to 1"));
        }
        Ok(Self { cells })
    }

    /// Divides nonnegative weights by their sum.
    pub fn normalized(weights: [f64; 4]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidProbTable("weights must be finite and nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidProbTable("weights sum to zero"));
        }
        let mut cells = weights.map(|w| w / sum);
        // Push the rounding residue into the largest cell so the sum check holds.
        let resid = 1.0 - cells.iter().sum::<f64>();
        let imax = (0..4)
            .max_by(|&a, &b| cells[a].total_cmp(&cells[b]))
            .unwrap_or(0);
        cells[imax] += resid;
        Self::from_array(cells)
    }

    pub fn uniform() -> Self {
        Self { cells: [0.25; 4] }
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.cells
    }

    pub fn p11(&self) -> f64 {
        self.cells[0]
    }

    pub fn p12(&self) -> f64 {
        self.cells[1]
    }

    pub fn p21(&self) -> f64 {
        self.cells[2]
    }

    pub fn p22(&self) -> f64 {
        self.cells[3]
    }

    /// Marginal probability of toxicity, `p.1 = p11 + p21`.
    pub fn tox_yes(&self) -> f64 {
        self.cells[0] + self.cells[2]
    }

    /// Marginal probability of no toxicity, `p.2 = p12 + p22`.
    pub fn tox_no(&self) -> f64 {
        self.cells[1] + self.cells[3]
    }

    /// Off-diagonal mass `p12 + p21`.
    pub fn off_diagonal(&self) -> f64 {
        self.cells[1] + self.cells[2]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.cells.iter().all(|&c| c > 0.0)
    }
}

/// Participant counts over the four cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CountTable {
    cells: [u32; 4],
}

impl CountTable {
    pub const fn new(x11: u32, x12: u32, x21: u32, x22: u32) -> Self {
        Self {
            cells: [x11, x12, x21, x22],
        }
    }

    pub const fn from_array(cells: [u32; 4]) -> Self {
        Self { cells }
    }

    pub const fn zero() -> Self {
        Self { cells: [0; 4] }
    }

    pub fn as_array(&self) -> [u32; 4] {
        self.cells
    }

    pub fn get(&self, cell: usize) -> u32 {
        self.cells[cell]
    }

    pub fn total(&self) -> u32 {
        self.cells.iter().sum()
    }

    /// Adds one participant to `cell`.
    pub fn record(&mut self, cell: usize) {
        self.cells[cell] += 1;
    }
}

impl Add for CountTable {
    type Output = CountTable;

    fn add(self, rhs: Self) -> Self {
        let mut cells = self.cells;
        for (c, r) in cells.iter_mut().zip(rhs.cells) {
            *c += r;
        }
        Self { cells }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sums() {
        assert!(ProbTable::new(0.25, 0.25, 0.25, 0.25).is_ok());
        assert!(matches!(
            ProbTable::new(0.25, 0.25, 0.25, 0.26),
            Err(Error::InvalidProbTable(_))
        ));
        assert!(ProbTable::new(-0.1, 0.5, 0.3, 0.3).is_err());
        assert!(ProbTable::new(f64::NAN, 0.5, 0.3, 0.2).is_err());
    }

    #[test]
    fn normalization_is_explicit() {
        let p = ProbTable::normalized([30.0, 60.0, 30.0, 80.0]).unwrap();
        let expected = [0.15, 0.30, 0.15, 0.40];
        for (a, b) in p.as_array().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(ProbTable::normalized([0.0; 4]).is_err());
    }

    #[test]
    fn margins() {
        let p = ProbTable::new(0.15, 0.30, 0.15, 0.40).unwrap();
        assert!((p.tox_yes() - 0.30).abs() < 1e-15);
        assert!((p.tox_no() - 0.70).abs() < 1e-15);
        assert!((p.off_diagonal() - 0.45).abs() < 1e-15);
    }

    #[test]
    fn count_addition() {
        let x = CountTable::new(5, 10, 0, 10);
        let y = CountTable::new(0, 3, 2, 0);
        assert_eq!((x + y).as_array(), [5, 13, 2, 10]);
        assert_eq!((x + y).total(), 30);
    }
}
