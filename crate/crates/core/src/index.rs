//! The bivariate index vector and its delta-method covariance.
//!
//! `phi_eff` is the Jensen-Shannon divergence between the off-diagonal
//! conditionals `(p*12, p*21)` and the worst case `(0, 1)`, divided by
//! `ln 2`. `phi_tox` does the same for the toxicity margin `(p.1, p.2)`
//! against `(1, 0)`. Both lie in `[0, 1]` and larger is better.

use core::f64::consts::LN_2;

use libm::log;

use crate::error::{Error, Result};
use crate::table::{ProbTable, SUM_TOLERANCE};

/// `(phi_eff, phi_tox)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexVector {
    pub phi_eff: f64,
    pub phi_tox: f64,
}

impl IndexVector {
    pub fn as_array(&self) -> [f64; 2] {
        [self.phi_eff, self.phi_tox]
    }

    /// Componentwise `self - other`.
    pub fn difference(&self, other: &IndexVector) -> [f64; 2] {
        [self.phi_eff - other.phi_eff, self.phi_tox - other.phi_tox]
    }
}

/// Symmetric 2x2 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovMatrix2 {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl CovMatrix2 {
    pub fn new(s11: f64, s12: f64, s22: f64) -> Self {
        Self { s11, s12, s22 }
    }

    pub fn det(&self) -> f64 {
        self.s11 * self.s22 - self.s12 * self.s12
    }

    /// PSD within `tol` on the diagonal and the determinant.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.s11 >= -tol && self.s22 >= -tol && self.det() >= -tol
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.s11 * k, self.s12 * k, self.s22 * k)
    }

    pub fn plus(&self, other: &CovMatrix2) -> Self {
        Self::new(
            self.s11 + other.s11,
            self.s12 + other.s12,
            self.s22 + other.s22,
        )
    }

    pub fn as_rows(&self) -> [[f64; 2]; 2] {
        [[self.s11, self.s12], [self.s12, self.s22]]
    }
}

/// `x * ln(y)` with the convention `0 * ln(anything) = 0`.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * log(y)
    }
}

/// Off-diagonal conditionals `(p*12, p*21)`.
pub fn conditional_probs(p: &ProbTable) -> Result<(f64, f64)> {
    let off = p.off_diagonal();
    if off <= 0.0 {
        return Err(Error::DegenerateOffDiagonal);
    }
    let p12_star = p.p12() / off;
    Ok((p12_star, 1.0 - p12_star))
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&v| !v.is_finite() || !(0.0..=1.0).contains(&v)) {
        return Err(Error::NotADistribution);
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotADistribution);
    }
    Ok(())
}

/// Jensen-Shannon divergence in nats. Zero cells contribute nothing.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let total: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = a + b;
            xlogy(a, 2.0 * a / m) + xlogy(b, 2.0 * b / m)
        })
        .sum();
    Ok((0.5 * total).clamp(0.0, LN_2))
}

/// Closed form shared by both indexes: `JSD((1-t, t), (0, 1)) / ln 2`
/// where `t` is the probability the worst case puts all its mass on.
fn normalized_jsd_from_worst(t: f64) -> f64 {
    let good = 1.0 - t;
    let value = (good * LN_2 + xlogy(t, 2.0 * t / (t + 1.0)) + log(2.0 / (t + 1.0))) / (2.0 * LN_2);
    value.clamp(0.0, 1.0)
}

pub fn phi_eff(p: &ProbTable) -> Result<f64> {
    let (_, p21_star) = conditional_probs(p)?;
    Ok(normalized_jsd_from_worst(p21_star))
}

pub fn phi_tox(p: &ProbTable) -> f64 {
    normalized_jsd_from_worst(p.tox_yes())
}

pub fn phi_vector(p: &ProbTable) -> Result<IndexVector> {
    Ok(IndexVector {
        phi_eff: phi_eff(p)?,
        phi_tox: phi_tox(p),
    })
}

/// Delta-method covariance of `sqrt(N) (phi_hat - phi)` under multinomial
/// sampling. Requires every cell to be strictly positive.
pub fn asymptotic_cov(p: &ProbTable) -> Result<CovMatrix2> {
    if !p.is_strictly_positive() {
        return Err(Error::NonPositiveCell);
    }
    let off = p.off_diagonal();
    let (p12_star, p21_star) = conditional_probs(p)?;
    let tox = p.tox_yes();
    let k = 1.0 / (2.0 * LN_2);
    let eff_slope = log(p21_star / (p21_star + 1.0));
    let tox_slope = log(tox / (tox + 1.0));

    let s11 = (k * eff_slope) * (k * eff_slope) * p12_star * p21_star / off;
    let s12 = k * k * p12_star * p21_star * eff_slope * tox_slope;
    let s22 = (k * tox_slope) * (k * tox_slope) * tox * p.tox_no();
    Ok(CovMatrix2::new(s11, s12, s22))
}
