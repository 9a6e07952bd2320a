//! Posterior probability that the experimental arm beats the historical
//! control on both indexes, `B = P(phi_E - phi_S > delta0 | data)`.
//!
//! Two routes are provided. The asymptotic route plugs posterior-mean
//! tables into the index and delta-method covariance and evaluates a
//! bivariate normal orthant. The Monte Carlo route draws both arms from
//! their Dirichlet posteriors and counts joint successes.

use libm::sqrt;

use crate::dirichlet::{DirichletParams, DirichletSampler};
use crate::error::{Error, Result};
use crate::index::{asymptotic_cov, phi_vector, CovMatrix2};
use crate::quadrature::{integrate_split, normal_pdf, normal_sf, safe_sqrt};
use crate::rng::{derived_stream, domain};
use crate::table::{CountTable, ProbTable};

/// Everything `B` depends on once the trial has reached `n_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSpec {
    pub alpha_e: DirichletParams,
    pub alpha_s: DirichletParams,
    pub x: CountTable,
    pub y: CountTable,
    pub n_max: u32,
    pub delta0: [f64; 2],
}

impl PosteriorSpec {
    pub fn new(
        alpha_e: DirichletParams,
        alpha_s: DirichletParams,
        x: CountTable,
        y: CountTable,
        n_max: u32,
    ) -> Result<Self> {
        let total = x.total() + y.total();
        if total != n_max {
            return Err(Error::SampleSizeMismatch { total, n_max });
        }
        Ok(Self {
            alpha_e,
            alpha_s,
            x,
            y,
            n_max,
            delta0: [0.0, 0.0],
        })
    }

    pub fn with_delta0(mut self, delta0: [f64; 2]) -> Self {
        self.delta0 = delta0;
        self
    }

    /// `x + y`, the data available at the final analysis.
    pub fn final_counts(&self) -> CountTable {
        self.x + self.y
    }

    /// Posterior of the experimental arm, `Dir(alpha_E + x + y)`.
    pub fn posterior_e(&self) -> DirichletParams {
        self.alpha_e.posterior(&self.final_counts())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateNormal {
    pub mean: [f64; 2],
    pub cov: CovMatrix2,
}

/// `(alpha_E + x + y) / (sum(alpha_E) + n_max)`.
pub fn plugin_estimate_e(spec: &PosteriorSpec) -> ProbTable {
    spec.posterior_e().mean()
}

/// `alpha_S / sum(alpha_S)`.
pub fn plugin_estimate_s(alpha_s: &DirichletParams) -> ProbTable {
    alpha_s.mean()
}

/// Posterior mean of `phi_E - phi_S` under the plug-in estimates.
pub fn index_difference_estimate(spec: &PosteriorSpec) -> Result<[f64; 2]> {
    let e = phi_vector(&plugin_estimate_e(spec))?;
    let s = phi_vector(&plugin_estimate_s(&spec.alpha_s))?;
    Ok(e.difference(&s))
}

/// `Sigma(p_E)/(n_max + sum(alpha_E)) + Sigma(p_S)/sum(alpha_S)`.
pub fn difference_cov(spec: &PosteriorSpec) -> Result<CovMatrix2> {
    let cov_e = asymptotic_cov(&plugin_estimate_e(spec))?;
    let cov_s = asymptotic_cov(&plugin_estimate_s(&spec.alpha_s))?;
    let scale_e = 1.0 / (f64::from(spec.n_max) + spec.alpha_e.total());
    let scale_s = 1.0 / spec.alpha_s.total();
    Ok(cov_e.scaled(scale_e).plus(&cov_s.scaled(scale_s)))
}

pub fn difference_distribution(spec: &PosteriorSpec) -> Result<BivariateNormal> {
    Ok(BivariateNormal {
        mean: index_difference_estimate(spec)?,
        cov: difference_cov(spec)?,
    })
}

const PSD_TOL: f64 = 1e-12;
const Z_LIMIT: f64 = 10.0;
const ORTHANT_TOL: f64 = 1e-10;

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `P(Z1 > t1, Z2 > t2)` for `Z ~ N(mean, cov)`.
///
/// Reduces to `int_h^inf phi(z) Q((k - rho z) / sqrt(1 - rho^2)) dz` on
/// standardised thresholds and integrates that adaptively. A component with
/// zero variance collapses the problem to one dimension.
pub fn bvn_upper_orthant(d: &BivariateNormal, threshold: [f64; 2]) -> Result<f64> {
    let c = d.cov;
    if !c.s11.is_finite() || !c.s22.is_finite() || !c.s12.is_finite() {
        return Err(Error::NotPositiveDefinite);
    }
    if c.s11 < -PSD_TOL || c.s22 < -PSD_TOL || c.det() < -PSD_TOL {
        return Err(Error::NotPositiveDefinite);
    }
    let [m1, m2] = d.mean;
    let [t1, t2] = threshold;
    let var1 = c.s11.max(0.0);
    let var2 = c.s22.max(0.0);

    let p = match (var1 > 0.0, var2 > 0.0) {
        (false, false) => indicator(m1 > t1 && m2 > t2),
        (false, true) => indicator(m1 > t1) * normal_sf((t2 - m2) / sqrt(var2)),
        (true, false) => indicator(m2 > t2) * normal_sf((t1 - m1) / sqrt(var1)),
        (true, true) => {
            let s1 = sqrt(var1);
            let s2 = sqrt(var2);
            let h = (t1 - m1) / s1;
            let k = (t2 - m2) / s2;
            let rho = (c.s12 / (s1 * s2)).clamp(-1.0, 1.0);
            standard_orthant(h, k, rho)
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// `P(Z1 > h, Z2 > k)` for standard normals with correlation `rho`.
fn standard_orthant(h: f64, k: f64, rho: f64) -> f64 {
    let resid = safe_sqrt((1.0 - rho) * (1.0 + rho));
    if resid == 0.0 {
        return if rho > 0.0 {
            normal_sf(h.max(k))
        } else {
            (normal_sf(h) - normal_sf(-k)).max(0.0)
        };
    }
    if rho == 0.0 {
        return normal_sf(h) * normal_sf(k);
    }
    // Integrate over the component with the larger threshold: a shorter
    // range and a smaller result to resolve.
    let (h, k) = if h >= k { (h, k) } else { (k, h) };
    let lo = h.max(-Z_LIMIT);
    if lo >= Z_LIMIT {
        return 0.0;
    }
    let integrand = |z: f64| normal_pdf(z) * normal_sf((k - rho * z) / resid);
    // The conditional tail switches from 0 to 1 around z = k / rho.
    let kink = k / rho;
    integrate_split(integrand, lo, Z_LIMIT, &[kink], ORTHANT_TOL)
}

/// Asymptotic route for `B`.
pub fn b_asymptotic(spec: &PosteriorSpec) -> Result<f64> {
    bvn_upper_orthant(&difference_distribution(spec)?, spec.delta0)
}

/// Draws per Monte Carlo chunk. Each chunk has its own derived stream.
pub const MC_CHUNK: u64 = 4096;

pub fn mc_chunk_count(n_sims: u64) -> u64 {
    n_sims.div_ceil(MC_CHUNK)
}

/// Joint posterior sampler for the Monte Carlo route.
#[derive(Debug, Clone)]
pub struct McPosterior {
    experimental: DirichletSampler,
    control: DirichletSampler,
    delta0: [f64; 2],
}

impl McPosterior {
    pub fn new(spec: &PosteriorSpec) -> Self {
        Self {
            experimental: DirichletSampler::new(&spec.posterior_e()),
            control: DirichletSampler::new(&spec.alpha_s),
            delta0: spec.delta0,
        }
    }

    /// Successes among the draws of chunk `chunk` out of `n_sims` total.
    pub fn chunk_successes(&self, seed: u64, chunk: u64, n_sims: u64) -> u64 {
        let start = chunk * MC_CHUNK;
        let len = MC_CHUNK.min(n_sims.saturating_sub(start));
        let mut rng = derived_stream(seed, &[domain::MC_CHUNK, chunk]);
        let mut hits = 0;
        for _ in 0..len {
            let pe = self.experimental.sample(&mut rng);
            let ps = self.control.sample(&mut rng);
            let (Ok(e), Ok(s)) = (phi_vector(&pe), phi_vector(&ps)) else {
                continue;
            };
            let diff = e.difference(&s);
            if diff[0] > self.delta0[0] && diff[1] > self.delta0[1] {
                hits += 1;
            }
        }
        hits
    }
}

/// Monte Carlo route for `B` with `n_sims` joint draws.
///
/// Panics if `n_sims == 0`.
pub fn b_montecarlo(spec: &PosteriorSpec, n_sims: u64, seed: u64) -> f64 {
    assert!(n_sims > 0, "n_sims must be positive");
    let mc = McPosterior::new(spec);
    let hits: u64 = (0..mc_chunk_count(n_sims))
        .map(|chunk| mc.chunk_successes(seed, chunk, n_sims))
        .sum();
    hits as f64 / n_sims as f64
}
