//! Run configuration files.
//!
//! One TOML schema covers every subcommand. Unknown keys are rejected and
//! every section is validated before any computation starts.
//!
//! ```toml
//! schema_version = 1
//!
//! [design]
//! alpha_e = [0.5, 0.5, 0.5, 0.5]
//! alpha_s = [30.0, 60.0, 30.0, 80.0]
//! n_min = 10
//! n_max = 40
//! cohort = 5
//! lambda = 0.80
//! theta_l = 0.001
//! theta_u = 1.0
//! seed = 20230731
//!
//! [simulation]
//! n_trials = 10000
//!
//! [[scenarios]]
//! label = "1"
//! p = [0.15, 0.30, 0.15, 0.40]
//! ```

use std::path::{Path, PathBuf};

use bivpp_core::{CalibrationPlan, DesignConfig, DirichletParams, Method, ProbTable, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    #[default]
    Asymptotic,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn default_delta0() -> [f64; 2] {
    [0.0, 0.0]
}

fn default_theta_u() -> f64 {
    1.0
}

fn default_mc_sims() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub alpha_e: [f64; 4],
    pub alpha_s: [f64; 4],
    pub n_min: u32,
    pub n_max: u32,
    pub cohort: u32,
    pub lambda: f64,
    pub theta_l: f64,
    #[serde(default = "default_theta_u")]
    pub theta_u: f64,
    #[serde(default = "default_delta0")]
    pub delta0: [f64; 2],
    #[serde(default)]
    pub method: MethodName,
    #[serde(default = "default_mc_sims")]
    pub mc_sims: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_trials: u64,
    /// One report row per scenario and cohort size. Defaults to the
    /// design's cohort.
    #[serde(default)]
    pub cohorts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub label: String,
    pub p: [f64; 4],
}

fn default_type1_cap() -> f64 {
    0.10
}

fn default_power_floor() -> f64 {
    0.80
}

fn default_power_tolerance() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub lambdas: Vec<f64>,
    pub theta_ls: Vec<f64>,
    pub h0: [f64; 4],
    pub h1: [f64; 4],
    pub n_trials: u64,
    #[serde(default = "default_type1_cap")]
    pub type1_cap: f64,
    #[serde(default = "default_power_floor")]
    pub power_floor: f64,
    #[serde(default = "default_power_tolerance")]
    pub power_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
    pub path: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub design: DesignSection,
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioEntry>,
    pub calibration: Option<CalibrationSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// A parsed config with the hash of its source bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn prob_table(p: [f64; 4], what: &str) -> Result<ProbTable> {
    ProbTable::from_array(p).map_err(|e| cfg_err(format!("{what}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.design()
            .map_err(|e| cfg_err(format!("[design]: {e}")))?
            .validate()
            .map_err(|e| cfg_err(format!("[design]: {e}")))?;
        if let Some(sim) = &self.simulation {
            if sim.n_trials == 0 {
                return Err(cfg_err("[simulation]: n_trials must be positive"));
            }
            if sim.cohorts.contains(&0) {
                return Err(cfg_err("[simulation]: cohort sizes must be positive"));
            }
        }
        for s in &self.scenarios {
            prob_table(s.p, &format!("scenario {:?}", s.label))?;
        }
        if let Some(cal) = &self.calibration {
            if cal.lambdas.is_empty() || cal.theta_ls.is_empty() {
                return Err(cfg_err("[calibration]: lambdas and theta_ls must be nonempty"));
            }
            if cal.n_trials == 0 {
                return Err(cfg_err("[calibration]: n_trials must be positive"));
            }
            if !(0.0..=1.0).contains(&cal.type1_cap) || !(0.0..=1.0).contains(&cal.power_floor) {
                return Err(cfg_err("[calibration]: type1_cap and power_floor must lie in [0, 1]"));
            }
            if cal.power_tolerance.is_nan() || cal.power_tolerance < 0.0 {
                return Err(cfg_err("[calibration]: power_tolerance must be nonnegative"));
            }
            prob_table(cal.h0, "[calibration] h0")?;
            prob_table(cal.h1, "[calibration] h1")?;
            let base = self.design().map_err(CliError::from)?;
            for &lambda in &cal.lambdas {
                for &theta_l in &cal.theta_ls {
                    DesignConfig { lambda, theta_l, ..base }
                        .validate()
                        .map_err(|e| cfg_err(format!("[calibration] ({lambda}, {theta_l}): {e}")))?;
                }
            }
        }
        Ok(())
    }

    pub fn design(&self) -> bivpp_core::Result<DesignConfig> {
        let d = &self.design;
        let method = match d.method {
            MethodName::Asymptotic => Method::Asymptotic,
            MethodName::Montecarlo => Method::MonteCarlo { sims: d.mc_sims },
        };
        Ok(DesignConfig {
            alpha_e: DirichletParams::from_array(d.alpha_e)?,
            alpha_s: DirichletParams::from_array(d.alpha_s)?,
            n_min: d.n_min,
            n_max: d.n_max,
            cohort: d.cohort,
            lambda: d.lambda,
            theta_l: d.theta_l,
            theta_u: d.theta_u,
            delta0: d.delta0,
            method,
            seed: d.seed,
        })
    }

    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        self.scenarios
            .iter()
            .map(|s| Ok(Scenario::new(s.label.clone(), prob_table(s.p, &s.label)?)))
            .collect()
    }

    pub fn calibration_plan(&self, seed: u64) -> Result<CalibrationPlan> {
        let cal = self
            .calibration
            .as_ref()
            .ok_or_else(|| cfg_err("config has no [calibration] section"))?;
        Ok(CalibrationPlan {
            lambdas: cal.lambdas.clone(),
            theta_ls: cal.theta_ls.clone(),
            h0: Scenario::new("H0", prob_table(cal.h0, "h0")?),
            h1: Scenario::new("H1", prob_table(cal.h1, "h1")?),
            n_trials: cal.n_trials,
            type1_cap: cal.type1_cap,
            power_floor: cal.power_floor,
            power_tolerance: cal.power_tolerance,
            seed,
        })
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| cfg_err("config is not valid UTF-8"))?;
    Ok(LoadedConfig {
        config: RunConfig::parse(text)?,
        sha256: sha256_hex(&bytes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
[design]
alpha_e = [0.5, 0.5, 0.5, 0.5]
alpha_s = [10.0, 9.0, 11.0, 30.0]
n_min = 10
n_max = 30
cohort = 5
lambda = 0.8
theta_l = 0.001
"#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::parse(BASE).unwrap();
        let d = c.design().unwrap();
        assert_eq!(d.theta_u, 1.0);
        assert_eq!(d.delta0, [0.0, 0.0]);
        assert_eq!(d.method, Method::Asymptotic);
        assert!(c.scenarios.is_empty());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASE.replace("cohort = 5", "cohort = 5\ncohrot = 1");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Toml(_))));
    }

    #[test]
    fn rejects_wrong_schema_and_bad_design() {
        let text = BASE.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
        let text = BASE.replace("lambda = 0.8", "lambda = 1.5");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
        let text = BASE.replace("[0.5, 0.5, 0.5, 0.5]", "[0.5, 0.0, 0.5, 0.5]");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_zero_trials() {
        let text = format!("{BASE}\n[simulation]\nn_trials = 0\n");
        let err = RunConfig::parse(&text).unwrap_err();
        assert_eq!(err.exit_code(), crate::EXIT_CONFIG);
    }

    #[test]
    fn rejects_bad_scenario() {
        let text = format!("{BASE}\n[[scenarios]]\nlabel = \"x\"\np = [0.5, 0.5, 0.5, 0.5]\n");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
