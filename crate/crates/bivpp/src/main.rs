use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bivpp::config::{self, Format, LoadedConfig, MethodName, RunConfig};
use bivpp::error::{CliError, Result};
use bivpp::parallel;
use bivpp::report::{
    self, CalibrateOutput, DetailRow, EnumerateOutput, EnumerateRow, OcRow, PpOutput, Provenance,
    SimulateOutput,
};
use bivpp_core::{
    asymptotic_cov, final_analysis, interim_decision, phi_vector, Decision, DesignConfig, Outcomes,
    PredictiveWeights, ProbTable,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bivpp", version, about = "Predictive-probability monitoring for efficacy x toxicity trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index vector and asymptotic covariance of one probability table.
    Index(IndexArgs),
    /// Predictive probability of eventual success for interim data.
    Pp(PpArgs),
    /// List the future outcome tables of a given size.
    Enumerate(EnumerateArgs),
    /// Operating characteristics of a design over scenario batches.
    Simulate(RunArgs),
    /// Grid search over (lambda, theta_L).
    Calibrate(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Asymptotic,
    Montecarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Overrides {
    /// Replace the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// How B is computed.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Monte Carlo draws per B value.
    #[arg(long)]
    sims: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    /// p11 p12 p21 p22, cells ordered (response, toxic) first.
    #[arg(num_args = 4, required = true, allow_negative_numbers = true)]
    table: Vec<f64>,
    /// Rescale the four values to sum to one (e.g. Dirichlet hyperparameters).
    #[arg(long)]
    normalize: bool,
    /// Effective sample size; prints the covariance of the estimate and 95%
    /// interval widths. Defaults to the input sum with --normalize.
    #[arg(long)]
    n: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct PpArgs {
    config: PathBuf,
    /// Interim counts x11,x12,x21,x22.
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<u32>,
    /// Write one CSV row per future outcome here.
    #[arg(long)]
    detail: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Number of future participants.
    m: u32,
    /// Adds predictive weights from this config's experimental prior.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Interim counts for the weights (default: none observed).
    #[arg(long, value_delimiter = ',', requires = "config")]
    x: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Replace the number of simulated trials.
    #[arg(long)]
    trials: Option<u64>,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Pp(a) => cmd_pp(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    }
}

fn to_format(f: FormatArg) -> Format {
    match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }
}

fn counts(v: &[u32]) -> Result<bivpp_core::CountTable> {
    let cells: [u32; 4] = v
        .try_into()
        .map_err(|_| CliError::Config(format!("expected 4 counts, got {}", v.len())))?;
    Ok(bivpp_core::CountTable::from_array(cells))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Applies command-line overrides and revalidates.
fn apply(mut loaded: LoadedConfig, o: &Overrides, trials: Option<u64>) -> Result<LoadedConfig> {
    let c = &mut loaded.config;
    if let Some(seed) = o.seed {
        c.design.seed = seed;
    }
    if let Some(m) = o.method {
        c.design.method = match m {
            MethodArg::Asymptotic => MethodName::Asymptotic,
            MethodArg::Montecarlo => MethodName::Montecarlo,
        };
    }
    if let Some(s) = o.sims {
        c.design.mc_sims = s;
    }
    if let Some(w) = o.workers {
        c.output.workers = Some(w);
    }
    if let Some(f) = o.format {
        c.output.format = to_format(f);
    }
    if let Some(p) = &o.out {
        c.output.path = Some(p.clone());
    }
    if let Some(n) = trials {
        if let Some(sim) = &mut c.simulation {
            sim.n_trials = n;
        }
        if let Some(cal) = &mut c.calibration {
            cal.n_trials = n;
        }
    }
    c.validate()?;
    Ok(loaded)
}

fn provenance(loaded: &LoadedConfig) -> Provenance {
    Provenance::new(loaded.sha256.clone(), loaded.config.design.seed, loaded.config.clone())
}

fn design(c: &RunConfig) -> Result<DesignConfig> {
    Ok(c.design()?)
}

fn cmd_index(a: IndexArgs) -> Result<()> {
    let cells: [f64; 4] = a.table.as_slice().try_into().expect("clap enforces four values");
    let p = if a.normalize {
        ProbTable::normalized(cells)
    } else {
        ProbTable::from_array(cells)
    }
    .map_err(|e| CliError::Config(format!("invalid table: {e}")))?;
    let n = a.n.or(a.normalize.then(|| cells.iter().sum()));
    let phi = phi_vector(&p).map_err(|e| CliError::Config(format!("invalid table: {e}")))?;
    let cov = asymptotic_cov(&p).ok();
    let scaled = cov.zip(n).map(|(c, n)| c.scaled(1.0 / n));
    let width = |v: f64| 2.0 * 1.959_963_984_540_054 * v.max(0.0).sqrt();

    let mut out = open_out(None)?;
    match to_format(a.format) {
        Format::Json => {
            let value = json!({
                "p": p.as_array(),
                "phi_eff": phi.phi_eff,
                "phi_tox": phi.phi_tox,
                "sigma": cov.map(|c| c.as_rows()),
                "n": n,
                "sigma_over_n": scaled.map(|c| c.as_rows()),
                "width95": scaled.map(|c| [width(c.s11), width(c.s22)]),
            });
            report::write_json(&mut out, &value)?;
        }
        Format::Csv => {
            writeln!(out, "phi_eff,{:.6}", phi.phi_eff)?;
            writeln!(out, "phi_tox,{:.6}", phi.phi_tox)?;
            match cov {
                Some(c) => {
                    writeln!(out, "sigma11,{:.6}", c.s11)?;
                    writeln!(out, "sigma12,{:.6}", c.s12)?;
                    writeln!(out, "sigma22,{:.6}", c.s22)?;
                }
                None => writeln!(out, "sigma,undefined (a cell is zero)")?,
            }
            if let Some(s) = scaled {
                writeln!(out, "width95_eff,{:.6}", width(s.s11))?;
                writeln!(out, "width95_tox,{:.6}", width(s.s22))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_pp(a: PpArgs) -> Result<()> {
    let x = counts(&a.x)?;
    let loaded = apply(config::load(&a.config)?, &a.overrides, None)?;
    let c = &loaded.config;
    let cfg = design(c)?;
    let rep = parallel::with_workers(c.output.workers, || parallel::predictive_probability(&cfg, &x))??;
    let decision = if x.total() < cfg.n_max {
        match interim_decision(&cfg, rep.pp) {
            Decision::StopFutility { .. } => "stop_futility",
            Decision::StopSuccess { .. } => "stop_success",
            Decision::Continue { .. } => "continue",
        }
    } else if final_analysis(&cfg, &x, &bivpp_core::DirectPosterior { cfg: &cfg })?.is_effective() {
        "claim_effective"
    } else {
        "claim_not_effective"
    };
    let out = PpOutput {
        provenance: provenance(&loaded),
        x: x.as_array(),
        m: cfg.n_max - x.total(),
        pp: rep.pp,
        decision,
        rows: rep.rows.iter().map(DetailRow::from).collect(),
    };
    if let Some(path) = &a.detail {
        let mut w = open_out(Some(path))?;
        report::write_detail(&mut w, &out)?;
        w.flush()?;
    }
    let mut w = open_out(c.output.path.as_deref())?;
    report::write_pp(&mut w, &out, c.output.format)?;
    w.flush()?;
    Ok(())
}

fn cmd_enumerate(a: EnumerateArgs) -> Result<()> {
    let (provenance, weights) = match &a.config {
        Some(path) => {
            let loaded = config::load(path)?;
            let x = match &a.x {
                Some(v) => counts(v)?,
                None => bivpp_core::CountTable::zero(),
            };
            let cfg = design(&loaded.config)?;
            let w = PredictiveWeights::new(&cfg.alpha_e.posterior(&x), a.m);
            (Some(provenance(&loaded)), Some(w))
        }
        None => (None, None),
    };
    let rows: Vec<EnumerateRow> = Outcomes::new(a.m)
        .enumerate()
        .map(|(rank, y)| EnumerateRow {
            rank,
            y: y.as_array(),
            f_m: weights.as_ref().map(|w| w.pmf(&y)),
        })
        .collect();
    let out = EnumerateOutput {
        provenance,
        m: a.m,
        count: rows.len(),
        rows,
    };
    let mut w = open_out(a.out.as_deref())?;
    report::write_enumerate(&mut w, &out, a.format.map_or(Format::Csv, to_format))?;
    w.flush()?;
    Ok(())
}

fn cmd_simulate(a: RunArgs) -> Result<()> {
    let loaded = apply(config::load(&a.config)?, &a.overrides, a.trials)?;
    let c = &loaded.config;
    let sim_section = c
        .simulation
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [simulation] section".into()))?;
    let scenarios = c.scenarios()?;
    if scenarios.is_empty() {
        return Err(CliError::Config("config has no [[scenarios]]".into()));
    }
    let base = design(c)?;
    let cohorts = if sim_section.cohorts.is_empty() {
        vec![base.cohort]
    } else {
        sim_section.cohorts.clone()
    };
    let rows = parallel::with_workers(c.output.workers, || -> Result<Vec<OcRow>> {
        let table = parallel::build_b_table(&base)?;
        let sims = cohorts
            .iter()
            .map(|&cohort| {
                let cfg = DesignConfig { cohort, ..base };
                Ok((cohort, bivpp_core::Simulator::with_table(cfg, table.clone())?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(scenarios.len() * sims.len());
        for sc in &scenarios {
            for (cohort, sim) in &sims {
                let oc = parallel::operating_characteristics(sim, sc, sim_section.n_trials, base.seed)?;
                rows.push(OcRow::new(&sc.label, *cohort, sc.p_true.as_array(), &oc));
            }
        }
        Ok(rows)
    })??;
    let out = SimulateOutput {
        provenance: provenance(&loaded),
        rows,
    };
    let mut w = open_out(c.output.path.as_deref())?;
    report::write_simulate(&mut w, &out, c.output.format)?;
    w.flush()?;
    Ok(())
}

fn cmd_calibrate(a: RunArgs) -> Result<()> {
    let loaded = apply(config::load(&a.config)?, &a.overrides, a.trials)?;
    let c = &loaded.config;
    let base = design(c)?;
    let plan = c.calibration_plan(base.seed)?;
    let grid = parallel::with_workers(c.output.workers, || parallel::calibrate(&base, &plan))??;
    let out = CalibrateOutput::new(provenance(&loaded), &grid);
    let mut w = open_out(c.output.path.as_deref())?;
    report::write_calibrate(&mut w, &out, c.output.format)?;
    w.flush()?;
    Ok(())
}
