//! CSV and JSON report writers.
//!
//! CSV output starts with `# key=value` comment lines carrying the config
//! hash, the seed and the effective configuration, followed by a header row.
//! Numbers are rounded to fixed decimals in CSV and kept at full precision
//! in JSON. Nothing time- or host-dependent is written, so identical inputs
//! give identical bytes.

use std::io::Write;

use bivpp_core::{CalibrationGrid, OperatingCharacteristics, OutcomeRow};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    /// The configuration after command-line overrides, minus the output
    /// path and worker count, which do not affect results.
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(config_sha256: String, seed: u64, mut config: RunConfig) -> Self {
        config.output.path = None;
        config.output.workers = None;
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_sha256,
            seed,
            config,
        }
    }

    fn write_comments<W: Write>(&self, w: &mut W, extra: &[(&str, String)]) -> Result<()> {
        writeln!(w, "# tool={} {}", self.tool, self.version)?;
        writeln!(w, "# config_sha256={}", self.config_sha256)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# config={}", serde_json::to_string(&self.config)?)?;
        for (k, v) in extra {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }
}

fn fixed(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetailRow {
    pub y11: u32,
    pub y12: u32,
    pub y21: u32,
    pub y22: u32,
    pub f_m: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub indicator: u8,
}

impl From<&OutcomeRow> for DetailRow {
    fn from(r: &OutcomeRow) -> Self {
        let [y11, y12, y21, y22] = r.y.as_array();
        Self {
            y11,
            y12,
            y21,
            y22,
            f_m: r.f_m,
            b: r.b,
            indicator: u8::from(r.indicator),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PpOutput {
    pub provenance: Provenance,
    pub x: [u32; 4],
    pub m: u32,
    pub pp: f64,
    pub decision: &'static str,
    pub rows: Vec<DetailRow>,
}

/// Writes the one-line PP summary (CSV) or the full report (JSON).
pub fn write_pp<W: Write>(w: &mut W, out: &PpOutput, format: Format) -> Result<()> {
    match format {
        Format::Json => write_json(w, out),
        Format::Csv => {
            out.provenance.write_comments(w, &[])?;
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["x11", "x12", "x21", "x22", "m", "pp", "decision"])?;
            let [x11, x12, x21, x22] = out.x;
            csv.write_record([
                x11.to_string(),
                x12.to_string(),
                x21.to_string(),
                x22.to_string(),
                out.m.to_string(),
                fixed(out.pp, 6),
                out.decision.to_string(),
            ])?;
            csv.flush()?;
            Ok(())
        }
    }
}

/// Per-outcome rows, one per future table.
pub fn write_detail<W: Write>(w: &mut W, out: &PpOutput) -> Result<()> {
    out.provenance
        .write_comments(w, &[("x", format!("{:?}", out.x)), ("pp", fixed(out.pp, 6))])?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["y11", "y12", "y21", "y22", "f_m", "B", "indicator"])?;
    for r in &out.rows {
        csv.write_record([
            r.y11.to_string(),
            r.y12.to_string(),
            r.y21.to_string(),
            r.y22.to_string(),
            fixed(r.f_m, 10),
            fixed(r.b, 6),
            r.indicator.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerateRow {
    pub rank: usize,
    pub y: [u32; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerateOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub m: u32,
    pub count: usize,
    pub rows: Vec<EnumerateRow>,
}

pub fn write_enumerate<W: Write>(w: &mut W, out: &EnumerateOutput, format: Format) -> Result<()> {
    if format == Format::Json {
        return write_json(w, out);
    }
    let counts = [("m", out.m.to_string()), ("count", out.count.to_string())];
    match &out.provenance {
        Some(p) => p.write_comments(w, &counts)?,
        None => {
            for (k, v) in &counts {
                writeln!(w, "# {k}={v}")?;
            }
        }
    }
    let weighted = out.rows.first().is_some_and(|r| r.f_m.is_some());
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["rank", "y11", "y12", "y21", "y22"];
    if weighted {
        header.push("f_m");
    }
    csv.write_record(&header)?;
    for r in &out.rows {
        let mut rec = vec![r.rank.to_string()];
        rec.extend(r.y.iter().map(u32::to_string));
        if let Some(f) = r.f_m {
            rec.push(fixed(f, 10));
        }
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct OcRow {
    pub scenario: String,
    pub cohort: u32,
    pub p: [f64; 4],
    pub pet: f64,
    pub prn: f64,
    pub ass: f64,
    pub n_trials: u64,
    pub reached_max: u64,
}

impl OcRow {
    pub fn new(scenario: &str, cohort: u32, p: [f64; 4], oc: &OperatingCharacteristics) -> Self {
        Self {
            scenario: scenario.to_string(),
            cohort,
            p,
            pet: oc.pet,
            prn: oc.prn,
            ass: oc.ass,
            n_trials: oc.n_trials,
            reached_max: oc.reached_max,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOutput {
    pub provenance: Provenance,
    pub rows: Vec<OcRow>,
}

pub fn write_simulate<W: Write>(w: &mut W, out: &SimulateOutput, format: Format) -> Result<()> {
    if format == Format::Json {
        return write_json(w, out);
    }
    out.provenance.write_comments(w, &[])?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "scenario", "cohort", "p11", "p12", "p21", "p22", "PET", "PRN", "ASS", "n_trials",
    ])?;
    for r in &out.rows {
        let mut rec = vec![r.scenario.clone(), r.cohort.to_string()];
        rec.extend(r.p.iter().map(|&v| fixed(v, 4)));
        rec.extend([fixed(r.pet, 4), fixed(r.prn, 4), fixed(r.ass, 2), r.n_trials.to_string()]);
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub lambda: f64,
    pub theta_l: f64,
    pub type1: f64,
    pub power: f64,
    pub pet_h0: f64,
    pub pet_h1: f64,
    pub ass_h0: f64,
    pub ass_h1: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Selection {
    pub lambda: f64,
    pub theta_l: f64,
    pub type1: f64,
    pub power: f64,
    pub type1_cap: f64,
    pub power_floor: f64,
    pub power_floor_met: bool,
    pub power_tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrateOutput {
    pub provenance: Provenance,
    pub cells: Vec<GridRow>,
    pub selected: Selection,
}

impl CalibrateOutput {
    pub fn new(provenance: Provenance, grid: &CalibrationGrid) -> Self {
        let cells = grid
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| GridRow {
                lambda: c.lambda,
                theta_l: c.theta_l,
                type1: c.type1(),
                power: c.power(),
                pet_h0: c.null.pet,
                pet_h1: c.alternative.pet,
                ass_h0: c.null.ass,
                ass_h1: c.alternative.ass,
                selected: i == grid.selected,
            })
            .collect();
        let s = grid.selected_cell();
        let selected = Selection {
            lambda: s.lambda,
            theta_l: s.theta_l,
            type1: s.type1(),
            power: s.power(),
            type1_cap: grid.type1_cap,
            power_floor: grid.power_floor,
            power_floor_met: grid.power_floor_met(),
            power_tolerance: grid.power_tolerance,
        };
        Self {
            provenance,
            cells,
            selected,
        }
    }
}

pub fn write_calibrate<W: Write>(w: &mut W, out: &CalibrateOutput, format: Format) -> Result<()> {
    if format == Format::Json {
        return write_json(w, out);
    }
    let s = &out.selected;
    out.provenance.write_comments(
        w,
        &[
            ("selected_lambda", s.lambda.to_string()),
            ("selected_theta_l", s.theta_l.to_string()),
            ("power_floor_met", s.power_floor_met.to_string()),
        ],
    )?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "lambda", "theta_L", "type1", "power", "PET_H0", "PET_H1", "ASS_H0", "ASS_H1", "selected",
    ])?;
    for r in &out.cells {
        csv.write_record([
            r.lambda.to_string(),
            r.theta_l.to_string(),
            fixed(r.type1, 4),
            fixed(r.power, 4),
            fixed(r.pet_h0, 4),
            fixed(r.pet_h1, 4),
            fixed(r.ass_h0, 2),
            fixed(r.ass_h1, 2),
            u8::from(r.selected).to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}
