//! On-disk schemas written by the subcommands, with readers for each.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use choquard_lattice::solver::{StartSummary, TracePoint};
use choquard_lattice::verify::CheckReport;
use choquard_lattice::{KernelTable, ModelSpec, SolveReport, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// One start in `report.json`; non-finite values become `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartRow {
    pub index: usize,
    pub converged: bool,
    pub energy: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: usize,
    pub stop: String,
}

impl From<&StartSummary> for StartRow {
    fn from(s: &StartSummary) -> Self {
        Self {
            index: s.index,
            converged: s.converged,
            energy: finite(s.energy),
            residual: finite(s.residual),
            iterations: s.iterations,
            stop: s.stop.clone(),
        }
    }
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub label: String,
    pub model: ModelSpec,
    pub quad_points: usize,
    pub k_alpha: f64,
    pub solver: SolverConfig,
    pub energy: f64,
    pub norm: f64,
    pub nehari_residual: f64,
    pub nehari_relative: f64,
    pub pointwise_residual: f64,
    pub residual_tolerance: f64,
    pub iterations: usize,
    pub winner: usize,
    pub starts: Vec<StartRow>,
    pub s_history: Vec<f64>,
    pub wall_time: f64,
}

impl ReportFile {
    pub fn new(
        model: &ModelSpec,
        table: &KernelTable,
        solver: &SolverConfig,
        r: &SolveReport,
        wall_time: f64,
    ) -> Self {
        Self {
            label: r.label.clone(),
            model: model.clone(),
            quad_points: table.quad_points(),
            k_alpha: table.k_alpha(),
            solver: solver.clone(),
            energy: r.energy,
            norm: r.norm,
            nehari_residual: r.nehari_residual,
            nehari_relative: r.nehari_relative,
            pointwise_residual: r.pointwise_residual,
            residual_tolerance: r.residual_tolerance,
            iterations: r.iterations,
            winner: r.winner,
            starts: r.starts.iter().map(StartRow::from).collect(),
            s_history: r.s_history.clone(),
            wall_time,
        }
    }
}

/// One entry of `checks.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub anchor: String,
    pub n_samples: usize,
    pub worst_margin: Option<f64>,
    pub passed: bool,
    pub seed: u64,
    pub detail: String,
}

impl From<&CheckReport> for CheckRow {
    fn from(c: &CheckReport) -> Self {
        Self {
            name: c.name.clone(),
            anchor: c.anchor.clone(),
            n_samples: c.n_samples,
            worst_margin: finite(c.worst_margin),
            passed: c.passed,
            seed: c.seed,
            detail: c.detail.clone(),
        }
    }
}

/// Contents of `checks.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksFile {
    pub model: ModelSpec,
    pub quad_points: usize,
    pub seed: u64,
    pub passed: bool,
    pub failed: usize,
    pub checks: Vec<CheckRow>,
    pub wall_time: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn format(msg: String) -> CliError {
    CliError::Core(choquard_lattice::Error::Format(msg))
}

fn parse_rows(text: &str, header: &str, width: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(h) if h == header => {}
        other => return Err(format(format!("expected header `{header}`, got {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            match row {
                Ok(r) if r.len() == width => Ok(r),
                _ => Err(format(format!("bad row {}: `{line}`", i + 1))),
            }
        })
        .collect()
}

pub const TRACE_HEADER: &str = "iter,psi,residual,s,step";

pub fn trace_to_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in trace {
        writeln!(out, "{},{:e},{:e},{:e},{:e}", t.iter, t.psi, t.residual, t.s, t.step).unwrap();
    }
    out
}

pub fn trace_from_csv(text: &str) -> Result<Vec<TracePoint>, CliError> {
    parse_rows(text, TRACE_HEADER, 5)?
        .into_iter()
        .map(|r| {
            Ok(TracePoint {
                iter: r[0] as usize,
                psi: r[1],
                residual: r[2],
                s: r[3],
                step: r[4],
            })
        })
        .collect()
}

/// Header metadata of `kernel.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelMeta {
    pub dim: usize,
    pub radius: usize,
    pub alpha: f64,
    pub quad_points: usize,
    pub k_alpha: f64,
}

fn kernel_header(dim: usize) -> String {
    let mut h: Vec<String> = (1..=dim).map(|i| format!("d{i}")).collect();
    h.push("value".into());
    h.join(",")
}

/// Every entry `R_alpha(d)`, `d in {-2r..=2r}^N`, one row each.
pub fn kernel_to_csv(table: &KernelTable) -> String {
    let meta = KernelMeta {
        dim: table.dim(),
        radius: table.spec().radius(),
        alpha: table.alpha(),
        quad_points: table.quad_points(),
        k_alpha: table.k_alpha(),
    };
    let mut out = format!("# {}\n{}\n", serde_json::to_string(&meta).unwrap(), kernel_header(meta.dim));
    for (d, v) in table.entries() {
        for c in &d {
            write!(out, "{c},").unwrap();
        }
        writeln!(out, "{v:e}").unwrap();
    }
    out
}

/// Parsed `kernel.csv`: metadata and `(d, value)` rows.
pub fn kernel_from_csv(text: &str) -> Result<(KernelMeta, Vec<(Vec<i64>, f64)>), CliError> {
    let first = text.lines().next().unwrap_or_default();
    let meta: KernelMeta = serde_json::from_str(first.strip_prefix("# ").unwrap_or(first))?;
    let rows = parse_rows(text, &kernel_header(meta.dim), meta.dim + 1)?
        .into_iter()
        .map(|r| (r[..meta.dim].iter().map(|&c| c as i64).collect(), r[meta.dim]))
        .collect();
    Ok((meta, rows))
}

pub const FIBER_HEADER: &str = "s,energy,phi";

/// Header metadata of `fiber.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberMeta {
    pub s_u: Option<f64>,
    pub energy_max: Option<f64>,
}

pub fn fiber_to_csv(meta: &FiberMeta, s: &[f64], energy: &[f64], phi: &[f64]) -> String {
    let mut out = format!("# {}\n{FIBER_HEADER}\n", serde_json::to_string(meta).unwrap());
    for i in 0..s.len() {
        writeln!(out, "{:e},{:e},{:e}", s[i], energy[i], phi[i]).unwrap();
    }
    out
}

pub fn fiber_from_csv(text: &str) -> Result<(FiberMeta, Vec<[f64; 3]>), CliError> {
    let first = text.lines().next().unwrap_or_default();
    let meta: FiberMeta = serde_json::from_str(first.strip_prefix("# ").unwrap_or(first))?;
    let rows = parse_rows(text, FIBER_HEADER, 3)?
        .into_iter()
        .map(|r| [r[0], r[1], r[2]])
        .collect();
    Ok((meta, rows))
}

pub const SWEEP_HEADER: &str =
    "key,value,status,energy,norm,nehari_relative,pointwise_residual,iterations,winner";

/// One row of `sweep.csv`; solver fields are empty unless `status` is `ok`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub key: String,
    pub value: String,
    pub status: String,
    pub result: Option<SweepResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub energy: f64,
    pub norm: f64,
    pub nehari_relative: f64,
    pub pointwise_residual: f64,
    pub iterations: usize,
    pub winner: usize,
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        write!(out, "{},{},{}", r.key, r.value, r.status).unwrap();
        match &r.result {
            Some(s) => writeln!(
                out,
                ",{:e},{:e},{:e},{:e},{},{}",
                s.energy, s.norm, s.nehari_relative, s.pointwise_residual, s.iterations, s.winner
            )
            .unwrap(),
            None => out.push_str(",,,,,,\n"),
        }
    }
    out
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRow>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(format(format!("expected header `{SWEEP_HEADER}`")));
    }
    lines
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 9 {
                return Err(format(format!("bad sweep row `{line}`")));
            }
            let bad = |_| format(format!("bad sweep row `{line}`"));
            let result = if c[3].is_empty() {
                None
            } else {
                Some(SweepResult {
                    energy: c[3].parse().map_err(bad)?,
                    norm: c[4].parse().map_err(bad)?,
                    nehari_relative: c[5].parse().map_err(bad)?,
                    pointwise_residual: c[6].parse().map_err(bad)?,
                    iterations: c[7].parse().map_err(|_| format(format!("bad sweep row `{line}`")))?,
                    winner: c[8].parse().map_err(|_| format(format!("bad sweep row `{line}`")))?,
                })
            };
            Ok(SweepRow {
                key: c[0].into(),
                value: c[1].into(),
                status: c[2].into(),
                result,
            })
        })
        .collect()
}
