//! Subcommand bodies. Each writes its artifacts under `out` and returns the
//! one-line summary printed by the binary.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use choquard_lattice::model::log_grid;
use choquard_lattice::nehari::{bracket, fiber_probe, project_su, PROJECTION_TOL};
use choquard_lattice::solver::start_field;
use choquard_lattice::verify::run_suite;
use choquard_lattice::{io, minimize_ground_state, EnergyContext, Field, KernelTable};
use toml::Value;

use crate::config::{parse_config_with, Overrides, RunConfig};
use crate::error::CliError;
use crate::output::{
    fiber_to_csv, kernel_to_csv, sweep_to_csv, trace_to_csv, write_json, CheckRow, ChecksFile,
    FiberMeta, ReportFile, SweepResult, SweepRow,
};

pub const REPORT_FILE: &str = "report.json";
pub const SOLUTION_FILE: &str = "solution.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const KERNEL_CSV: &str = "kernel.csv";
pub const KERNEL_JSON: &str = "kernel.json";
pub const FIBER_FILE: &str = "fiber.csv";
pub const CHECKS_FILE: &str = "checks.json";

pub fn table_for(cfg: &RunConfig) -> Result<KernelTable, CliError> {
    Ok(KernelTable::load_or_build(
        cfg.model.lattice,
        cfg.model.alpha,
        cfg.kernel.quad_points,
        cfg.kernel.cache_dir.as_deref(),
    )?)
}

pub fn context_for(cfg: &RunConfig) -> Result<EnergyContext, CliError> {
    let table = Arc::new(table_for(cfg)?);
    Ok(EnergyContext::new(cfg.model.clone(), table)?.with_method(cfg.kernel.method))
}

fn prepare(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    Ok(())
}

/// `report.json`, `solution.csv` and `trace.csv`.
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let start = Instant::now();
    let ctx = context_for(cfg)?;
    let report = minimize_ground_state(&ctx, &cfg.solver)?;
    let wall = start.elapsed().as_secs_f64();
    prepare(out)?;
    let file = ReportFile::new(&cfg.model, ctx.table(), &cfg.solver, &report, wall);
    write_json(&out.join(REPORT_FILE), &file)?;
    io::write_field(&out.join(SOLUTION_FILE), &report.field)?;
    fs::write(out.join(TRACE_FILE), trace_to_csv(&report.trace))?;
    Ok(format!(
        "solve: c = {:.12e}, nehari relative {:.3e}, pointwise residual {:.3e}, {} iterations (start {}), wall time {:.3} s",
        report.energy,
        report.nehari_relative,
        report.pointwise_residual,
        report.iterations,
        report.winner,
        wall
    ))
}

/// Parses a sweep value as a TOML scalar.
pub fn parse_value(text: &str) -> Result<Value, CliError> {
    let doc: toml::Table = format!("v = {text}")
        .parse()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("bad sweep value `{text}`: {e}")))?;
    let v = doc["v"].clone();
    match v {
        Value::Integer(_) | Value::Float(_) | Value::String(_) | Value::Boolean(_) => Ok(v),
        _ => Err(CliError::Usage(format!("sweep value `{text}` must be a scalar"))),
    }
}

/// Solves once per value of `key` and writes `sweep.csv`. Returns the
/// summary and the first failure, if any, after every row is written.
pub fn sweep(
    text: &str,
    base: &Overrides,
    key: &str,
    values: &[String],
    out: &Path,
) -> Result<(String, Option<CliError>), CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    let mut first_failure = None;
    for raw in values {
        let value = parse_value(raw)?;
        let overrides = base.clone().set(key, value);
        let outcome = parse_config_with(text, &overrides).and_then(|cfg| {
            let ctx = context_for(&cfg)?;
            Ok(minimize_ground_state(&ctx, &cfg.solver)?)
        });
        let (status, result) = match outcome {
            Ok(r) => (
                "ok".to_string(),
                Some(SweepResult {
                    energy: r.energy,
                    norm: r.norm,
                    nehari_relative: r.nehari_relative,
                    pointwise_residual: r.pointwise_residual,
                    iterations: r.iterations,
                    winner: r.winner,
                }),
            ),
            Err(e) => {
                let status = match e.exit_code() {
                    crate::error::EXIT_REJECTED => "rejected",
                    crate::error::EXIT_NONCONVERGENCE => "nonconvergence",
                    _ => "invalid",
                };
                eprintln!("sweep {key} = {raw}: {e}");
                first_failure.get_or_insert(e);
                (status.to_string(), None)
            }
        };
        rows.push(SweepRow {
            key: key.to_string(),
            value: raw.clone(),
            status,
            result,
        });
    }
    prepare(out)?;
    fs::write(out.join(SWEEP_FILE), sweep_to_csv(&rows))?;
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    Ok((format!("sweep: {key} over {} values, {ok} solved", rows.len()), first_failure))
}

/// `kernel.csv` and `kernel.json`.
pub fn kernel(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let start = Instant::now();
    let table = table_for(cfg)?;
    prepare(out)?;
    fs::write(out.join(KERNEL_CSV), kernel_to_csv(&table))?;
    table.write_json(&out.join(KERNEL_JSON))?;
    Ok(format!(
        "kernel: K_alpha = {:.15e}, R(0) = {:.15e}, {} entries, wall time {:.3} s",
        table.k_alpha(),
        table.get(&vec![0; table.dim()]).unwrap_or(f64::NAN),
        table.values().len(),
        start.elapsed().as_secs_f64()
    ))
}

/// Range of the fiber scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberGrid {
    pub points: usize,
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
}

/// `fiber.csv` for the field in `field`, or for start 0 when absent.
pub fn fiber(cfg: &RunConfig, field: Option<&Path>, grid: FiberGrid, out: &Path) -> Result<String, CliError> {
    let ctx = context_for(cfg)?;
    let u: Field = match field {
        Some(p) => io::read_field(p)?,
        None => start_field(cfg.model.lattice, cfg.seed, 0),
    };
    if u.spec() != cfg.model.lattice {
        return Err(CliError::Usage(format!(
            "field lives on {:?}, config describes {:?}",
            u.spec(),
            cfg.model.lattice
        )));
    }
    if grid.points < 2 {
        return Err(CliError::Usage("fiber needs at least 2 points".into()));
    }
    let auto = ctx
        .fiber_profile(&u)
        .and_then(|p| bracket(&p))
        .map(|(lo, hi)| (lo / 32.0, hi * 32.0))
        .unwrap_or((1e-3, 1e3));
    let lo = grid.s_min.unwrap_or(auto.0);
    let hi = grid.s_max.unwrap_or(auto.1);
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::Usage(format!("need 0 < s_min < s_max, got {lo} and {hi}")));
    }
    let s = log_grid(lo, hi, grid.points);
    let probe = fiber_probe(&ctx, &u, &s)?;
    let proj = project_su(&ctx, &u, PROJECTION_TOL).ok();
    let meta = FiberMeta {
        s_u: proj.as_ref().map(|p| p.s),
        energy_max: proj.as_ref().map(|p| p.energy),
    };
    prepare(out)?;
    fs::write(out.join(FIBER_FILE), fiber_to_csv(&meta, &probe.s, &probe.energy, &probe.phi))?;
    Ok(format!(
        "fiber: {} points on [{lo:e}, {hi:e}], {} sign change(s), s_u = {}",
        s.len(),
        probe.sign_changes().len(),
        meta.s_u.map_or("none".to_string(), |v| format!("{v:.12e}"))
    ))
}

/// `checks.json`; the summary lists one line per check.
pub fn check(cfg: &RunConfig, out: &Path) -> Result<(String, bool), CliError> {
    let start = Instant::now();
    let ctx = context_for(cfg)?;
    let suite = run_suite(&ctx, cfg.seed)?;
    let failed = suite.iter().filter(|c| !c.passed).count();
    let file = ChecksFile {
        model: cfg.model.clone(),
        quad_points: cfg.kernel.quad_points,
        seed: cfg.seed,
        passed: failed == 0,
        failed,
        checks: suite.iter().map(CheckRow::from).collect(),
        wall_time: start.elapsed().as_secs_f64(),
    };
    prepare(out)?;
    write_json(&out.join(CHECKS_FILE), &file)?;
    let mut lines: Vec<String> = suite
        .iter()
        .map(|c| format!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
        .collect();
    lines.push(format!(
        "check: {} of {} passed, wall time {:.3} s",
        suite.len() - failed,
        suite.len(),
        file.wall_time
    ));
    Ok((lines.join("\n"), failed == 0))
}
