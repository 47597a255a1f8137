//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use choquard_lattice::kernel::{build_table, default_quad_points, fractional_degree, riesz_kernel};
use choquard_lattice::nehari::{fiber_max_golden, solve_su};
use choquard_lattice::solver::{mountain_pass_geometry_probe, mountain_pass_level};
use choquard_lattice::verify::{fiber_growth_check, gradient_check, ground_state_oracle, ibp_sampler};
use choquard_lattice::{
    minimize_ground_state, rng, EnergyContext, LatticeSpec, ModelSpec, Nonlinearity, Potential,
    SolverConfig,
};

type Outcome = Result<String, String>;

fn context(model: ModelSpec) -> EnergyContext {
    let m = default_quad_points(model.lattice.dim());
    let table = Arc::new(build_table(model.lattice, model.alpha, m).expect("kernel table"));
    EnergyContext::new(model, table).expect("context")
}

fn defaults() -> [(&'static str, ModelSpec); 2] {
    [("1d", ModelSpec::default_1d()), ("2d", ModelSpec::default_2d())]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn within_time(t: Duration, limit: Duration, detail: String) -> Outcome {
    if t <= limit {
        Ok(detail)
    } else {
        Err(format!("{detail}; took {t:.2?}, limit {limit:.0?}"))
    }
}

fn kernel_normalization() -> Outcome {
    let start = Instant::now();
    let k = fractional_degree(1, 1.0, 4096).map_err(|e| e.to_string())?;
    let exact = 4.0 / std::f64::consts::PI;
    let err = rel(k, exact);
    let detail = format!("K_1 = {k:.16}, 4/pi = {exact:.16}, relative error {err:.2e}");
    if err > 1e-8 {
        return Err(detail);
    }
    within_time(start.elapsed(), Duration::from_secs(1), detail)
}

fn kernel_asymptotics() -> Outcome {
    let start = Instant::now();
    let mut scaled = Vec::new();
    for t in 10..=30i64 {
        let r = riesz_kernel(&[t, 0], 2, 1.0, 512).map_err(|e| e.to_string())?;
        scaled.push(r * t as f64);
    }
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / hi;
    let detail = format!("R(t e_1) t in [{lo:.6}, {hi:.6}] for t = 10..30, spread {:.2}%", 100.0 * spread);
    if spread > 0.10 {
        return Err(detail);
    }
    within_time(start.elapsed(), Duration::from_secs(30), detail)
}

fn integration_by_parts() -> Outcome {
    let mut worst = 0.0f64;
    for (dim, r) in [(1, 8), (2, 6)] {
        let spec = LatticeSpec::new(dim, r).unwrap();
        for p in [2.0, 2.5, 3.0, 4.0] {
            let rep = ibp_sampler(spec, p, 20, 11).map_err(|e| e.to_string())?;
            worst = worst.max(1e-10 - rep.worst_margin);
            if !rep.passed {
                return Err(format!("N={dim}, p={p}: {}", rep.detail));
            }
        }
    }
    Ok(format!("20 pairs x 4 exponents x 2 dimensions, worst relative mismatch {worst:.2e}"))
}

fn gradient_correctness() -> Outcome {
    let mut parts = Vec::new();
    for p in [2.0, 3.0] {
        let ctx = context(ModelSpec::constant_single(2, 6, p, 1.0, 4.0));
        let rep = gradient_check(&ctx, 20, 1e-6, 12).map_err(|e| e.to_string())?;
        if !rep.passed {
            return Err(rep.detail);
        }
        parts.push(format!("p={p}: {:.2e}", 1e-5 - rep.worst_margin));
    }
    Ok(format!("worst relative component error {}", parts.join(", ")))
}

fn fiber_growth() -> Outcome {
    let mut parts = Vec::new();
    for (name, m) in defaults() {
        let rep = fiber_growth_check(&context(m), 50, 13).map_err(|e| e.to_string())?;
        if !rep.passed {
            return Err(format!("{name}: {}", rep.detail));
        }
        parts.push(format!("{name}: margin {:.2e}", rep.worst_margin));
    }
    Ok(format!("50 fields x 5 factors, {}", parts.join(", ")))
}

fn su_correctness() -> Outcome {
    let mut worst_closed = 0.0f64;
    let mut worst_golden = 0.0f64;
    for (name, m) in defaults() {
        let ctx = context(m);
        let p = ctx.p();
        let q = ctx.model().nonlinearity.theta();
        for k in 0..50 {
            let mut g = rng::stream(14, k);
            let u = rng::uniform_field(ctx.model().lattice, &mut g);
            // phi(s) = s^p ||u||^p - s^(2q) A(u) vanishes at s^(2q-p) = ||u||^p / A(u).
            let closed = (ctx.h_norm_p(&u).unwrap() / ctx.nonlocal_pairing(&u).unwrap()).powf(1.0 / (2.0 * q - p));
            let s = solve_su(&ctx.fiber_profile(&u).unwrap()).map_err(|e| e.to_string())?;
            let (golden, _) = fiber_max_golden(&ctx, &u, 1e-12).map_err(|e| e.to_string())?;
            worst_closed = worst_closed.max(rel(s, closed));
            worst_golden = worst_golden.max(rel(golden, s));
            if worst_closed > 1e-10 || worst_golden > 1e-6 {
                return Err(format!("{name} sample {k}: root {s}, closed form {closed}, golden {golden}"));
            }
        }
    }
    Ok(format!(
        "50 fields per model, root vs closed form {worst_closed:.2e}, golden vs root {worst_golden:.2e}"
    ))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let ctx = context(ModelSpec::new(
        LatticeSpec::new(1, 3).unwrap(),
        2.0,
        0.5,
        Potential::Constant { h0: 1.0 },
        Nonlinearity::single(1.0, 4.0).unwrap(),
    ).unwrap());
    let solved = minimize_ground_state(&ctx, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let oracle = ground_state_oracle(&ctx, 10_000, 15).map_err(|e| e.to_string())?;
    let err = rel(solved.energy, oracle.value);
    let detail = format!(
        "solver c = {:.15}, oracle {:.15} (scan {:.15}), relative difference {err:.2e}",
        solved.energy, oracle.value, oracle.scan_min
    );
    if err > 1e-6 {
        return Err(detail);
    }
    within_time(start.elapsed(), Duration::from_secs(120), detail)
}

fn criticality() -> Outcome {
    let mut parts = Vec::new();
    for (name, m) in defaults() {
        let ctx = context(m);
        let r = minimize_ground_state(&ctx, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let p = ctx.p();
        let pointwise_limit = 1e-8 * r.norm.powf(p - 1.0).max(1.0);
        let nehari_limit = 1e-8 * r.norm.powf(p);
        let line = format!(
            "{name}: c = {:.12}, residual {:.2e} <= {:.2e}, nehari {:.2e} <= {:.2e}",
            r.energy, r.pointwise_residual, pointwise_limit, r.nehari_residual, nehari_limit
        );
        if r.pointwise_residual > pointwise_limit || r.nehari_residual > nehari_limit || r.energy <= 0.0 {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

fn level_consistency() -> Outcome {
    let mut parts = Vec::new();
    for (name, m) in defaults() {
        let ctx = context(m);
        let r = minimize_ground_state(&ctx, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let lv = mountain_pass_level(&ctx, &r.field, 1000, 16).map_err(|e| e.to_string())?;
        let path = rel(lv.path_max, lv.energy);
        let line = format!(
            "{name}: path max vs J(u*) {path:.2e}, direction min - c = {:.3e}",
            lv.direction_min - lv.energy
        );
        if path > 1e-8 || lv.direction_min < lv.energy - 1e-8 {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

fn geometry() -> Outcome {
    let mut parts = Vec::new();
    for (name, m) in defaults() {
        let ctx = context(m);
        let g = mountain_pass_geometry_probe(&ctx, 200, 17).map_err(|e| e.to_string())?;
        let line = format!(
            "{name}: rho = {}, sigma = {:.4e}, ||e|| = {:.3}, J(e) = {:.3e}",
            g.rho, g.sigma, g.witness_norm, g.witness_energy
        );
        if !(g.sigma > 0.0 && g.rho > 0.0 && g.witness_norm > g.rho && g.witness_energy < 0.0) {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

fn periodic_invariance() -> Outcome {
    let ctx = context(ModelSpec::new(
        LatticeSpec::new(1, 12).unwrap(),
        2.0,
        0.5,
        Potential::Periodic { period: 2, cell: vec![1.0, 2.0] },
        Nonlinearity::single(1.0, 4.0).unwrap(),
    ).unwrap());
    let mut worst = 0.0f64;
    for k in 0..20 {
        let mut g = rng::stream(18, k);
        let u = rng::supported_field(ctx.model().lattice, 10, &mut g);
        let j = ctx.energy_j(&u).unwrap();
        for shift in [2, -2] {
            let moved = u.translated(&[shift]).ok_or("shift left the box")?;
            worst = worst.max((ctx.energy_j(&moved).unwrap() - j).abs());
        }
    }
    let detail = format!("20 interior fields, worst |J(u(. - 2)) - J(u)| = {worst:.2e}");
    if worst > 1e-12 {
        return Err(detail);
    }
    Ok(detail)
}

fn strip_wall_time(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_time\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn solve_report(config: &Path, out: &Path, threads: &str) -> Result<String, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_choquard"))
        .args(["solve", "--seed", "3", "--threads", threads, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("solve exited with {status}"));
    }
    fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut parts = Vec::new();
    for name in ["default_1d", "default_2d"] {
        let config = root.join(format!("{name}.toml"));
        let a = solve_report(&config, &dir.path().join(format!("{name}_a")), "0")?;
        let b = solve_report(&config, &dir.path().join(format!("{name}_b")), "0")?;
        let c = solve_report(&config, &dir.path().join(format!("{name}_c")), "1")?;
        if !a.contains("\"wall_time\"") {
            return Err(format!("{name}: wall_time missing"));
        }
        let (a, b, c) = (strip_wall_time(&a), strip_wall_time(&b), strip_wall_time(&c));
        if a != b || a != c {
            return Err(format!("{name}: report.json differs between runs"));
        }
        parts.push(format!("{name}: {} bytes identical", a.len()));
    }
    Ok(format!("two runs and a 1-thread run per config; {}", parts.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("kernel normalization", kernel_normalization),
        ("kernel asymptotics", kernel_asymptotics),
        ("integration by parts", integration_by_parts),
        ("gradient correctness", gradient_correctness),
        ("fiber growth", fiber_growth),
        ("s_u correctness", su_correctness),
        ("oracle equivalence", oracle_equivalence),
        ("criticality", criticality),
        ("level consistency", level_consistency),
        ("mountain-pass geometry", geometry),
        ("periodic invariance", periodic_invariance),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name} ({t:.2?}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name} ({t:.2?}): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
