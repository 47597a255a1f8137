//! Ground-state search: descent of `Psi` on the unit sphere of `H` with
//! multi-start, plus mountain-pass cross-checks.

use serde::{Deserialize, Serialize};

use crate::energy::{sup_abs, EnergyContext};
use crate::error::{Error, Result};
use crate::lattice::{Field, LatticeSpec};
use crate::model::{check_hypotheses, default_sample_grid, Potential};
use crate::nehari::{golden_max, project_su, solve_su, MAX_BRACKET_STEPS, PROJECTION_TOL};
use crate::{par, rng, sum};

/// Step size below which backtracking gives up.
pub const MIN_STEP: f64 = 1e-14;
/// Relative size of `Psi` differences treated as rounding noise.
pub const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Tolerance on the sup-norm residual, scaled by `max(1, ||u||^{p-1})`.
    pub grad_tol: f64,
    /// Relative per-step decrease of `Psi` counted as a stall.
    pub energy_tol: f64,
    pub step0: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-8,
            energy_tol: 1e-12,
            step0: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            n_starts: 8,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("energy_tol", self.energy_tol),
            ("step0", self.step0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("backtrack", self.backtrack), ("armijo", self.armijo)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if self.n_starts == 0 {
            return Err(Error::Parameter("n_starts must be at least 1".into()));
        }
        Ok(())
    }
}

/// One accepted iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub iter: usize,
    pub psi: f64,
    pub residual: f64,
    /// Nehari scale `s_w` with `m(w) = s_w w`.
    pub s: f64,
    pub step: f64,
}

/// Outcome of one start.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StartSummary {
    pub index: usize,
    pub converged: bool,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub stop: String,
}

/// Best converged start.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub label: String,
    pub seed: u64,
    /// `c = J(u*)`.
    pub energy: f64,
    /// `||u*||`.
    pub norm: f64,
    /// `|<J'(u*), u*>|`.
    pub nehari_residual: f64,
    /// `|<J'(u*), u*>| / ||u*||^p`.
    pub nehari_relative: f64,
    pub pointwise_residual: f64,
    /// `grad_tol * max(1, ||u*||^{p-1})`.
    pub residual_tolerance: f64,
    pub iterations: usize,
    pub winner: usize,
    pub starts: Vec<StartSummary>,
    /// `s_w` at every accepted iterate of the winner.
    pub s_history: Vec<f64>,
    #[serde(skip)]
    pub field: Field,
    #[serde(skip)]
    pub sphere_point: Field,
    #[serde(skip)]
    pub trace: Vec<TracePoint>,
}

/// How an iteration loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stop {
    Converged,
    Stalled,
    MaxIters,
}

struct Run {
    summary: StartSummary,
    w: Field,
    u: Field,
    trace: Vec<TracePoint>,
}

/// State at a point `w` of the sphere.
struct Eval {
    w: Field,
    s: f64,
    psi: f64,
    residual: f64,
    /// Tangent direction `grad - (a.grad / a.a) a`.
    dir: Field,
    norm_u: f64,
}

fn evaluate(ctx: &EnergyContext, w: Field) -> Result<Eval> {
    let profile = ctx.fiber_profile(&w)?;
    let s = solve_su(&profile)?;
    let resid = profile.scaled_phi(s).abs();
    if resid > PROJECTION_TOL * profile.norm_p {
        return Err(Error::ModelViolation(format!(
            "projection residual {resid:e} too large"
        )));
    }
    let u: Vec<f64> = w.values().iter().map(|v| v * s).collect();
    let grad = ctx.grad_raw(&u);
    let a = ctx.principal_raw(w.values());
    let g = Field::new(w.spec(), grad.clone())?;
    let dir = crate::nehari::tangent_project_raw(&a, &g);
    Ok(Eval {
        psi: profile.energy(s),
        residual: sup_abs(&grad),
        norm_u: s * profile.norm_p.powf(1.0 / profile.p),
        s,
        dir,
        w,
    })
}

fn retract(ctx: &EnergyContext, w: &Field, d: &Field, t: f64) -> Option<Field> {
    let v: Vec<f64> = w
        .values()
        .iter()
        .zip(d.values())
        .map(|(a, b)| a - t * b)
        .collect();
    let n = ctx.norm_p_raw(&v);
    if !(n.is_finite() && n > 0.0) {
        return None;
    }
    let inv = 1.0 / n.powf(1.0 / ctx.p());
    Field::new(w.spec(), v.into_iter().map(|x| x * inv).collect()).ok()
}

fn tolerance(ctx: &EnergyContext, cfg: &SolverConfig, norm_u: f64) -> f64 {
    cfg.grad_tol * norm_u.powf(ctx.p() - 1.0).max(1.0)
}

fn descend(ctx: &EnergyContext, cfg: &SolverConfig, index: usize, w0: Field) -> Result<Run> {
    let w0 = crate::nehari::normalize(ctx, &w0);
    let mut cur = evaluate(ctx, w0)?;
    let mut trace = vec![TracePoint {
        iter: 0,
        psi: cur.psi,
        residual: cur.residual,
        s: cur.s,
        step: 0.0,
    }];
    let mut trial = cfg.step0;
    let mut last_decrease = f64::INFINITY;
    let mut stop = Stop::MaxIters;
    let mut iters = 0;

    for it in 1..=cfg.max_iters {
        let tol = tolerance(ctx, cfg, cur.norm_u);
        if cur.residual <= tol && last_decrease <= cfg.energy_tol {
            stop = Stop::Converged;
            break;
        }
        let d2 = sum::dot(cur.dir.values(), cur.dir.values());
        // Directional derivative of Psi along -dir.
        let slope = cur.s * d2;
        let mut t = trial;
        let mut next = None;
        while t >= MIN_STEP {
            if let Some(wt) = retract(ctx, &cur.w, &cur.dir, t) {
                if let Ok(e) = evaluate(ctx, wt) {
                    let predicted = cfg.armijo * t * slope;
                    let floor = NOISE_FLOOR * cur.psi.abs();
                    let armijo = e.psi <= cur.psi - predicted;
                    // Below the rounding floor Psi cannot resolve the
                    // decrease; accept steps that keep Psi level and shrink
                    // the residual.
                    let noisy = predicted < floor
                        && e.psi <= cur.psi + floor
                        && e.residual < cur.residual;
                    if armijo || noisy {
                        next = Some((e, t));
                        break;
                    }
                }
            }
            t *= cfg.backtrack;
        }
        let Some((new, t)) = next else {
            stop = if cur.residual <= tol {
                Stop::Converged
            } else {
                Stop::Stalled
            };
            break;
        };
        assert!(
            new.psi <= cur.psi + NOISE_FLOOR * cur.psi.abs(),
            "line search increased Psi"
        );

        // Barzilai-Borwein trial step from the Euclidean gradients s * dir.
        let dw: Vec<f64> = new
            .w
            .values()
            .iter()
            .zip(cur.w.values())
            .map(|(a, b)| a - b)
            .collect();
        let dy: Vec<f64> = new
            .dir
            .values()
            .iter()
            .zip(cur.dir.values())
            .map(|(a, b)| new.s * a - cur.s * b)
            .collect();
        let sy = sum::dot(&dw, &dy);
        let ss = sum::dot(&dw, &dw);
        trial = if sy > 0.0 && ss > 0.0 {
            (ss / sy * new.s).clamp(1e-10, 1e10)
        } else {
            (2.0 * t).min(1e10)
        };

        last_decrease = (cur.psi - new.psi) / cur.psi.abs().max(f64::MIN_POSITIVE);
        cur = new;
        iters = it;
        trace.push(TracePoint {
            iter: it,
            psi: cur.psi,
            residual: cur.residual,
            s: cur.s,
            step: t,
        });
    }
    if stop == Stop::MaxIters && cur.residual <= tolerance(ctx, cfg, cur.norm_u) {
        stop = Stop::Converged;
    }

    let u = cur.w.scaled(cur.s);
    Ok(Run {
        summary: StartSummary {
            index,
            converged: stop == Stop::Converged,
            energy: cur.psi,
            residual: cur.residual,
            iterations: iters,
            stop: match stop {
                Stop::Converged => "converged",
                Stop::Stalled => "line search stalled",
                Stop::MaxIters => "iteration limit",
            }
            .into(),
        },
        w: cur.w,
        u,
        trace,
    })
}

/// Start 0: 1 at the center, 1/2 at its neighbors.
pub fn bump_start(spec: LatticeSpec) -> Field {
    Field::from_fn(spec, |x| match x.iter().map(|c| c.abs()).sum::<i64>() {
        0 => 1.0,
        1 => 0.5,
        _ => 0.0,
    })
    .expect("finite")
}

/// Initial field of start `index`.
pub fn start_field(spec: LatticeSpec, seed: u64, index: usize) -> Field {
    if index == 0 {
        return bump_start(spec);
    }
    let mut r = rng::stream(seed, index as u64);
    loop {
        let f = rng::decaying_field(spec, &mut r);
        if !f.is_zero() {
            return f;
        }
    }
}

/// Multi-start descent; returns the lowest-energy converged start.
pub fn minimize_ground_state(ctx: &EnergyContext, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    check_hypotheses(ctx.model(), ctx.table(), &default_sample_grid(), cfg.seed)?.into_result()?;
    let spec = ctx.model().lattice;
    let runs: Vec<Result<Run>> = par::map_range(cfg.n_starts, |k| {
        descend(ctx, cfg, k, start_field(spec, cfg.seed, k))
    });
    let mut starts = Vec::with_capacity(runs.len());
    let mut best: Option<Run> = None;
    for (k, run) in runs.into_iter().enumerate() {
        match run {
            Ok(run) => {
                starts.push(run.summary.clone());
                let better = run.summary.converged
                    && best
                        .as_ref()
                        .is_none_or(|b| run.summary.energy < b.summary.energy);
                if better {
                    best = Some(run);
                }
            }
            Err(e) => starts.push(StartSummary {
                index: k,
                converged: false,
                energy: f64::NAN,
                residual: f64::NAN,
                iterations: 0,
                stop: e.to_string(),
            }),
        }
    }
    let Some(best) = best else {
        let diag: Vec<String> = starts
            .iter()
            .map(|s| format!("start {}: {} (residual {:e})", s.index, s.stop, s.residual))
            .collect();
        return Err(Error::NonConvergence(diag.join("; ")));
    };

    let p = ctx.p();
    let norm_p = ctx.h_norm_p(&best.u)?;
    let nehari = ctx.nehari_functional(&best.u)?.abs();
    let residual = ctx.pointwise_residual(&best.u)?;
    let norm = norm_p.powf(1.0 / p);
    Ok(SolveReport {
        label: "ground-state candidate".into(),
        seed: cfg.seed,
        energy: ctx.energy_j(&best.u)?,
        norm,
        nehari_residual: nehari,
        nehari_relative: nehari / norm_p,
        pointwise_residual: residual,
        residual_tolerance: cfg.grad_tol * norm.powf(p - 1.0).max(1.0),
        iterations: best.summary.iterations,
        winner: best.summary.index,
        s_history: best.trace.iter().map(|t| t.s).collect(),
        starts,
        field: best.u,
        sphere_point: best.w,
        trace: best.trace,
    })
}

/// Cross-check of the three characterizations of the ground-state level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCheck {
    /// `J(u*)`.
    pub energy: f64,
    /// Scale with `J(t0 u*) < 0`.
    pub t0: f64,
    /// `J(gamma(0))` for `gamma(s) = s t0 u*`.
    pub path_start: f64,
    /// `J(gamma(1))`.
    pub path_end: f64,
    /// `max_s J(gamma(s))`.
    pub path_max: f64,
    /// Location of the path maximum in units of `u*`.
    pub path_argmax: f64,
    /// `min` over random directions of `max_s J(s u)`.
    pub direction_min: f64,
    pub n_dirs: usize,
}

/// Straight-path and random-direction levels for a solver output.
pub fn mountain_pass_level(
    ctx: &EnergyContext,
    u_star: &Field,
    n_dirs: usize,
    seed: u64,
) -> Result<LevelCheck> {
    let energy = ctx.energy_j(u_star)?;
    let j = |s: f64| ctx.energy_raw(&scale(u_star, s));
    let mut t0 = 2.0;
    let mut steps = 0;
    while j(t0) >= 0.0 {
        t0 *= 2.0;
        steps += 1;
        if steps > MAX_BRACKET_STEPS {
            return Err(Error::ModelViolation(
                "no t0 with J(t0 u*) < 0 within 60 doublings".into(),
            ));
        }
    }
    let (sigma, path_max) = golden_max(|s| j(s * t0), 0.0, 1.0, 1e-12);
    let fiber_maxima: Vec<Result<f64>> = par::map_range(n_dirs, |k| {
        let mut r = rng::stream(seed, 0x4C45_0000 + k as u64);
        let u = crate::rng::uniform_field(ctx.model().lattice, &mut r);
        project_su(ctx, &u, PROJECTION_TOL).map(|p| p.energy)
    });
    let mut direction_min = f64::INFINITY;
    for m in fiber_maxima {
        direction_min = direction_min.min(m?);
    }
    Ok(LevelCheck {
        energy,
        t0,
        path_start: j(0.0),
        path_end: j(t0),
        path_max,
        path_argmax: sigma * t0,
        direction_min,
        n_dirs,
    })
}

fn scale(u: &Field, s: f64) -> Vec<f64> {
    u.values().iter().map(|v| v * s).collect()
}

/// Result of moving a field toward the fundamental cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Centered {
    pub field: Field,
    /// Applied shift: the output is `u(. - shift)`.
    pub shift: Vec<i64>,
    pub applied: bool,
    pub note: String,
}

/// Translates `u` by multiples of the period so that the argmax of `|u|`
/// lands in `[0, T)^N`. Skipped when the support would leave the box.
pub fn center_normalize(u: &Field, potential: &Potential) -> Centered {
    let dim = u.spec().dim();
    let keep = |note: &str| Centered {
        field: u.clone(),
        shift: vec![0; dim],
        applied: false,
        note: note.into(),
    };
    let Some(t) = potential.period() else {
        return keep("potential has no translation symmetry");
    };
    if u.is_zero() {
        return keep("zero field");
    }
    let t = t as i64;
    let (imax, _) = u
        .values()
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    let x = u.spec().point_of(imax);
    let shift: Vec<i64> = x.iter().map(|&c| -c.div_euclid(t) * t).collect();
    if shift.iter().all(|&s| s == 0) {
        return keep("already centered");
    }
    match u.translated(&shift) {
        Some(field) => Centered {
            field,
            shift,
            applied: true,
            note: "translated".into(),
        },
        None => keep("translation skipped: support would leave the box"),
    }
}

/// Witness for the mountain-pass geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryProbe {
    pub rho: f64,
    /// Half the sampled minimum of `J` on the sphere of radius `rho`.
    pub sigma: f64,
    pub sampled_min: f64,
    /// Minimum of `J` over the fresh validation samples.
    pub validation_min: f64,
    pub validation_samples: usize,
    /// `e = t0 w` with `J(e) < 0`.
    pub witness: Field,
    pub witness_norm: f64,
    pub witness_energy: f64,
}

/// Number of fresh samples used to validate `sigma`.
pub const GEOMETRY_VALIDATION: usize = 200;

fn sphere_energies(ctx: &EnergyContext, rho: f64, n: usize, seed: u64, salt: u64) -> Vec<f64> {
    let spec = ctx.model().lattice;
    par::map_range(n, |k| {
        let mut r = rng::stream(seed, salt + k as u64);
        let w = loop {
            let f = rng::uniform_field(spec, &mut r);
            if !f.is_zero() {
                break crate::nehari::normalize(ctx, &f);
            }
        };
        ctx.energy_raw(&scale(&w, rho))
    })
}

/// Finds `rho`, `sigma > 0` with `J >= sigma` on sampled points of norm
/// `rho`, and `e` with `||e|| > rho`, `J(e) < 0`.
pub fn mountain_pass_geometry_probe(
    ctx: &EnergyContext,
    n_samples: usize,
    seed: u64,
) -> Result<GeometryProbe> {
    if n_samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let mut rho = 1.0;
    let (rho, sampled_min) = loop {
        let e = sphere_energies(ctx, rho, n_samples, seed, 0x470_0000);
        let m = e.iter().copied().fold(f64::INFINITY, f64::min);
        if m > 0.0 {
            break (rho, m);
        }
        rho /= 2.0;
        if rho < 1e-4 {
            return Err(Error::ModelViolation(
                "J is not positive on sampled spheres down to rho = 1e-4".into(),
            ));
        }
    };
    let sigma = 0.5 * sampled_min;
    let fresh = sphere_energies(ctx, rho, GEOMETRY_VALIDATION, seed, 0x471_0000);
    let validation_min = fresh.iter().copied().fold(f64::INFINITY, f64::min);

    let mut r = rng::stream(seed, 0x472_0000);
    let dir = loop {
        let f = rng::uniform_field(ctx.model().lattice, &mut r);
        if !f.is_zero() {
            break crate::nehari::normalize(ctx, &f);
        }
    };
    let mut t0 = 2.0 * rho;
    let mut steps = 0;
    while ctx.energy_raw(&scale(&dir, t0)) >= 0.0 {
        t0 *= 2.0;
        steps += 1;
        if steps > MAX_BRACKET_STEPS {
            return Err(Error::ModelViolation("no negative-energy witness found".into()));
        }
    }
    let witness = dir.scaled(t0);
    Ok(GeometryProbe {
        rho,
        sigma,
        sampled_min,
        validation_min,
        validation_samples: GEOMETRY_VALIDATION,
        witness_norm: ctx.h_norm(&witness)?,
        witness_energy: ctx.energy_j(&witness)?,
        witness,
    })
}
