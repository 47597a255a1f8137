//! Sampling and exact checks of the structural inequalities, plus a
//! brute-force ground-state oracle for tiny boxes.

use rand::Rng;
use serde::Serialize;

use crate::energy::EnergyContext;
use crate::error::{Error, Result};
use crate::lattice::{ibp_check, sup_radius, Field, LatticeSpec};
use crate::model::{check_hypotheses, default_sample_grid, eval_F, eval_f, log_grid, Nonlinearity};
use crate::nehari::{bracket, fiber_max_golden, normalize, project_su, PROJECTION_TOL};
use crate::solver::mountain_pass_geometry_probe;
use crate::{par, rng, sum};

/// Result of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// The statement being checked.
    pub anchor: String,
    pub n_samples: usize,
    /// Smallest slack over all samples; negative means violated.
    pub worst_margin: f64,
    pub passed: bool,
    /// Seed that reproduces the samples.
    pub seed: u64,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &str, anchor: &str, n: usize, margin: f64, passed: bool, seed: u64, detail: String) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            n_samples: n,
            worst_margin: margin,
            passed,
            seed,
            detail,
        }
    }
}

fn lp_raw(v: &[f64], r: f64) -> f64 {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s = sum::pairwise_by(v.len(), &|i| (v[i].abs() / m).powf(r));
    m * s.powf(1.0 / r)
}

/// Nonnegative random field supported on a cube of half-width `reach`
/// around a random center that keeps the cube inside the box.
fn bump_sample<R: Rng>(spec: LatticeSpec, reach: i64, rng: &mut R) -> Field {
    let room = spec.radius() as i64 - reach;
    let center: Vec<i64> = (0..spec.dim()).map(|_| rng.random_range(-room..=room)).collect();
    Field::from_fn(spec, |x| {
        let d: Vec<i64> = x.iter().zip(&center).map(|(a, b)| a - b).collect();
        if sup_radius(&d) <= reach {
            rng.random_range(0.0..=1.0)
        } else {
            0.0
        }
    })
    .expect("finite")
}

/// Largest support half-width sampled at index `k`.
fn scale_of(k: usize, spec: LatticeSpec) -> i64 {
    let top = (spec.radius() / 2) as i64;
    (k as i64) % (top + 1)
}

fn stability(name: &str, anchor: &str, ratios: &[(i64, f64)], seed: u64, extra: String) -> CheckReport {
    const GROWTH_LIMIT: f64 = 2.0;
    let n = ratios.len();
    let finite = ratios.iter().all(|(_, r)| r.is_finite() && *r > 0.0);
    let top = ratios.iter().map(|(s, _)| *s).max().unwrap_or(0);
    let mid = top / 2;
    let best = |pred: &dyn Fn(i64) -> bool| {
        ratios
            .iter()
            .filter(|(s, _)| pred(*s))
            .map(|(_, r)| *r)
            .fold(0.0f64, f64::max)
    };
    let low = best(&|s| s <= mid);
    let all = best(&|_| true);
    let growth = all / low;
    let margin = GROWTH_LIMIT - growth;
    CheckReport::new(
        name,
        anchor,
        n,
        margin,
        finite && margin >= 0.0,
        seed,
        format!("empirical sup {all:.6e}; sup over half-widths <= {mid}: {low:.6e}; growth {growth:.4}{extra}"),
    )
}

/// Bilinear form: `sum (R * u) v / (||u||_r ||v||_s)` with
/// `1/r + 1/s + (N - alpha)/N = 2`.
pub fn hls_bilinear(ctx: &EnergyContext, r: f64, s: f64, n: usize, seed: u64) -> Result<CheckReport> {
    let spec = ctx.model().lattice;
    let dim = spec.dim() as f64;
    let alpha = ctx.model().alpha;
    let rel = 1.0 / r + 1.0 / s + (dim - alpha) / dim;
    if !(r > 1.0 && s > 1.0) || (rel - 2.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "need r, s > 1 with 1/r + 1/s + (N-alpha)/N = 2, got r={r}, s={s} (sum {rel})"
        )));
    }
    let ratios = par::map_range(n, |k| {
        let mut g = rng::stream(seed, 0x4853_0000 + k as u64);
        let reach = scale_of(k, spec);
        let u = bump_sample(spec, reach, &mut g);
        let v = bump_sample(spec, reach, &mut g);
        (reach, hls_bilinear_ratio(ctx, &u, &v, r, s))
    });
    let ratios: Vec<(i64, f64)> = ratios.into_iter().filter(|(_, x)| !x.is_nan()).collect();
    Ok(stability(
        "hls_bilinear",
        "discrete HLS inequality, bilinear form",
        &ratios,
        seed,
        format!("; r={r}, s={s}"),
    ))
}

/// `sum (R * u) v / (||u||_r ||v||_s)`; NaN when either field is zero.
pub fn hls_bilinear_ratio(ctx: &EnergyContext, u: &Field, v: &Field, r: f64, s: f64) -> f64 {
    let conv = ctx.convolve(u.values());
    let num = sum::dot(&conv, v.values());
    num / (lp_raw(u.values(), r) * lp_raw(v.values(), s))
}

/// Potential form: `||R * u||_{Nr/(N - alpha r)} / ||u||_r`, `1 < r < N/alpha`.
pub fn hls_potential(ctx: &EnergyContext, r: f64, n: usize, seed: u64) -> Result<CheckReport> {
    let spec = ctx.model().lattice;
    let dim = spec.dim() as f64;
    let alpha = ctx.model().alpha;
    if !(r > 1.0 && r < dim / alpha) {
        return Err(Error::Parameter(format!("need 1 < r < N/alpha = {}, got {r}", dim / alpha)));
    }
    let target = dim * r / (dim - alpha * r);
    let ratios = par::map_range(n, |k| {
        let mut g = rng::stream(seed, 0x4850_0000 + k as u64);
        let reach = scale_of(k, spec);
        let u = bump_sample(spec, reach, &mut g);
        (reach, hls_potential_ratio(ctx, &u, r))
    });
    let ratios: Vec<(i64, f64)> = ratios.into_iter().filter(|(_, x)| !x.is_nan()).collect();
    Ok(stability(
        "hls_potential",
        "discrete HLS inequality, potential form",
        &ratios,
        seed,
        format!("; r={r}, target exponent {target}"),
    ))
}

/// `||R * u||_{Nr/(N - alpha r)} / ||u||_r` with the convolution taken over
/// the box.
pub fn hls_potential_ratio(ctx: &EnergyContext, u: &Field, r: f64) -> f64 {
    let dim = u.spec().dim() as f64;
    let target = dim * r / (dim - ctx.model().alpha * r);
    let conv = ctx.convolve(u.values());
    lp_raw(&conv, target) / lp_raw(u.values(), r)
}

/// Values of `t` used by [`fiber_growth_check`].
pub const GROWTH_FACTORS: [f64; 5] = [1.0, 1.25, 2.0, 5.0, 10.0];

/// `D(tu) >= t^theta D(u)` for `t >= 1` with `D(u) = sum (R * F(u)) F(u)`.
pub fn fiber_growth_check(ctx: &EnergyContext, n: usize, seed: u64) -> Result<CheckReport> {
    const SLACK: f64 = 1e-10;
    let theta = ctx.model().nonlinearity.theta();
    let spec = ctx.model().lattice;
    let margins: Vec<Result<(f64, f64)>> = par::map_range(n, |k| {
        let mut g = rng::stream(seed, 0x4647_0000 + k as u64);
        let u = rng::uniform_field(spec, &mut g);
        let d1 = ctx.nonlocal_energy(&u)?;
        let mut worst = (f64::INFINITY, 1.0);
        for t in GROWTH_FACTORS {
            let dt = ctx.nonlocal_energy(&u.scaled(t))?;
            let rhs = t.powf(theta) * d1;
            let m = (dt - rhs) / rhs;
            if m < worst.0 {
                worst = (m, t);
            }
        }
        Ok(worst)
    });
    let mut worst = (f64::INFINITY, 1.0, 0usize);
    for (k, m) in margins.into_iter().enumerate() {
        let (m, t) = m?;
        if m < worst.0 {
            worst = (m, t, k);
        }
    }
    Ok(CheckReport::new(
        "fiber_growth",
        "D(tu) >= t^theta D(u) for t >= 1",
        n * GROWTH_FACTORS.len(),
        worst.0,
        worst.0 >= -SLACK,
        seed,
        format!("theta = {theta}; tightest at sample {} with t = {}", worst.2, worst.1),
    ))
}

/// `0 <= theta F(t) <= 2 f(t) t` on `grid`, mirrored to negative `t`, plus `t = 0`.
pub fn ar_condition_check(nl: &Nonlinearity, grid: &[f64]) -> CheckReport {
    let theta = nl.theta();
    let mut ts = vec![0.0];
    for &t in grid {
        ts.push(t);
        ts.push(-t);
    }
    let mut worst = f64::INFINITY;
    let mut at = 0.0;
    let mut ok = true;
    for &t in &ts {
        let lhs = theta * eval_F(nl, t);
        let rhs = 2.0 * eval_f(nl, t) * t;
        ok &= lhs >= 0.0 && lhs <= rhs;
        let scale = rhs.abs().max(f64::MIN_POSITIVE);
        let m = if t == 0.0 { lhs.min(rhs - lhs) } else { lhs.min(rhs - lhs) / scale };
        if m < worst {
            worst = m;
            at = t;
        }
    }
    CheckReport::new(
        "ar_condition",
        "0 <= theta F(t) <= 2 f(t) t",
        ts.len(),
        worst,
        ok,
        0,
        format!("theta = {theta}; tightest at t = {at:e}"),
    )
}

/// Points in the uniqueness scan.
pub const SCAN_POINTS: usize = 1024;

/// Sign pattern of `phi` along one ray: `(changes, first is + to -, grid)`.
pub fn phi_sign_changes(ctx: &EnergyContext, u: &Field) -> Result<(usize, bool, f64, f64)> {
    let (lo, hi) = match ctx.fiber_profile(u).and_then(|p| bracket(&p)) {
        Ok((lo, hi)) => (lo / 32.0, hi * 32.0),
        Err(_) => (1e-3, 1e3),
    };
    let grid = log_grid(lo, hi, SCAN_POINTS);
    let phi: Vec<f64> = grid.iter().map(|&s| ctx.nehari_raw(&scaled(u, s))).collect();
    let mut changes = 0;
    let mut first_down = false;
    for w in phi.windows(2) {
        if (w[0] > 0.0) != (w[1] > 0.0) {
            if changes == 0 {
                first_down = w[0] > 0.0;
            }
            changes += 1;
        }
    }
    Ok((changes, first_down, lo, hi))
}

fn scaled(u: &Field, s: f64) -> Vec<f64> {
    u.values().iter().map(|v| v * s).collect()
}

/// Exactly one `+ -> -` sign change of `phi` on a 1024-point log grid for
/// each of `n` random directions.
pub fn su_uniqueness_scan(ctx: &EnergyContext, n: usize, seed: u64) -> Result<CheckReport> {
    let spec = ctx.model().lattice;
    let rows: Vec<Result<(usize, bool)>> = par::map_range(n, |k| {
        let mut g = rng::stream(seed, 0x5355_0000 + k as u64);
        let u = normalize(ctx, &rng::uniform_field(spec, &mut g));
        let (c, down, _, _) = phi_sign_changes(ctx, &u)?;
        Ok((c, down))
    });
    let mut worst = 0.0f64;
    let mut witness = None;
    for (k, row) in rows.into_iter().enumerate() {
        let (c, down) = row?;
        let margin = if c == 1 && down { 0.0 } else { -((c as f64 - 1.0).abs().max(1.0)) };
        if margin < worst {
            worst = margin;
            witness.get_or_insert((k, c));
        }
    }
    let detail = match witness {
        None => "phi changes sign once, from + to -, on every ray".to_string(),
        Some((k, c)) => format!("sample {k} shows {c} sign changes"),
    };
    Ok(CheckReport::new(
        "su_uniqueness",
        "unique s_u > 0 with s_u u on the Nehari manifold",
        n,
        worst,
        witness.is_none(),
        seed,
        detail,
    ))
}

/// Central-difference check of `grad_J`: worst of
/// `|fd - g_x| / max(|g_x|, 1e-3 ||g||_inf)` over all components.
pub fn gradient_check(ctx: &EnergyContext, n: usize, eps: f64, seed: u64) -> Result<CheckReport> {
    let spec = ctx.model().lattice;
    let mut worst = 0.0f64;
    for k in 0..n {
        let mut g = rng::stream(seed, 0x4744_0000 + k as u64);
        let u = rng::uniform_field(spec, &mut g);
        let grad = ctx.grad_j(&u)?;
        let gmax = grad.values().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let errs = par::map_range(spec.site_count(), |i| {
            let mut up = u.values().to_vec();
            let mut dn = up.clone();
            up[i] += eps;
            dn[i] -= eps;
            let fd = (ctx.energy_raw(&up) - ctx.energy_raw(&dn)) / (2.0 * eps);
            let gi = grad.values()[i];
            (fd - gi).abs() / gi.abs().max(1e-3 * gmax)
        });
        worst = errs.into_iter().fold(worst, f64::max);
    }
    const LIMIT: f64 = 1e-5;
    Ok(CheckReport::new(
        "gradient",
        "J'(u) components against central differences",
        n,
        LIMIT - worst,
        worst <= LIMIT,
        seed,
        format!("worst relative component error {worst:e} at eps = {eps:e}, p = {}", ctx.p()),
    ))
}

/// Summation by parts on random pairs with `v` vanishing on the outer shell.
pub fn ibp_sampler(spec: LatticeSpec, p: f64, n: usize, seed: u64) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for k in 0..n {
        let mut g = rng::stream(seed, 0x4942_0000 + k as u64);
        let u = rng::uniform_field(spec, &mut g);
        let v = rng::supported_field(spec, spec.radius() as i64 - 1, &mut g);
        let (lhs, rhs) = ibp_check(&u, &v, p)?;
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    const LIMIT: f64 = 1e-10;
    Ok(CheckReport::new(
        "integration_by_parts",
        "sum |grad u|^{p-2} Gamma(u, v) = -sum (Delta_p u) v",
        n,
        LIMIT - worst,
        worst <= LIMIT,
        seed,
        format!("worst relative mismatch {worst:e}, p = {p}"),
    ))
}

/// `J(u(. - T e_j)) = J(u)` for fields whose shifted support stays in the box.
pub fn translation_check(ctx: &EnergyContext, n: usize, seed: u64) -> Result<Option<CheckReport>> {
    let Some(t) = ctx.model().potential.period() else {
        return Ok(None);
    };
    let spec = ctx.model().lattice;
    let t = t as i64;
    let reach = spec.radius() as i64 - t;
    if reach < 0 {
        return Ok(None);
    }
    let mut worst = 0.0f64;
    for k in 0..n {
        let mut g = rng::stream(seed, 0x5452_0000 + k as u64);
        let u = rng::supported_field(spec, reach, &mut g);
        let j0 = ctx.energy_j(&u)?;
        for axis in 0..spec.dim() {
            for sign in [-1, 1] {
                let mut shift = vec![0; spec.dim()];
                shift[axis] = sign * t;
                let moved = u.translated(&shift).expect("support has room");
                let j1 = ctx.energy_j(&moved)?;
                worst = worst.max((j1 - j0).abs() / j0.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    const LIMIT: f64 = 1e-12;
    Ok(Some(CheckReport::new(
        "translation",
        "J invariant under shifts by the potential period",
        n,
        LIMIT - worst,
        worst <= LIMIT,
        seed,
        format!("period {t}; worst relative change {worst:e}"),
    )))
}

/// Brute-force estimate of the ground-state level on a tiny box.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleEstimate {
    /// Refined minimum of `max_s J(su)`.
    pub value: f64,
    /// Minimum over the random directions before refinement.
    pub scan_min: f64,
    /// Direction attaining `value`, Euclidean-normalized.
    pub direction: Field,
    pub n_dirs: usize,
}

/// Largest box the oracle accepts.
pub const ORACLE_MAX_SITES: usize = 9;

/// `inf_u max_s J(su)`: fiber maxima by golden section over `n_dirs`
/// random directions, then Nelder-Mead from the best 10.
pub fn ground_state_oracle(ctx: &EnergyContext, n_dirs: usize, seed: u64) -> Result<OracleEstimate> {
    let spec = ctx.model().lattice;
    let n = spec.site_count();
    if n > ORACLE_MAX_SITES {
        return Err(Error::Precondition(format!(
            "oracle needs at most {ORACLE_MAX_SITES} sites, box has {n}"
        )));
    }
    let level = |x: &[f64]| -> f64 {
        let norm = sum::dot(x, x).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return f64::INFINITY;
        }
        let f = Field::new(spec, x.iter().map(|v| v / norm).collect()).expect("finite");
        fiber_max_golden(ctx, &f, 1e-10).map_or(f64::INFINITY, |(_, m)| m)
    };
    let scanned: Vec<(f64, Vec<f64>)> = par::map_range(n_dirs, |k| {
        let mut g = rng::stream(seed, 0x4F52_0000 + k as u64);
        let x: Vec<f64> = rng::uniform_field(spec, &mut g).into_values();
        (level(&x), x)
    });
    let mut order: Vec<usize> = (0..scanned.len()).collect();
    order.sort_by(|&a, &b| scanned[a].0.total_cmp(&scanned[b].0).then(a.cmp(&b)));
    let scan_min = scanned[order[0]].0;
    let seeds: Vec<&Vec<f64>> = order.iter().take(10).map(|&i| &scanned[i].1).collect();
    let refined: Vec<(f64, Vec<f64>)> = par::map_slice(&seeds, |x| {
        let mut best = (level(x), (*x).clone());
        for _ in 0..4 {
            let (v, y) = nelder_mead(&level, &best.1, 0.1, 1e-15, 20_000);
            if v < best.0 {
                best = (v, y);
            }
        }
        best
    });
    let (value, x) = refined
        .into_iter()
        .fold((f64::INFINITY, Vec::new()), |a, b| if b.0 < a.0 { b } else { a });
    let norm = sum::dot(&x, &x).sqrt();
    Ok(OracleEstimate {
        value: value.min(scan_min),
        scan_min,
        direction: Field::new(spec, x.iter().map(|v| v / norm).collect())?,
        n_dirs,
    })
}

/// Minimizes `f` from `x0` with a simplex of edge `step`; stops when the
/// spread of simplex values falls below `ftol` relative, or after
/// `max_evals` evaluations.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    ftol: f64,
    max_evals: usize,
) -> (f64, Vec<f64>) {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i].abs() > 1e-3 { step * x[i].abs().max(0.1) } else { step };
        pts.push(x);
    }
    let mut vals: Vec<f64> = pts.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol * vals[0].abs() {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = pts[0]
                        .iter()
                        .zip(&pts[i])
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    vals[i] = f(&pts[i]);
                }
                evals += n;
            }
        }
    }
    let i = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (vals[i], pts[i].clone())
}

/// Samples per check in [`run_suite`].
pub const SUITE_SAMPLES: usize = 50;

/// Every check that applies to the model. Hypothesis verdicts come first.
pub fn run_suite(ctx: &EnergyContext, seed: u64) -> Result<Vec<CheckReport>> {
    let model = ctx.model();
    let spec = model.lattice;
    let dim = spec.dim() as f64;
    let alpha = model.alpha;
    let grid = default_sample_grid();
    let mut out = Vec::new();

    let hyp = check_hypotheses(model, ctx.table(), &grid, seed)?;
    for v in &hyp.verdicts {
        out.push(CheckReport::new(
            &format!("hypothesis_{}", v.hypothesis),
            "structural hypothesis on h or f",
            1,
            if v.holds { 0.0 } else { -1.0 },
            v.holds || !v.required,
            seed,
            format!("{}{}", if v.required { "" } else { "not required: " }, v.detail),
        ));
    }
    let accepted = hyp.accepted();

    out.push(ar_condition_check(&model.nonlinearity, &grid));
    out.push(ibp_sampler(spec, model.p, 20, seed)?);
    out.push(gradient_check(ctx, 3, 1e-6, seed)?);
    let r = 2.0 * dim / (dim + alpha);
    out.push(hls_bilinear(ctx, r, r, SUITE_SAMPLES * 4, seed)?);
    out.push(hls_potential(ctx, 0.5 * (1.0 + dim / alpha), SUITE_SAMPLES * 4, seed)?);
    if let Some(t) = translation_check(ctx, 10, seed)? {
        out.push(t);
    }
    if accepted {
        out.push(fiber_growth_check(ctx, SUITE_SAMPLES, seed)?);
        out.push(su_uniqueness_scan(ctx, SUITE_SAMPLES, seed)?);
        out.push(projection_check(ctx, SUITE_SAMPLES, seed)?);
        out.push(geometry_check(ctx, seed)?);
    }
    Ok(out)
}

/// `m_hat(3u) = m_hat(u)` and `|phi(s_u)|` small on random rays.
pub fn projection_check(ctx: &EnergyContext, n: usize, seed: u64) -> Result<CheckReport> {
    let spec = ctx.model().lattice;
    let mut worst = 0.0f64;
    let mut eta = f64::INFINITY;
    for k in 0..n {
        let mut g = rng::stream(seed, 0x5052_0000 + k as u64);
        let u = rng::uniform_field(spec, &mut g);
        let a = project_su(ctx, &u, PROJECTION_TOL)?;
        let b = project_su(ctx, &u.scaled(3.0), PROJECTION_TOL)?;
        let diff = a.field.values().iter().zip(b.field.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let scale = a.field.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(diff / scale);
        eta = eta.min(a.norm);
    }
    const LIMIT: f64 = 1e-9;
    Ok(CheckReport::new(
        "projection",
        "m_hat(tu) = m_hat(u) for t > 0",
        n,
        LIMIT - worst,
        worst <= LIMIT && eta > 0.0,
        seed,
        format!("worst relative change {worst:e}; smallest ||m_hat(u)|| = {eta:e}"),
    ))
}

/// Mountain-pass geometry as a check.
pub fn geometry_check(ctx: &EnergyContext, seed: u64) -> Result<CheckReport> {
    let g = mountain_pass_geometry_probe(ctx, 200, seed)?;
    let ok = g.sigma > 0.0
        && g.rho > 0.0
        && g.validation_min >= g.sigma
        && g.witness_norm > g.rho
        && g.witness_energy < 0.0;
    Ok(CheckReport::new(
        "geometry",
        "J >= sigma > 0 on the sphere of radius rho and J(e) < 0 beyond it",
        200 + g.validation_samples,
        g.validation_min - g.sigma,
        ok,
        seed,
        format!(
            "rho = {}, sigma = {:e}, fresh minimum {:e}, ||e|| = {:e}, J(e) = {:e}",
            g.rho, g.sigma, g.validation_min, g.witness_norm, g.witness_energy
        ),
    ))
}
