//! Potentials, nonlinearities, and the admissibility predicates (h1)-(h3),
//! (f1)-(f4).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::lattice::{Field, LatticeSpec};
use crate::{rng, sum};

/// External potential `h` on `Z^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Potential {
    Constant {
        h0: f64,
    },
    /// `T`-periodic in every axis; `cell` holds `h` on `[0, T)^N` in
    /// row-major order.
    Periodic {
        period: usize,
        cell: Vec<f64>,
    },
    /// `h0 + c * |x - x0|^beta` with `|.|` the l1 graph distance.
    Coercive {
        h0: f64,
        center: Vec<i64>,
        coefficient: f64,
        exponent: f64,
    },
}

impl Potential {
    /// The lower bound `h0` that the potential claims.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Potential::Constant { h0 } | Potential::Coercive { h0, .. } => *h0,
            Potential::Periodic { cell, .. } => cell.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Translation period, if any. Constants are periodic with `T = 1`.
    pub fn period(&self) -> Option<usize> {
        match self {
            Potential::Constant { .. } => Some(1),
            Potential::Periodic { period, .. } => Some(*period),
            Potential::Coercive { .. } => None,
        }
    }

    /// Parameter sanity independent of any box.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        match self {
            Potential::Constant { h0 } => {
                if !(h0.is_finite() && *h0 > 0.0) {
                    return bad(format!("constant potential must be positive, got {h0}"));
                }
            }
            Potential::Periodic { period, cell } => {
                if *period == 0 {
                    return bad("period must be at least 1".into());
                }
                let want = period.checked_pow(dim as u32);
                if want != Some(cell.len()) {
                    return bad(format!(
                        "periodic cell needs T^N = {} values, got {}",
                        want.map_or("overflow".to_string(), |w| w.to_string()),
                        cell.len()
                    ));
                }
                if cell.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                    return bad("periodic cell values must be positive and finite".into());
                }
            }
            Potential::Coercive {
                h0,
                center,
                coefficient,
                exponent,
            } => {
                if !(h0.is_finite() && *h0 > 0.0) {
                    return bad(format!("coercive h0 must be positive, got {h0}"));
                }
                if center.len() != dim {
                    return bad(format!("center has {} coordinates, dim is {dim}", center.len()));
                }
                if !(coefficient.is_finite() && *coefficient > 0.0) {
                    return bad(format!("coercive coefficient must be positive, got {coefficient}"));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return bad(format!("coercive exponent must be positive, got {exponent}"));
                }
            }
        }
        Ok(())
    }
}

/// `h(x)`.
pub fn eval_potential(pot: &Potential, x: &[i64]) -> f64 {
    match pot {
        Potential::Constant { h0 } => *h0,
        Potential::Periodic { period, cell } => {
            let t = *period as i64;
            let idx = x
                .iter()
                .fold(0usize, |acc, &c| acc * *period + c.rem_euclid(t) as usize);
            cell[idx]
        }
        Potential::Coercive {
            h0,
            center,
            coefficient,
            exponent,
        } => {
            let dist: i64 = x.iter().zip(center).map(|(a, b)| (a - b).abs()).sum();
            h0 + coefficient * (dist as f64).powf(*exponent)
        }
    }
}

/// One term `a |t|^{q-2} t` of a sum-of-powers nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub a: f64,
    pub q: f64,
}

impl PowerTerm {
    pub fn f(&self, t: f64) -> f64 {
        self.a * t.abs().powf(self.q - 2.0) * t
    }

    #[allow(non_snake_case)]
    pub fn F(&self, t: f64) -> f64 {
        self.a / self.q * t.abs().powf(self.q)
    }
}

/// `f(t) = sum a_i |t|^{q_i - 2} t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    terms: Vec<PowerTerm>,
}

impl Nonlinearity {
    pub fn sum_of_powers(terms: Vec<PowerTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Parameter("nonlinearity needs at least one term".into()));
        }
        for t in &terms {
            if !(t.a.is_finite() && t.a > 0.0) {
                return Err(Error::Parameter(format!("coefficient a must be positive, got {}", t.a)));
            }
            if !(t.q.is_finite() && t.q > 1.0) {
                return Err(Error::Parameter(format!("exponent q must exceed 1, got {}", t.q)));
            }
        }
        Ok(Self { terms })
    }

    pub fn single(a: f64, q: f64) -> Result<Self> {
        Self::sum_of_powers(vec![PowerTerm { a, q }])
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    /// `theta = min q_i`.
    pub fn theta(&self) -> f64 {
        self.terms.iter().map(|t| t.q).fold(f64::INFINITY, f64::min)
    }

    /// Growth exponent `max q_i`.
    pub fn tau_growth(&self) -> f64 {
        self.terms.iter().map(|t| t.q).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Growth constant: `|f(t)| <= C (1 + |t|^{tau - 1})` with `C = sum a_i`.
    pub fn growth_constant(&self) -> f64 {
        self.terms.iter().map(|t| t.a).sum()
    }
}

pub fn eval_f(nl: &Nonlinearity, t: f64) -> f64 {
    nl.terms.iter().map(|k| k.f(t)).sum()
}

#[allow(non_snake_case)]
pub fn eval_F(nl: &Nonlinearity, t: f64) -> f64 {
    nl.terms.iter().map(|k| k.F(t)).sum()
}

/// Full problem data: box, exponents, potential, nonlinearity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub lattice: LatticeSpec,
    pub p: f64,
    pub alpha: f64,
    pub potential: Potential,
    pub nonlinearity: Nonlinearity,
}

impl ModelSpec {
    /// Range checks on `p`, `alpha` and the parameters. Hypothesis checks
    /// live in [`structural_report`] and [`check_hypotheses`].
    pub fn new(
        lattice: LatticeSpec,
        p: f64,
        alpha: f64,
        potential: Potential,
        nonlinearity: Nonlinearity,
    ) -> Result<Self> {
        let spec = Self {
            lattice,
            p,
            alpha,
            potential,
            nonlinearity,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lattice.dim() as f64;
        if !(self.p.is_finite() && self.p >= 2.0) {
            return Err(Error::Parameter(format!("p must be at least 2, got {}", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < n) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, N) = (0, {n}), got {}",
                self.alpha
            )));
        }
        self.potential.validate(self.lattice.dim())?;
        Nonlinearity::sum_of_powers(self.nonlinearity.terms.clone()).map(|_| ())
    }

    /// `N=1, r=8, p=2, alpha=0.5, h = 1, f(t) = |t|^2 t`.
    pub fn default_1d() -> Self {
        Self::constant_single(1, 8, 2.0, 0.5, 4.0)
    }

    /// `N=2, r=6, p=3, alpha=1, h = 1, f(t) = |t|^2 t`.
    pub fn default_2d() -> Self {
        Self::constant_single(2, 6, 3.0, 1.0, 4.0)
    }

    /// Constant potential `h = 1` and a single unit power term.
    pub fn constant_single(dim: usize, radius: usize, p: f64, alpha: f64, q: f64) -> Self {
        Self::new(
            LatticeSpec::new(dim, radius).expect("valid lattice"),
            p,
            alpha,
            Potential::Constant { h0: 1.0 },
            Nonlinearity::single(1.0, q).expect("valid term"),
        )
        .expect("valid model")
    }

    /// `(N + alpha) p / (2N)`, the lower growth threshold.
    pub fn growth_threshold(&self) -> f64 {
        let n = self.lattice.dim() as f64;
        (n + self.alpha) * self.p / (2.0 * n)
    }

    /// `h` on every site of the box, in index order.
    pub fn potential_values(&self) -> Vec<f64> {
        self.lattice
            .points()
            .map(|x| eval_potential(&self.potential, &x))
            .collect()
    }
}

/// Outcome for a single hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub hypothesis: String,
    pub holds: bool,
    /// Whether acceptance needs this hypothesis.
    pub required: bool,
    pub detail: String,
}

/// Per-hypothesis verdicts for a model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub verdicts: Vec<Verdict>,
}

impl HypothesisReport {
    pub fn accepted(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.required && !v.holds)
    }

    pub fn get(&self, hypothesis: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.hypothesis == hypothesis)
    }

    /// `Err(ModelRejected)` naming every failing required hypothesis.
    pub fn into_result(self) -> Result<Self> {
        let failed: Vec<&Verdict> = self
            .verdicts
            .iter()
            .filter(|v| v.required && !v.holds)
            .collect();
        if failed.is_empty() {
            return Ok(self);
        }
        Err(Error::ModelRejected {
            hypothesis: failed.iter().map(|v| v.hypothesis.as_str()).collect::<Vec<_>>().join(", "),
            detail: failed.iter().map(|v| v.detail.as_str()).collect::<Vec<_>>().join("; "),
        })
    }
}

/// `10^-4 .. 10^2`, eight points per decade.
pub fn default_sample_grid() -> Vec<f64> {
    log_grid(1e-4, 1e2, 49)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn verdict(hypothesis: &str, holds: bool, required: bool, detail: String) -> Verdict {
    Verdict {
        hypothesis: hypothesis.into(),
        holds,
        required,
        detail,
    }
}

/// Verdicts for (h1)-(h3) and (f1)-(f3); these need no kernel.
pub fn structural_report(spec: &ModelSpec, grid: &[f64]) -> Result<HypothesisReport> {
    spec.validate()?;
    if grid.is_empty() || grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Parameter("sample grid must hold positive finite values".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(7);
    out.extend(potential_verdicts(spec));
    out.extend(nonlinearity_verdicts(spec, &grid));
    Ok(HypothesisReport { verdicts: out })
}

fn potential_verdicts(spec: &ModelSpec) -> Vec<Verdict> {
    let lat = spec.lattice;
    let pot = &spec.potential;
    let h0 = pot.lower_bound();
    let values = spec.potential_values();
    let hmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let h1 = verdict(
        "h1",
        h0 > 0.0 && hmin >= h0,
        true,
        format!("min over box {hmin:e}, h0 {h0:e}"),
    );

    let h2 = match pot.period() {
        Some(t) => {
            let t = t as i64;
            let mut worst = 0.0f64;
            for x in lat.points() {
                for j in 0..lat.dim() {
                    let mut y = x.clone();
                    y[j] += t;
                    if lat.contains(&y) {
                        let d = (eval_potential(pot, &x) - eval_potential(pot, &y)).abs();
                        worst = worst.max(d);
                    }
                }
            }
            verdict(
                "h2",
                worst == 0.0,
                !matches!(pot, Potential::Coercive { .. }),
                format!("period {t}, largest |h(x+Te_j)-h(x)| = {worst:e}"),
            )
        }
        None => verdict("h2", false, false, "potential is not periodic".into()),
    };

    let h3 = match pot {
        Potential::Coercive { center, .. } => {
            // Moving one step away from x0 along any axis must not lower h.
            let mut violations = 0usize;
            for x in lat.points() {
                for j in 0..lat.dim() {
                    let step = if x[j] >= center[j] { 1 } else { -1 };
                    let mut y = x.clone();
                    y[j] += step;
                    if lat.contains(&y) && eval_potential(pot, &y) < eval_potential(pot, &x) {
                        violations += 1;
                    }
                }
            }
            verdict(
                "h3",
                violations == 0,
                true,
                format!("{violations} outward steps decrease h"),
            )
        }
        _ => verdict("h3", false, false, "potential is not coercive".into()),
    };
    vec![h1, h2, h3]
}

fn nonlinearity_verdicts(spec: &ModelSpec, grid: &[f64]) -> Vec<Verdict> {
    let nl = &spec.nonlinearity;
    let p = spec.p;
    let theta = nl.theta();
    let tau = nl.tau_growth();

    // (f1): f(t)/|t|^{p-1} must shrink as t decreases toward 0.
    let ratios: Vec<f64> = grid
        .iter()
        .map(|&t| eval_f(nl, t).abs() / t.powf(p - 1.0))
        .collect();
    let shrinking = ratios.windows(2).all(|w| w[0] < w[1]);
    let f1 = verdict(
        "f1",
        theta > p && shrinking,
        true,
        format!(
            "min q {theta} vs p {p}; f(t)/t^(p-1) at t={:e} is {:e}",
            grid[0], ratios[0]
        ),
    );

    // (f2): subcritical-from-below growth with the explicit constant.
    let c = nl.growth_constant();
    let bounded = grid.iter().all(|&t| {
        let lhs = eval_f(nl, t).abs();
        lhs <= c * (1.0 + t.powf(tau - 1.0)) * (1.0 + 1e-14)
    });
    let threshold = spec.growth_threshold();
    let f2 = verdict(
        "f2",
        tau > threshold && bounded,
        true,
        format!("max q {tau} vs (N+alpha)p/(2N) = {threshold}, C = {c}"),
    );

    // (f3): 0 <= theta F(t) <= 2 f(t) t on both signs.
    let ar_ok = grid.iter().all(|&t| {
        [t, -t].iter().all(|&s| {
            let lhs = theta * eval_F(nl, s);
            let rhs = 2.0 * eval_f(nl, s) * s;
            lhs >= 0.0 && lhs <= rhs * (1.0 + 1e-14)
        })
    });
    let f3 = verdict(
        "f3",
        theta > p && ar_ok,
        true,
        format!("theta = {theta} must exceed p = {p}"),
    );
    vec![f1, f2, f3]
}

/// Number of random fields in the (f4) sampler.
pub const F4_FIELDS: usize = 8;
/// Number of log-spaced `t` values in the (f4) sampler.
pub const F4_POINTS: usize = 64;

/// `t^{-p} sum (R * F(tu)) f(tu) u` for each `t`.
pub fn f4_ratio(spec: &ModelSpec, table: &KernelTable, u: &Field, ts: &[f64]) -> Vec<f64> {
    let nl = &spec.nonlinearity;
    ts.iter()
        .map(|&t| {
            let big: Vec<f64> = u.values().iter().map(|&v| eval_F(nl, t * v)).collect();
            let conv = table.apply(&big);
            let terms: Vec<f64> = u
                .values()
                .iter()
                .zip(&conv)
                .map(|(&v, &c)| c * eval_f(nl, t * v) * v)
                .collect();
            sum::pairwise(&terms) / t.powf(spec.p)
        })
        .collect()
}

/// The (f4) sampler: strict increase of [`f4_ratio`] on `F4_POINTS`
/// log-spaced `t` in `[1e-2, 1e2]` for `F4_FIELDS` random `u`.
pub fn f4_verdict(spec: &ModelSpec, table: &KernelTable, seed: u64) -> Verdict {
    let ts = log_grid(1e-2, 1e2, F4_POINTS);
    let mut failures = 0usize;
    let mut first = String::new();
    for k in 0..F4_FIELDS {
        let mut r = rng::stream(seed, 0xF4_0000 + k as u64);
        let u = rng::uniform_field(spec.lattice, &mut r);
        let g = f4_ratio(spec, table, &u, &ts);
        if let Some(i) = g.windows(2).position(|w| !(w[1] > w[0])) {
            failures += 1;
            if first.is_empty() {
                first = format!("; sample {k} stops increasing at t={:e}", ts[i + 1]);
            }
        }
    }
    verdict(
        "f4",
        failures == 0,
        true,
        format!("{failures}/{F4_FIELDS} random fields non-increasing{first}"),
    )
}

/// All verdicts; the table must match the model's box and `alpha`.
pub fn check_hypotheses(
    spec: &ModelSpec,
    table: &KernelTable,
    grid: &[f64],
    seed: u64,
) -> Result<HypothesisReport> {
    if table.spec() != spec.lattice || table.alpha() != spec.alpha {
        return Err(Error::Domain("kernel table does not match the model".into()));
    }
    let mut report = structural_report(spec, grid)?;
    report.verdicts.push(f4_verdict(spec, table, seed));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_values() {
        assert_eq!(eval_potential(&Potential::Constant { h0: 1.0 }, &[5]), 1.0);
        let per = Potential::Periodic {
            period: 2,
            cell: vec![1.0, 3.0],
        };
        assert_eq!(eval_potential(&per, &[0]), 1.0);
        assert_eq!(eval_potential(&per, &[1]), 3.0);
        assert_eq!(eval_potential(&per, &[2]), 1.0);
        assert_eq!(eval_potential(&per, &[-1]), 3.0);
        let co = Potential::Coercive {
            h0: 1.0,
            center: vec![0, 0],
            coefficient: 1.0,
            exponent: 2.0,
        };
        assert_eq!(eval_potential(&co, &[2, 0]), 5.0);
    }

    #[test]
    fn power_values() {
        let nl = Nonlinearity::single(1.0, 4.0).unwrap();
        assert_eq!(eval_f(&nl, 2.0), 8.0);
        assert_eq!(eval_F(&nl, 2.0), 4.0);
        assert_eq!(eval_f(&nl, 0.0), 0.0);
        assert_eq!(eval_F(&nl, 0.0), 0.0);
        assert_eq!(eval_f(&nl, -2.0), -8.0);
    }

    #[test]
    fn thresholds() {
        let mk = |q: f64| {
            ModelSpec::new(
                LatticeSpec::new(2, 2).unwrap(),
                2.0,
                1.0,
                Potential::Constant { h0: 1.0 },
                Nonlinearity::single(1.0, q).unwrap(),
            )
            .unwrap()
        };
        let grid = default_sample_grid();
        let rej = structural_report(&mk(2.0), &grid).unwrap();
        assert!(!rej.accepted());
        assert_eq!(rej.first_failure().unwrap().hypothesis, "f1");
        assert!(!rej.get("f3").unwrap().holds);
        let acc = structural_report(&mk(3.0), &grid).unwrap();
        assert!(acc.accepted(), "{acc:?}");
    }

    #[test]
    fn alpha_range() {
        let err = ModelSpec::new(
            LatticeSpec::new(1, 2).unwrap(),
            2.0,
            1.0,
            Potential::Constant { h0: 1.0 },
            Nonlinearity::single(1.0, 4.0).unwrap(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("alpha must lie in (0, N)"));
    }

    #[test]
    fn periodic_cell_shape() {
        let pot = Potential::Periodic {
            period: 2,
            cell: vec![1.0, 2.0, 3.0],
        };
        assert!(pot.validate(2).is_err());
        let pot = Potential::Periodic {
            period: 2,
            cell: vec![1.0, 2.0, 3.0, 4.0],
        };
        assert!(pot.validate(2).is_ok());
    }

    #[test]
    fn coercive_is_h3_not_h2() {
        let spec = ModelSpec::new(
            LatticeSpec::new(2, 3).unwrap(),
            2.0,
            1.0,
            Potential::Coercive {
                h0: 1.0,
                center: vec![1, 0],
                coefficient: 0.5,
                exponent: 1.5,
            },
            Nonlinearity::single(1.0, 4.0).unwrap(),
        )
        .unwrap();
        let rep = structural_report(&spec, &default_sample_grid()).unwrap();
        assert!(rep.accepted());
        assert!(rep.get("h3").unwrap().holds);
        assert!(!rep.get("h2").unwrap().holds);
    }
}
