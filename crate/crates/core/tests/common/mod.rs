#![allow(dead_code)]

use std::sync::Arc;

use choquard_lattice::kernel::default_quad_points;
use choquard_lattice::{build_table, EnergyContext, LatticeSpec, ModelSpec, Nonlinearity, Potential};
use statrs::function::gamma::ln_gamma;

pub fn context(model: ModelSpec) -> EnergyContext {
    let m = default_quad_points(model.lattice.dim());
    context_with(model, m)
}

pub fn context_with(model: ModelSpec, quad_points: usize) -> EnergyContext {
    let table = build_table(model.lattice, model.alpha, quad_points).unwrap();
    EnergyContext::new(model, Arc::new(table)).unwrap()
}

pub fn model(dim: usize, r: usize, p: f64, alpha: f64, pot: Potential, terms: &[(f64, f64)]) -> ModelSpec {
    let nl = Nonlinearity::sum_of_powers(
        terms
            .iter()
            .map(|&(a, q)| choquard_lattice::PowerTerm { a, q })
            .collect(),
    )
    .unwrap();
    ModelSpec::new(LatticeSpec::new(dim, r).unwrap(), p, alpha, pot, nl).unwrap()
}

pub fn unit() -> Potential {
    Potential::Constant { h0: 1.0 }
}

/// Closed form of `K_alpha` on `Z`: `Gamma(1 + alpha) / Gamma(1 + alpha/2)^2`.
pub fn k_alpha_1d(alpha: f64) -> f64 {
    (ln_gamma(1.0 + alpha) - 2.0 * ln_gamma(1.0 + alpha / 2.0)).exp()
}

/// Closed form of `R_alpha(d)` on `Z` for `0 < alpha < 1`:
/// `K Gamma(1-alpha) Gamma(d + alpha/2) / (Gamma(alpha/2) Gamma(1-alpha/2) Gamma(d + 1 - alpha/2))`.
pub fn riesz_1d(d: i64, alpha: f64) -> f64 {
    let d = d.unsigned_abs() as f64;
    let ln = ln_gamma(1.0 - alpha) + ln_gamma(d + alpha / 2.0)
        - ln_gamma(alpha / 2.0)
        - ln_gamma(1.0 - alpha / 2.0)
        - ln_gamma(d + 1.0 - alpha / 2.0);
    k_alpha_1d(alpha) * ln.exp()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
