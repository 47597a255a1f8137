//! Fibering maps, the Nehari projection `m`, its inverse, and the sphere
//! functional `Psi = J o m`.

use serde::Serialize;

use crate::energy::{EnergyContext, FiberProfile};
use crate::error::{Error, Result};
use crate::lattice::Field;
use crate::sum;

/// Largest number of doublings or halvings when bracketing `s_u`.
pub const MAX_BRACKET_STEPS: usize = 60;
/// Bisection iteration cap.
pub const MAX_BISECTIONS: usize = 200;
/// Allowed deviation of `||w||` from 1 on the sphere.
pub const SPHERE_TOL: f64 = 1e-8;

/// Samples of `J(su)` and `phi(s)` along a ray.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberProbe {
    pub s: Vec<f64>,
    pub energy: Vec<f64>,
    pub phi: Vec<f64>,
}

impl FiberProbe {
    /// Indices `i` with `phi[i] > 0 >= phi[i+1]` or `phi[i] <= 0 < phi[i+1]`.
    pub fn sign_changes(&self) -> Vec<usize> {
        self.phi
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0] > 0.0) != (w[1] > 0.0))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Nehari projection of a ray.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub s: f64,
    /// `s u`.
    pub field: Field,
    /// `||s u||`.
    pub norm: f64,
    /// `J(s u)`.
    pub energy: f64,
}

fn nonzero(u: &Field) -> Result<()> {
    if u.is_zero() {
        Err(Error::Domain("the zero field has no fiber".into()))
    } else {
        Ok(())
    }
}

/// `phi(s) = <J'(su), su>`, evaluated directly.
pub fn fiber_phi(ctx: &EnergyContext, u: &Field, s: f64) -> Result<f64> {
    nonzero(u)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Parameter(format!("fiber parameter must be positive, got {s}")));
    }
    ctx.nehari_functional(&u.scaled(s))
}

/// `J(su)` and `phi(s)` at each `s`.
pub fn fiber_probe(ctx: &EnergyContext, u: &Field, s: &[f64]) -> Result<FiberProbe> {
    nonzero(u)?;
    let mut energy = Vec::with_capacity(s.len());
    let mut phi = Vec::with_capacity(s.len());
    for &si in s {
        let su = u.scaled(si);
        energy.push(ctx.energy_j(&su)?);
        phi.push(fiber_phi(ctx, u, si)?);
    }
    Ok(FiberProbe {
        s: s.to_vec(),
        energy,
        phi,
    })
}

/// Bracket `[lo, hi]` with `phi(lo) > 0 >= phi(hi)` by doubling or halving
/// from `s = 1`.
pub fn bracket(profile: &FiberProfile) -> Result<(f64, f64)> {
    let g = |s: f64| profile.scaled_phi(s);
    let mut lo = 1.0;
    let mut hi = 1.0;
    if g(1.0) > 0.0 {
        for _ in 0..MAX_BRACKET_STEPS {
            hi *= 2.0;
            if g(hi) <= 0.0 {
                return Ok((hi / 2.0, hi));
            }
        }
        Err(Error::ModelViolation(format!(
            "phi stays positive up to s = {hi:e}; the fiber map does not turn down"
        )))
    } else {
        for _ in 0..MAX_BRACKET_STEPS {
            lo /= 2.0;
            if g(lo) > 0.0 {
                return Ok((lo, lo * 2.0));
            }
        }
        Err(Error::ModelViolation(format!(
            "phi stays non-positive down to s = {lo:e}; the fiber map never rises"
        )))
    }
}

/// The root `s_u` of `phi`, to full double precision by bisection.
pub fn solve_su(profile: &FiberProfile) -> Result<f64> {
    let (mut lo, mut hi) = bracket(profile)?;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if profile.scaled_phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = if profile.scaled_phi(lo).abs() <= profile.scaled_phi(hi).abs() {
        lo
    } else {
        hi
    };
    Ok(best)
}

/// `m_hat(u) = s_u u` with `|phi(s_u)| <= tol s_u^p ||u||^p`.
pub fn project_su(ctx: &EnergyContext, u: &Field, tol: f64) -> Result<Projection> {
    nonzero(u)?;
    let profile = ctx.fiber_profile(u)?;
    let s = solve_su(&profile)?;
    let resid = profile.scaled_phi(s).abs();
    if resid > tol * profile.norm_p {
        return Err(Error::ModelViolation(format!(
            "projection residual {resid:e} exceeds {tol:e} * ||u||^p ({:e})",
            profile.norm_p
        )));
    }
    let field = u.scaled(s);
    let norm = s * profile.norm_p.powf(1.0 / profile.p);
    Ok(Projection {
        s,
        energy: profile.energy(s),
        norm,
        field,
    })
}

/// Default projection tolerance.
pub const PROJECTION_TOL: f64 = 1e-12;

/// `m(w)` for `w` on the unit sphere.
pub fn m_map(ctx: &EnergyContext, w: &Field) -> Result<Projection> {
    require_sphere(ctx, w)?;
    project_su(ctx, w, PROJECTION_TOL)
}

/// `u / ||u||` for `u` on the Nehari manifold, `|<J'(u), u>| <= tol ||u||^p`.
pub fn m_inverse(ctx: &EnergyContext, u: &Field, tol: f64) -> Result<Field> {
    nonzero(u)?;
    let norm_p = ctx.h_norm_p(u)?;
    let nehari = ctx.nehari_functional(u)?;
    if nehari.abs() > tol * norm_p {
        return Err(Error::Domain(format!(
            "field is off the Nehari manifold: <J'(u),u> = {nehari:e}, ||u||^p = {norm_p:e}"
        )));
    }
    Ok(normalize(ctx, u))
}

/// Radial retraction `u / ||u||`.
pub fn normalize(ctx: &EnergyContext, u: &Field) -> Field {
    let n = ctx.norm_p_raw(u.values()).powf(1.0 / ctx.p());
    u.scaled(1.0 / n)
}

fn require_sphere(ctx: &EnergyContext, w: &Field) -> Result<()> {
    nonzero(w)?;
    let n = ctx.h_norm(w)?;
    if (n - 1.0).abs() > SPHERE_TOL {
        return Err(Error::Domain(format!("expected ||w|| = 1, got {n}")));
    }
    Ok(())
}

/// `Psi(w) = J(m(w))`.
pub fn psi(ctx: &EnergyContext, w: &Field) -> Result<f64> {
    Ok(m_map(ctx, w)?.energy)
}

/// `<Psi'(w), z> = ||m(w)|| <J'(m(w)), z>` for `z` tangent at `w`.
pub fn psi_grad_pairing(ctx: &EnergyContext, w: &Field, z: &Field) -> Result<f64> {
    let proj = m_map(ctx, w)?;
    let a = ctx.pairing_direction(w)?;
    let along = a.dot(z)?;
    let scale = sum::dot(a.values(), a.values()).sqrt() * sum::dot(z.values(), z.values()).sqrt();
    if along.abs() > 1e-8 * scale {
        return Err(Error::Precondition(format!(
            "direction is not tangent: (w, z) = {along:e}"
        )));
    }
    let g = ctx.grad_j(&proj.field)?;
    Ok(proj.norm * g.dot(z)?)
}

/// Removes the component of `g` along the pairing normal `a = A(w)`:
/// `g - (a.g / a.a) a`, so that `(w, result) = 0`.
pub fn tangent_project(ctx: &EnergyContext, w: &Field, g: &Field) -> Result<Field> {
    let a = ctx.pairing_direction(w)?;
    Ok(tangent_project_raw(a.values(), g))
}

pub(crate) fn tangent_project_raw(a: &[f64], g: &Field) -> Field {
    let c = sum::dot(a, g.values()) / sum::dot(a, a);
    let v = g.values().iter().zip(a).map(|(gi, ai)| gi - c * ai).collect();
    Field::new(g.spec(), v).expect("finite projection")
}

/// Maximizer of a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if hi - lo <= rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `max_s J(su)` by golden-section search on direct evaluations of `J`.
/// Returns `(argmax, max)`.
pub fn fiber_max_golden(ctx: &EnergyContext, u: &Field, rel_tol: f64) -> Result<(f64, f64)> {
    nonzero(u)?;
    let j = |s: f64| ctx.energy_raw(&scaled_values(u, s));
    // Grow the upper end until J is negative, which puts the maximum inside.
    let mut hi = 1.0;
    let mut steps = 0;
    while j(hi) >= 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > MAX_BRACKET_STEPS {
            return Err(Error::ModelViolation("J(su) stays non-negative as s grows".into()));
        }
    }
    Ok(golden_max(j, 0.0, hi, rel_tol))
}

fn scaled_values(u: &Field, s: f64) -> Vec<f64> {
    u.values().iter().map(|v| v * s).collect()
}
