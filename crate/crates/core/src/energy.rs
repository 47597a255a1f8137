//! The norm of `H`, the functional `J`, its gradient and the equation
//! residual.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{ConvolutionMethod, KernelTable};
use crate::lattice::{Field, Stencil};
use crate::model::{eval_f, eval_F, ModelSpec};
use crate::{par, sum};

/// Model, kernel table and cached per-site data.
#[derive(Clone, Debug)]
pub struct EnergyContext {
    model: ModelSpec,
    table: Arc<KernelTable>,
    stencil: Arc<Stencil>,
    potential: Vec<f64>,
    method: ConvolutionMethod,
}

impl EnergyContext {
    /// Rejects a table built for a different box or `alpha`. Hypotheses are
    /// not checked here so that negative controls can be evaluated.
    pub fn new(model: ModelSpec, table: Arc<KernelTable>) -> Result<Self> {
        model.validate()?;
        if table.spec() != model.lattice {
            return Err(Error::Domain(format!(
                "kernel table box {:?} differs from model box {:?}",
                table.spec(),
                model.lattice
            )));
        }
        if table.alpha() != model.alpha {
            return Err(Error::Domain(format!(
                "kernel table alpha {} differs from model alpha {}",
                table.alpha(),
                model.alpha
            )));
        }
        let potential = model.potential_values();
        let stencil = Arc::new(Stencil::new(model.lattice));
        Ok(Self {
            model,
            table,
            stencil,
            potential,
            method: ConvolutionMethod::Auto,
        })
    }

    pub fn with_method(mut self, method: ConvolutionMethod) -> Self {
        self.method = method;
        self
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.potential
    }

    pub fn p(&self) -> f64 {
        self.model.p
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.spec() != self.model.lattice {
            return Err(Error::Domain(format!(
                "field box {:?} differs from model box {:?}",
                u.spec(),
                self.model.lattice
            )));
        }
        Ok(())
    }

    pub(crate) fn convolve(&self, w: &[f64]) -> Vec<f64> {
        match self.method {
            ConvolutionMethod::Auto => self.table.apply(w),
            ConvolutionMethod::Direct => self.table.direct(w),
            ConvolutionMethod::Fft => self.table.fft(w),
        }
    }

    /// `||u||^p` from raw values.
    pub(crate) fn norm_p_raw(&self, u: &[f64]) -> f64 {
        let p = self.p();
        let grad = self.stencil.gradient_p_sum(u, p);
        let pot = sum::pairwise_by(u.len(), &|i| self.potential[i] * u[i].abs().powf(p));
        grad + pot
    }

    /// `-Delta_p w + h |w|^{p-2} w`, the linear-in-test-function part of `J'`.
    pub(crate) fn principal_raw(&self, w: &[f64]) -> Vec<f64> {
        let p = self.p();
        let lap = self.stencil.p_laplacian(w, p);
        lap.iter()
            .zip(w)
            .zip(&self.potential)
            .map(|((l, &x), h)| -l + h * x.abs().powf(p - 2.0) * x)
            .collect()
    }

    fn big_f(&self, u: &[f64]) -> Vec<f64> {
        let nl = &self.model.nonlinearity;
        u.iter().map(|&t| eval_F(nl, t)).collect()
    }

    pub(crate) fn energy_raw(&self, u: &[f64]) -> f64 {
        let big = self.big_f(u);
        let conv = self.convolve(&big);
        self.norm_p_raw(u) / self.p() - 0.5 * sum::dot(&conv, &big)
    }

    pub(crate) fn grad_raw(&self, u: &[f64]) -> Vec<f64> {
        let nl = &self.model.nonlinearity;
        let conv = self.convolve(&self.big_f(u));
        let mut g = self.principal_raw(u);
        for ((gi, &c), &x) in g.iter_mut().zip(&conv).zip(u) {
            *gi -= c * eval_f(nl, x);
        }
        g
    }

    /// `sum (R * F(u)) f(u) u`.
    pub(crate) fn nonlocal_pairing_raw(&self, u: &[f64]) -> f64 {
        let nl = &self.model.nonlinearity;
        let conv = self.convolve(&self.big_f(u));
        sum::pairwise_by(u.len(), &|i| conv[i] * eval_f(nl, u[i]) * u[i])
    }

    pub(crate) fn nehari_raw(&self, u: &[f64]) -> f64 {
        self.norm_p_raw(u) - self.nonlocal_pairing_raw(u)
    }

    /// `||u|| = (sum |grad u|^p + h |u|^p)^{1/p}` over `Z^N`.
    pub fn h_norm(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.norm_p_raw(u.values()).powf(1.0 / self.p()))
    }

    /// `||u||^p`.
    pub fn h_norm_p(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.norm_p_raw(u.values()))
    }

    /// `J(u) = ||u||^p / p - 1/2 sum (R * F(u)) F(u)`.
    pub fn energy_j(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.energy_raw(u.values()))
    }

    /// Components `<J'(u), delta_x>` for every `x` in the box.
    pub fn grad_j(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        Field::new(u.spec(), self.grad_raw(u.values()))
    }

    /// `max_x |-Delta_p u + h|u|^{p-2}u - (R * F(u)) f(u)|` over the box.
    pub fn pointwise_residual(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(sup_abs(&self.grad_raw(u.values())))
    }

    /// `<J'(u), u> = ||u||^p - sum (R * F(u)) f(u) u`.
    pub fn nehari_functional(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.nehari_raw(u.values()))
    }

    /// `D(u) = sum (R * F(u)) F(u)`.
    pub fn nonlocal_energy(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        let big = self.big_f(u.values());
        Ok(sum::dot(&self.convolve(&big), &big))
    }

    /// `A(u) = sum (R * F(u)) f(u) u`.
    pub fn nonlocal_pairing(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.nonlocal_pairing_raw(u.values()))
    }

    /// The pairing `(w, z) = sum |grad w|^{p-2} Gamma(w, z) + h |w|^{p-2} w z`,
    /// evaluated as `sum z (-Delta_p w + h |w|^{p-2} w)`.
    pub fn pairing(&self, w: &Field, z: &Field) -> Result<f64> {
        self.check(w)?;
        self.check(z)?;
        Ok(sum::dot(&self.principal_raw(w.values()), z.values()))
    }

    /// The vector `a` with `(w, z) = a . z` for all `z`.
    pub fn pairing_direction(&self, w: &Field) -> Result<Field> {
        self.check(w)?;
        Field::new(w.spec(), self.principal_raw(w.values()))
    }

    /// Coefficients of `J(su)` and `<J'(su), su>` as polynomials in `s`.
    pub fn fiber_profile(&self, u: &Field) -> Result<FiberProfile> {
        self.check(u)?;
        let v = u.values();
        let terms = self.model.nonlinearity.terms();
        let big: Vec<Vec<f64>> = terms
            .iter()
            .map(|t| v.iter().map(|&x| t.F(x)).collect())
            .collect();
        let small: Vec<Vec<f64>> = terms
            .iter()
            .map(|t| v.iter().map(|&x| t.f(x) * x).collect())
            .collect();
        let convs = par::map_slice(&big, |b| self.convolve(b));
        let mut powers = Vec::with_capacity(terms.len() * terms.len());
        for (i, ti) in terms.iter().enumerate() {
            for (j, tj) in terms.iter().enumerate() {
                powers.push(FiberPower {
                    exponent: ti.q + tj.q,
                    energy: sum::dot(&convs[i], &big[j]),
                    pairing: sum::dot(&convs[i], &small[j]),
                });
            }
        }
        Ok(FiberProfile {
            p: self.p(),
            norm_p: self.norm_p_raw(v),
            powers,
        })
    }
}

pub(crate) fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One `s^{q_i + q_j}` contribution to the fiber polynomials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberPower {
    pub exponent: f64,
    /// `sum (R * F_i(u)) F_j(u)`.
    pub energy: f64,
    /// `sum (R * F_i(u)) f_j(u) u`.
    pub pairing: f64,
}

/// `J(su)` and `phi(s) = <J'(su), su>` in closed form for a fixed `u`,
/// valid because `F(su) = sum_i s^{q_i} F_i(u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberProfile {
    pub p: f64,
    /// `||u||^p`.
    pub norm_p: f64,
    pub powers: Vec<FiberPower>,
}

impl FiberProfile {
    pub fn energy(&self, s: f64) -> f64 {
        let nonlocal: f64 = self.powers.iter().map(|t| s.powf(t.exponent) * t.energy).sum();
        s.powf(self.p) * self.norm_p / self.p - 0.5 * nonlocal
    }

    pub fn phi(&self, s: f64) -> f64 {
        s.powf(self.p) * self.scaled_phi(s)
    }

    /// `phi(s) / s^p`, decreasing in `s` for admissible models.
    pub fn scaled_phi(&self, s: f64) -> f64 {
        let nonlocal: f64 = self
            .powers
            .iter()
            .map(|t| s.powf(t.exponent - self.p) * t.pairing)
            .sum();
        self.norm_p - nonlocal
    }

    /// Total `A(u) = sum (R * F(u)) f(u) u`.
    pub fn pairing_total(&self) -> f64 {
        self.powers.iter().map(|t| t.pairing).sum()
    }

    /// Total `D(u) = sum (R * F(u)) F(u)`.
    pub fn energy_total(&self) -> f64 {
        self.powers.iter().map(|t| t.energy).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_table;
    use crate::lattice::LatticeSpec;
    use crate::model::{Nonlinearity, Potential};

    fn ctx(dim: usize, r: usize, p: f64) -> EnergyContext {
        let model = ModelSpec::new(
            LatticeSpec::new(dim, r).unwrap(),
            p,
            0.5,
            Potential::Constant { h0: 1.0 },
            Nonlinearity::single(1.0, 4.0).unwrap(),
        )
        .unwrap();
        let table = build_table(model.lattice, 0.5, 256).unwrap();
        EnergyContext::new(model, Arc::new(table)).unwrap()
    }

    #[test]
    fn delta_norm() {
        let c = ctx(1, 2, 2.0);
        let d = Field::delta(c.model().lattice, &[0]).unwrap();
        let n = c.h_norm(&d).unwrap();
        assert!((n - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_field() {
        let c = ctx(1, 3, 3.0);
        let z = Field::zeros(c.model().lattice);
        assert_eq!(c.h_norm(&z).unwrap(), 0.0);
        assert_eq!(c.energy_j(&z).unwrap(), 0.0);
        assert!(c.grad_j(&z).unwrap().is_zero());
        assert_eq!(c.pointwise_residual(&z).unwrap(), 0.0);
        assert_eq!(c.nehari_functional(&z).unwrap(), 0.0);
    }

    #[test]
    fn profile_matches_direct() {
        let c = ctx(1, 4, 2.0);
        let u = Field::from_fn(c.model().lattice, |x| 1.0 / (1.0 + (x[0] * x[0]) as f64)).unwrap();
        let prof = c.fiber_profile(&u).unwrap();
        for s in [0.3, 1.0, 2.7] {
            let su = u.scaled(s);
            let j = c.energy_j(&su).unwrap();
            let phi = c.nehari_functional(&su).unwrap();
            assert!((prof.energy(s) - j).abs() <= 1e-13 * j.abs().max(1.0));
            assert!((prof.phi(s) - phi).abs() <= 1e-13 * phi.abs().max(1.0));
        }
    }

    #[test]
    fn mismatched_table() {
        let c = ctx(1, 3, 2.0);
        let other = ModelSpec::constant_single(1, 4, 2.0, 0.5, 4.0);
        let t = Arc::new(c.table().clone());
        assert!(EnergyContext::new(other, t).is_err());
    }
}
