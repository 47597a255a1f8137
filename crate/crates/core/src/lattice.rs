//! Truncated integer lattice, fields on it, and the discrete calculus.
//!
//! The box is `B = {x in Z^N : max_j |x_j| <= r}`. Fields live on `B` and
//! read as zero everywhere else, so every sum over `Z^N` reduces to a finite
//! sum over `B` plus, for gradient terms, the one-site layer just outside it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

/// Marker for a neighbor slot that falls outside the box.
pub const EXTERIOR: usize = usize::MAX;

/// Dimension and radius of the box `{-r..=r}^N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    dim: usize,
    radius: usize,
}

impl LatticeSpec {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if radius == 0 {
            return Err(Error::Parameter("radius must be at least 1".into()));
        }
        let side = 2 * radius + 1;
        let fits = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(side));
        match fits {
            Some(n) if n <= (1usize << 31) => Ok(Self { dim, radius }),
            _ => Err(Error::Parameter(format!(
                "box with dim={dim}, radius={radius} is too large"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Points per axis, `2r + 1`.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn site_count(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let r = self.radius as i64;
        x.len() == self.dim && x.iter().all(|&c| -r <= c && c <= r)
    }

    /// Row-major index with coordinates shifted by `+r`; `None` outside `B`.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let r = self.radius as i64;
        let side = self.side();
        Some(x.iter().fold(0usize, |acc, &c| acc * side + (c + r) as usize))
    }

    pub fn point_of(&self, index: usize) -> Vec<i64> {
        let mut x = vec![0i64; self.dim];
        self.write_point(index, &mut x);
        x
    }

    pub(crate) fn write_point(&self, mut index: usize, out: &mut [i64]) {
        let side = self.side();
        let r = self.radius as i64;
        for c in out.iter_mut().rev() {
            *c = (index % side) as i64 - r;
            index /= side;
        }
    }

    /// All sites of `B` in index order.
    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.site_count()).map(move |i| self.point_of(i))
    }

    /// `x - e_j` and `x + e_j` for `j = 1..N`, including points outside `B`.
    pub fn neighbors(&self, x: &[i64]) -> Result<Vec<Vec<i64>>> {
        self.require(x)?;
        let mut out = Vec::with_capacity(2 * self.dim);
        for j in 0..self.dim {
            for step in [-1i64, 1] {
                let mut y = x.to_vec();
                y[j] += step;
                out.push(y);
            }
        }
        Ok(out)
    }

    pub(crate) fn require(&self, x: &[i64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Domain(format!(
                "point {x:?} has {} coordinates, lattice has dimension {}",
                x.len(),
                self.dim
            )));
        }
        if !self.contains(x) {
            return Err(Error::Domain(format!(
                "point {x:?} lies outside the box of radius {}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// `max_j |x_j|`.
pub fn sup_radius(x: &[i64]) -> i64 {
    x.iter().map(|c| c.abs()).max().unwrap_or(0)
}

/// Precomputed neighbor indices for every site of a box.
#[derive(Clone, Debug)]
pub struct Stencil {
    spec: LatticeSpec,
    /// `2N` entries per site in the order `-e_1, +e_1, -e_2, ...`.
    neighbors: Vec<usize>,
    /// Number of neighbors outside the box, per site.
    exposure: Vec<u8>,
}

impl Stencil {
    pub fn new(spec: LatticeSpec) -> Self {
        let n = spec.site_count();
        let deg = 2 * spec.dim();
        let side = spec.side();
        let mut neighbors = vec![EXTERIOR; n * deg];
        let mut exposure = vec![0u8; n];
        let mut x = vec![0i64; spec.dim()];
        let r = spec.radius() as i64;
        for i in 0..n {
            spec.write_point(i, &mut x);
            for j in 0..spec.dim() {
                let stride = side.pow((spec.dim() - 1 - j) as u32);
                let slot = i * deg + 2 * j;
                if x[j] > -r {
                    neighbors[slot] = i - stride;
                } else {
                    exposure[i] += 1;
                }
                if x[j] < r {
                    neighbors[slot + 1] = i + stride;
                } else {
                    exposure[i] += 1;
                }
            }
        }
        Self {
            spec,
            neighbors,
            exposure,
        }
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn degree(&self) -> usize {
        2 * self.spec.dim()
    }

    pub fn neighbors_of(&self, i: usize) -> &[usize] {
        let deg = self.degree();
        &self.neighbors[i * deg..(i + 1) * deg]
    }

    /// Number of lattice neighbors of site `i` that lie outside the box.
    pub fn exposure(&self, i: usize) -> usize {
        self.exposure[i] as usize
    }

    /// `Gamma(u)(x)` at every site of `B`.
    pub fn gamma_all(&self, u: &[f64]) -> Vec<f64> {
        (0..u.len())
            .map(|i| {
                let ux = u[i];
                let s: f64 = self
                    .neighbors_of(i)
                    .iter()
                    .map(|&y| {
                        let d = if y == EXTERIOR { -ux } else { u[y] - ux };
                        d * d
                    })
                    .sum();
                0.5 * s
            })
            .collect()
    }

    /// `sum over Z^N of |grad u|^p`, including the exterior layer where
    /// `|grad u|(y) = |u(x)| / sqrt(2)` for the unique neighbor `x` in `B`.
    pub fn gradient_p_sum(&self, u: &[f64], p: f64) -> f64 {
        let gamma = self.gamma_all(u);
        let site = |i: usize| {
            let inner = gamma[i].powf(p / 2.0);
            let k = self.exposure(i);
            if k == 0 {
                inner
            } else {
                inner + k as f64 * (0.5 * u[i] * u[i]).powf(p / 2.0)
            }
        };
        sum::pairwise_by(u.len(), &site)
    }

    /// `Delta_p u` on `B` with zero extension, `p >= 2`.
    pub fn p_laplacian(&self, u: &[f64], p: f64) -> Vec<f64> {
        let gamma = self.gamma_all(u);
        let e = (p - 2.0) / 2.0;
        // |grad u|^{p-2}; 0^0 = 1 keeps p = 2 the plain Laplacian.
        let weight: Vec<f64> = gamma.iter().map(|g| g.powf(e)).collect();
        (0..u.len())
            .map(|i| {
                let ux = u[i];
                let wx = weight[i];
                let s: f64 = self
                    .neighbors_of(i)
                    .iter()
                    .map(|&y| {
                        if y == EXTERIOR {
                            let wy = (0.5 * ux * ux).powf(e);
                            (wy + wx) * (-ux)
                        } else {
                            (weight[y] + wx) * (u[y] - ux)
                        }
                    })
                    .sum();
                0.5 * s
            })
            .collect()
    }
}

/// A real function on `B`, zero outside.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    spec: LatticeSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(spec: LatticeSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.site_count() {
            return Err(Error::Domain(format!(
                "field has {} values, box has {} sites",
                values.len(),
                spec.site_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "field value at {:?} is not finite",
                spec.point_of(i)
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: LatticeSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.site_count()],
        }
    }

    /// Unit mass at `x`.
    pub fn delta(spec: LatticeSpec, x: &[i64]) -> Result<Self> {
        spec.require(x)?;
        let mut f = Self::zeros(spec);
        f.values[spec.index_of(x).unwrap()] = 1.0;
        Ok(f)
    }

    pub fn from_fn<F: FnMut(&[i64]) -> f64>(spec: LatticeSpec, mut f: F) -> Result<Self> {
        let values = spec.points().map(|x| f(&x)).collect();
        Self::new(spec, values)
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at any lattice point, zero outside `B`.
    pub fn at(&self, x: &[i64]) -> f64 {
        self.spec.index_of(x).map_or(0.0, |i| self.values[i])
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Field) -> Result<Self> {
        self.same_box(other)?;
        Ok(Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        })
    }

    /// Euclidean (counting-measure) inner product.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.same_box(other)?;
        Ok(sum::dot(&self.values, &other.values))
    }

    /// `u(. - shift)`: values moved by `shift`, zero-filled; returns `None`
    /// if any nonzero value would leave the box.
    pub fn translated(&self, shift: &[i64]) -> Option<Self> {
        if shift.len() != self.spec.dim {
            return None;
        }
        let mut out = vec![0.0; self.values.len()];
        let mut x = vec![0i64; self.spec.dim];
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            self.spec.write_point(i, &mut x);
            for (c, s) in x.iter_mut().zip(shift) {
                *c += s;
            }
            out[self.spec.index_of(&x)?] = v;
        }
        Some(Self {
            spec: self.spec,
            values: out,
        })
    }

    /// Largest `max_j |x_j|` over the support; `None` for the zero field.
    pub fn support_radius(&self) -> Option<i64> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| sup_radius(&self.spec.point_of(i)))
            .max()
    }

    pub(crate) fn same_box(&self, other: &Field) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Domain(format!(
                "fields live on different boxes: {:?} vs {:?}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p must be finite and >= 2, got {p}")));
    }
    Ok(())
}

/// `Gamma(u, v)(x) = 1/2 sum_{y ~ x} (u(y) - u(x)) (v(y) - v(x))`.
pub fn gradient_form(u: &Field, v: &Field, x: &[i64]) -> Result<f64> {
    u.same_box(v)?;
    let spec = u.spec();
    let (ux, vx) = (u.at(x), v.at(x));
    let s: f64 = spec
        .neighbors(x)?
        .iter()
        .map(|y| (u.at(y) - ux) * (v.at(y) - vx))
        .sum();
    Ok(0.5 * s)
}

/// `|grad u|(x) = sqrt(Gamma(u)(x))`.
pub fn grad_norm(u: &Field, x: &[i64]) -> Result<f64> {
    Ok(gradient_form(u, u, x)?.max(0.0).sqrt())
}

/// The discrete p-Laplacian on `B`, using zero extension and exterior
/// gradient norms computed from the zero-extended field.
pub fn p_laplacian(u: &Field, p: f64) -> Result<Field> {
    check_p(p)?;
    let stencil = Stencil::new(u.spec());
    Field::new(u.spec(), stencil.p_laplacian(u.values(), p))
}

/// Counting-measure `l^p` norm; pass `f64::INFINITY` for the sup norm.
pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("l^p exponent must be >= 1, got {p}")));
    }
    let v = u.values();
    if p.is_infinite() {
        return Ok(v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    // Scaling by the sup norm keeps |x|^p representable for large p.
    let s = sum::pairwise_by(v.len(), &|i| (v[i].abs() / scale).powf(p));
    Ok(scale * s.powf(1.0 / p))
}

/// Returns `(sum_x |grad u|^{p-2}(x) Gamma(u, v)(x), -sum_x Delta_p u(x) v(x))`.
///
/// `v` must vanish on sites with `max_j |x_j| >= r`, i.e. stay at distance
/// at least 2 from the complement of the box, so both sums are exact.
pub fn ibp_check(u: &Field, v: &Field, p: f64) -> Result<(f64, f64)> {
    check_p(p)?;
    u.same_box(v)?;
    let spec = u.spec();
    let r = spec.radius() as i64;
    if let Some(rad) = v.support_radius() {
        if rad >= r {
            return Err(Error::Precondition(format!(
                "test function reaches sup-radius {rad}; it must stay within {}",
                r - 1
            )));
        }
    }
    let stencil = Stencil::new(spec);
    let uv = u.values();
    let vv = v.values();
    let gamma_u = stencil.gamma_all(uv);
    let e = (p - 2.0) / 2.0;
    let lhs_terms: Vec<f64> = (0..uv.len())
        .map(|i| {
            let s: f64 = stencil
                .neighbors_of(i)
                .iter()
                .map(|&y| {
                    let (du, dv) = if y == EXTERIOR {
                        (-uv[i], -vv[i])
                    } else {
                        (uv[y] - uv[i], vv[y] - vv[i])
                    };
                    du * dv
                })
                .sum();
            gamma_u[i].powf(e) * 0.5 * s
        })
        .collect();
    let lap = stencil.p_laplacian(uv, p);
    let lhs = sum::pairwise(&lhs_terms);
    let rhs = -sum::dot(&lap, vv);
    Ok((lhs, rhs))
}
