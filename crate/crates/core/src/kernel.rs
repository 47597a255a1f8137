//! Lattice symbol, fractional degree, the Riesz-type Green's kernel and the
//! nonlocal convolution `R_alpha * w`.
//!
//! Torus integrals use a tensor product of `M` nodes per axis at
//! `t = (l + 1/2) / M`, mapped to `k = 2 pi psi(t)` by the periodizing
//! substitution `psi'(t) ∝ sin^m(pi t)`. The substitution flattens the
//! integrand at `k = 0 (mod 2 pi)`, where `mu^{-alpha/2}` is singular, and
//! leaves the midpoint rule spectrally accurate on the smooth remainder.
//! No node ever lands on `k = 0`.

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Field, LatticeSpec};
use crate::{par, sum};

/// Order `m` of the `sin^m` substitution.
pub const TRANSFORM_ORDER: usize = 8;

/// Environment variable naming the kernel table cache directory.
pub const CACHE_ENV: &str = "CHOQUARD_KERNEL_CACHE";

/// Default quadrature points per axis.
pub fn default_quad_points(dim: usize) -> usize {
    match dim {
        1 => 4096,
        2 => 512,
        3 => 64,
        _ => 16,
    }
}

/// `mu(k) = 2N - 2 sum_j cos(k_j)`.
pub fn mu(k: &[f64]) -> f64 {
    // 4 sin^2(k/2) is the same quantity without cancellation near k = 0.
    k.iter().map(|&kj| 4.0 * (0.5 * kj).sin().powi(2)).sum()
}

fn check_alpha(dim: usize, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < dim as f64) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0, N) = (0, {dim}), got {alpha}"
        )));
    }
    Ok(())
}

fn check_points(m: usize) -> Result<()> {
    if m < 8 {
        return Err(Error::Parameter(format!(
            "need at least 8 quadrature points per axis, got {m}"
        )));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// One-dimensional node set shared by every axis of the torus grid.
#[derive(Clone, Debug)]
pub struct TorusAxis {
    /// `min(k, 2 pi - k)` per node; `cos(d k)` depends only on this.
    pub phase: Vec<f64>,
    /// `4 sin^2(k / 2)` per node.
    pub symbol: Vec<f64>,
    /// Node weights for the normalized measure `dk / (2 pi)`; they sum to 1.
    pub weight: Vec<f64>,
}

impl TorusAxis {
    pub fn new(points: usize, order: usize) -> Self {
        assert!(order % 2 == 0, "substitution order must be even");
        let (gx, gw) = gauss_legendre(24);
        let norm = 2f64.powi(order as i32) / binomial(order, order / 2);
        let dpsi = |t: f64| norm * (std::f64::consts::PI * t).sin().powi(order as i32);
        // psi(t) for t <= 1/2 by quadrature of psi'; relative accuracy is kept
        // for tiny t where the closed form would cancel.
        let psi_low = |t: f64| {
            let half = 0.5 * t;
            gx.iter()
                .zip(&gw)
                .map(|(x, w)| w * dpsi(half * (x + 1.0)))
                .sum::<f64>()
                * half
        };
        let mut phase = Vec::with_capacity(points);
        let mut symbol = Vec::with_capacity(points);
        let mut weight = Vec::with_capacity(points);
        for l in 0..points {
            let t = (l as f64 + 0.5) / points as f64;
            let near = t.min(1.0 - t);
            let k = 2.0 * std::f64::consts::PI * psi_low(near);
            phase.push(k);
            symbol.push(4.0 * (0.5 * k).sin().powi(2));
            weight.push(dpsi(t) / points as f64);
        }
        Self {
            phase,
            symbol,
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }
}

/// `(2 pi)^{-N} ∫_{T^N} mu(k)^exponent prod_j cos(f_j k_j) dk` for every
/// frequency tuple in `freqs[0] x ... x freqs[N-1]`, row-major.
fn torus_moments(axis: &TorusAxis, dim: usize, exponent: f64, freqs: &[Vec<usize>]) -> Vec<f64> {
    let m = axis.len();
    debug_assert_eq!(freqs.len(), dim);
    // integrand tensor rows over the leading axis
    let inner: usize = m.pow(dim as u32 - 1);
    let rows: Vec<Vec<f64>> = par::map_range(m, |l0| {
        let mut row = vec![0.0; inner];
        let mut idx = vec![0usize; dim - 1];
        for (flat, slot) in row.iter_mut().enumerate() {
            let mut rem = flat;
            for c in idx.iter_mut().rev() {
                *c = rem % m;
                rem /= m;
            }
            let mut s = axis.symbol[l0];
            let mut w = axis.weight[l0];
            for &c in &idx {
                s += axis.symbol[c];
                w *= axis.weight[c];
            }
            *slot = w * s.powf(exponent);
        }
        row
    });
    let mut data: Vec<f64> = rows.into_iter().flatten().collect();
    // contract axes from last to first: (outer, m, tail) -> (outer, F, tail)
    let mut tail = 1usize;
    for a in (0..dim).rev() {
        let f = &freqs[a];
        let outer = m.pow(a as u32);
        let cos: Vec<f64> = f
            .iter()
            .flat_map(|&fr| axis.phase.iter().map(move |k| (fr as f64 * k).cos()))
            .collect();
        let blocks: Vec<Vec<f64>> = par::map_range(outer, |o| {
            let src = &data[o * m * tail..(o + 1) * m * tail];
            let mut out = vec![0.0; f.len() * tail];
            for (fi, chunk) in out.chunks_mut(tail).enumerate() {
                let c = &cos[fi * m..(fi + 1) * m];
                for (t, slot) in chunk.iter_mut().enumerate() {
                    *slot = sum::pairwise_by(m, &|l| src[l * tail + t] * c[l]);
                }
            }
            out
        });
        data = blocks.into_iter().flatten().collect();
        tail *= f.len();
    }
    data
}

/// `K_alpha = (2 pi)^{-N} ∫ mu^{alpha/2} dk` with `m` points per axis.
pub fn fractional_degree(dim: usize, alpha: f64, m: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    // The integrand is bounded, so K_alpha exists for every alpha > 0.
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    check_points(m)?;
    let axis = TorusAxis::new(m, TRANSFORM_ORDER);
    Ok(degree_on(&axis, dim, alpha))
}

fn degree_on(axis: &TorusAxis, dim: usize, alpha: f64) -> f64 {
    torus_moments(axis, dim, 0.5 * alpha, &vec![vec![0]; dim])[0]
}

/// `R_alpha(d) = K_alpha (2 pi)^{-N} ∫ cos(d . k) mu^{-alpha/2} dk`.
pub fn riesz_kernel(d: &[i64], dim: usize, alpha: f64, m: usize) -> Result<f64> {
    if d.len() != dim || dim == 0 {
        return Err(Error::Domain(format!(
            "difference {d:?} does not have {dim} coordinates"
        )));
    }
    check_alpha(dim, alpha)?;
    check_points(m)?;
    let axis = TorusAxis::new(m, TRANSFORM_ORDER);
    let k_alpha = degree_on(&axis, dim, alpha);
    let canon = canonical(d);
    let freqs: Vec<Vec<usize>> = canon.iter().map(|&c| vec![c as usize]).collect();
    Ok(k_alpha * torus_moments(&axis, dim, -0.5 * alpha, &freqs)[0])
}

/// Sorted absolute values: the representative of `d` under sign flips and
/// coordinate permutations.
pub fn canonical(d: &[i64]) -> Vec<i64> {
    let mut c: Vec<i64> = d.iter().map(|x| x.abs()).collect();
    c.sort_unstable();
    c
}

/// Nondecreasing tuples in `{0..=max}^dim`, lexicographic.
pub fn canonical_differences(dim: usize, max: i64) -> Vec<Vec<i64>> {
    fn rec(dim: usize, lo: i64, max: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        for v in lo..=max {
            cur.push(v);
            rec(dim, v, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, 0, max, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// How `convolve` evaluates `R_alpha * w`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvolutionMethod {
    /// Direct sum for boxes up to 512 sites, transform path above.
    #[default]
    Auto,
    Direct,
    Fft,
}

const AUTO_DIRECT_MAX_SITES: usize = 512;

struct Spectrum {
    len: usize,
    values: Vec<Complex64>,
}

/// `R_alpha(d)` for every `d in {-2r..=2r}^N`, plus `K_alpha`.
pub struct KernelTable {
    spec: LatticeSpec,
    alpha: f64,
    quad_points: usize,
    k_alpha: f64,
    /// Row-major over `d + 2r`, side `4r + 1`.
    values: Vec<f64>,
    spectrum: OnceLock<Spectrum>,
}

impl std::fmt::Debug for KernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTable")
            .field("spec", &self.spec)
            .field("alpha", &self.alpha)
            .field("quad_points", &self.quad_points)
            .field("k_alpha", &self.k_alpha)
            .finish()
    }
}

impl Clone for KernelTable {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec,
            alpha: self.alpha,
            quad_points: self.quad_points,
            k_alpha: self.k_alpha,
            values: self.values.clone(),
            spectrum: OnceLock::new(),
        }
    }
}

/// On-disk layout of a kernel table.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTableFile {
    pub dim: usize,
    pub radius: usize,
    pub alpha: f64,
    pub quad_points: usize,
    pub transform_order: usize,
    pub k_alpha: f64,
    /// Values at `canonical_differences(dim, 2 * radius)`, in that order.
    pub values: Vec<f64>,
}

/// Builds the table over the box difference set.
pub fn build_table(spec: LatticeSpec, alpha: f64, m: usize) -> Result<KernelTable> {
    let dim = spec.dim();
    check_alpha(dim, alpha)?;
    check_points(m)?;
    let axis = TorusAxis::new(m, TRANSFORM_ORDER);
    let k_alpha = degree_on(&axis, dim, alpha);
    let reach = 2 * spec.radius();
    let freqs = vec![(0..=reach).collect::<Vec<_>>(); dim];
    let orthant = torus_moments(&axis, dim, -0.5 * alpha, &freqs);
    let side = reach + 1;
    let canon = canonical_differences(dim, reach as i64);
    let canon_values: Vec<f64> = canon
        .iter()
        .map(|c| {
            let idx = c.iter().fold(0usize, |acc, &x| acc * side + x as usize);
            k_alpha * orthant[idx]
        })
        .collect();
    KernelTable::from_canonical(spec, alpha, m, k_alpha, &canon_values)
}

impl KernelTable {
    fn from_canonical(
        spec: LatticeSpec,
        alpha: f64,
        quad_points: usize,
        k_alpha: f64,
        canon_values: &[f64],
    ) -> Result<Self> {
        let dim = spec.dim();
        let reach = 2 * spec.radius() as i64;
        let canon = canonical_differences(dim, reach);
        if canon.len() != canon_values.len() {
            return Err(Error::Format(format!(
                "expected {} canonical kernel values, found {}",
                canon.len(),
                canon_values.len()
            )));
        }
        let lookup: std::collections::HashMap<Vec<i64>, f64> =
            canon.into_iter().zip(canon_values.iter().copied()).collect();
        let side = (2 * reach + 1) as usize;
        let total = side.pow(dim as u32);
        let mut values = Vec::with_capacity(total);
        let mut d = vec![0i64; dim];
        for flat in 0..total {
            let mut rem = flat;
            for c in d.iter_mut().rev() {
                *c = (rem % side) as i64 - reach;
                rem /= side;
            }
            values.push(lookup[&canonical(&d)]);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite kernel value {v}")));
        }
        Ok(Self {
            spec,
            alpha,
            quad_points,
            k_alpha,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    pub fn k_alpha(&self) -> f64 {
        self.k_alpha
    }

    /// Side of the difference cube, `4r + 1`.
    pub fn side(&self) -> usize {
        4 * self.spec.radius() + 1
    }

    /// Raw values in row-major order over `d + 2r`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `R_alpha(d)` for `d` within the table's reach.
    pub fn get(&self, d: &[i64]) -> Option<f64> {
        let reach = 2 * self.spec.radius() as i64;
        if d.len() != self.dim() || d.iter().any(|c| c.abs() > reach) {
            return None;
        }
        let side = self.side();
        let idx = d
            .iter()
            .fold(0usize, |acc, &c| acc * side + (c + reach) as usize);
        Some(self.values[idx])
    }

    /// All `(d, R_alpha(d))` pairs in table order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        let side = self.side();
        let reach = 2 * self.spec.radius() as i64;
        let dim = self.dim();
        self.values.iter().enumerate().map(move |(flat, &v)| {
            let mut d = vec![0i64; dim];
            let mut rem = flat;
            for c in d.iter_mut().rev() {
                *c = (rem % side) as i64 - reach;
                rem /= side;
            }
            (d, v)
        })
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_file(&self) -> KernelTableFile {
        let canon = canonical_differences(self.dim(), 2 * self.spec.radius() as i64);
        KernelTableFile {
            dim: self.dim(),
            radius: self.spec.radius(),
            alpha: self.alpha,
            quad_points: self.quad_points,
            transform_order: TRANSFORM_ORDER,
            k_alpha: self.k_alpha,
            values: canon.iter().map(|c| self.get(c).unwrap()).collect(),
        }
    }

    pub fn from_file(file: &KernelTableFile) -> Result<Self> {
        if file.transform_order != TRANSFORM_ORDER {
            return Err(Error::Format(format!(
                "table built with substitution order {}, expected {TRANSFORM_ORDER}",
                file.transform_order
            )));
        }
        let spec = LatticeSpec::new(file.dim, file.radius)?;
        check_alpha(file.dim, file.alpha)?;
        Self::from_canonical(spec, file.alpha, file.quad_points, file.k_alpha, &file.values)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: KernelTableFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }

    /// Cache file name for a `(N, r, alpha, M)` key.
    pub fn cache_name(spec: LatticeSpec, alpha: f64, m: usize) -> String {
        format!(
            "kernel_n{}_r{}_a{:016x}_m{}.json",
            spec.dim(),
            spec.radius(),
            alpha.to_bits(),
            m
        )
    }

    /// Loads a cached table from `dir` or builds and stores it there.
    pub fn load_or_build(
        spec: LatticeSpec,
        alpha: f64,
        m: usize,
        dir: Option<&Path>,
    ) -> Result<Self> {
        let Some(dir) = dir else {
            return build_table(spec, alpha, m);
        };
        let path: PathBuf = dir.join(Self::cache_name(spec, alpha, m));
        if path.exists() {
            if let Ok(t) = Self::read_json(&path) {
                if t.spec == spec && t.alpha == alpha && t.quad_points == m {
                    return Ok(t);
                }
            }
        }
        let table = build_table(spec, alpha, m)?;
        std::fs::create_dir_all(dir)?;
        table.write_json(&path)?;
        Ok(table)
    }

    fn check_field(&self, w: &Field) -> Result<()> {
        if w.spec() != self.spec {
            return Err(Error::Domain(format!(
                "kernel table built for {:?}, field lives on {:?}",
                self.spec,
                w.spec()
            )));
        }
        Ok(())
    }

    /// `(R_alpha * w)(x)` on the box.
    pub fn convolve(&self, w: &Field) -> Result<Field> {
        self.convolve_with(w, ConvolutionMethod::Auto)
    }

    pub fn convolve_with(&self, w: &Field, method: ConvolutionMethod) -> Result<Field> {
        self.check_field(w)?;
        let out = match method {
            ConvolutionMethod::Direct => self.direct(w.values()),
            ConvolutionMethod::Fft => self.fft(w.values()),
            ConvolutionMethod::Auto => self.apply(w.values()),
        };
        Field::new(self.spec, out)
    }

    pub fn convolve_direct(&self, w: &Field) -> Result<Field> {
        self.convolve_with(w, ConvolutionMethod::Direct)
    }

    pub fn convolve_fft(&self, w: &Field) -> Result<Field> {
        self.convolve_with(w, ConvolutionMethod::Fft)
    }

    /// Auto-selected convolution on raw site values.
    pub(crate) fn apply(&self, w: &[f64]) -> Vec<f64> {
        if self.spec.site_count() <= AUTO_DIRECT_MAX_SITES {
            self.direct(w)
        } else {
            self.fft(w)
        }
    }

    fn offsets(&self) -> Vec<usize> {
        let spec = self.spec;
        let side = self.side();
        let r = spec.radius() as i64;
        (0..spec.site_count())
            .map(|i| {
                spec.point_of(i)
                    .iter()
                    .fold(0usize, |acc, &c| acc * side + (c + r) as usize)
            })
            .collect()
    }

    pub(crate) fn direct(&self, w: &[f64]) -> Vec<f64> {
        let off = self.offsets();
        // index of d = x - y is center + off(x) - off(y), center at d = 0
        let side = self.side();
        let reach = 2 * self.spec.radius();
        let center_shift = (0..self.dim()).fold(0usize, |acc, _| acc * side + reach);
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] != 0.0).collect();
        par::map_range(w.len(), |x| {
            let base = off[x] + center_shift;
            sum::pairwise_by(support.len(), &|k| {
                let y = support[k];
                self.values[base - off[y]] * w[y]
            })
        })
    }

    fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let len = self.side(); // >= 4r + 1: no wrap-around inside the box
            let dim = self.dim();
            let mut values = vec![Complex64::new(0.0, 0.0); len.pow(dim as u32)];
            for (d, v) in self.entries() {
                let idx = d.iter().fold(0usize, |acc, &c| {
                    acc * len + (c.rem_euclid(len as i64)) as usize
                });
                values[idx] = Complex64::new(v, 0.0);
            }
            fft_nd(&mut values, len, dim, false);
            Spectrum { len, values }
        })
    }

    pub(crate) fn fft(&self, w: &[f64]) -> Vec<f64> {
        let spec = self.spec;
        let dim = spec.dim();
        let sp = self.spectrum();
        let len = sp.len;
        let mut buf = vec![Complex64::new(0.0, 0.0); sp.values.len()];
        let mut x = vec![0i64; dim];
        let wrap = |x: &[i64]| {
            x.iter().fold(0usize, |acc, &c| {
                acc * len + (c.rem_euclid(len as i64)) as usize
            })
        };
        for (i, &v) in w.iter().enumerate() {
            if v != 0.0 {
                spec.write_point(i, &mut x);
                buf[wrap(&x)] = Complex64::new(v, 0.0);
            }
        }
        fft_nd(&mut buf, len, dim, false);
        for (b, k) in buf.iter_mut().zip(&sp.values) {
            *b *= k;
        }
        fft_nd(&mut buf, len, dim, true);
        let scale = 1.0 / buf.len() as f64;
        (0..w.len())
            .map(|i| {
                spec.write_point(i, &mut x);
                buf[wrap(&x)].re * scale
            })
            .collect()
    }
}

/// In-place N-dimensional FFT of a cube with `len` points per axis.
fn fft_nd(data: &mut [Complex64], len: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan: Arc<dyn rustfft::Fft<f64>> = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = len.pow((dim - 1 - axis) as u32);
        let block = stride * len;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}
