mod common;

use std::f64::consts::PI;

use choquard_lattice::kernel::{canonical_differences, fractional_degree, riesz_kernel};
use choquard_lattice::{build_table, ConvolutionMethod, Field, LatticeSpec};
use common::{adaptive_simpson, k_alpha_1d, rel, riesz_1d};
use proptest::prelude::*;

#[test]
fn k_one_in_one_dimension() {
    let k = fractional_degree(1, 1.0, 4096).unwrap();
    assert!(rel(k, 4.0 / PI) <= 1e-8, "{k}");
}

#[test]
fn k_alpha_matches_gamma_closed_form() {
    for alpha in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let k = fractional_degree(1, alpha, 4096).unwrap();
        assert!(rel(k, k_alpha_1d(alpha)) <= 1e-10, "alpha {alpha}: {k}");
    }
}

#[test]
fn k_alpha_matches_adaptive_quadrature() {
    for alpha in [0.3, 0.5, 0.8] {
        let f = |k: f64| (2.0 * (k / 2.0).sin()).powf(alpha);
        let oracle = adaptive_simpson(&f, 0.0, PI, 1e-13) / PI;
        assert!(rel(k_alpha_1d(alpha), oracle) <= 1e-9);
        let k = fractional_degree(1, alpha, 4096).unwrap();
        assert!(rel(k, oracle) <= 1e-9, "alpha {alpha}: {k} vs {oracle}");
    }
}

#[test]
fn k_alpha_two_dimensions_self_converges() {
    let a = fractional_degree(2, 1.0, 256).unwrap();
    let b = fractional_degree(2, 1.0, 512).unwrap();
    assert!(rel(a, b) <= 1e-6);
}

/// Adaptive quadrature of `(1/pi) int_0^pi cos(dk) (2 sin(k/2))^{-alpha} dk`
/// after `k = pi y^{2/(1-alpha)}`, which removes the singularity at 0.
fn riesz_1d_quadrature(d: i64, alpha: f64) -> f64 {
    let g = 2.0 / (1.0 - alpha);
    let f = |y: f64| {
        if y == 0.0 {
            return 0.0;
        }
        let k = PI * y.powf(g);
        let jac = PI * g * y.powf(g - 1.0);
        (d as f64 * k).cos() * (2.0 * (k / 2.0).sin()).powf(-alpha) * jac
    };
    k_alpha_1d(alpha) * adaptive_simpson(&f, 0.0, 1.0, 1e-12) / PI
}

#[test]
fn riesz_zero_against_adaptive_quadrature() {
    let r = riesz_kernel(&[0], 1, 0.5, 4096).unwrap();
    let oracle = riesz_1d_quadrature(0, 0.5);
    assert!(rel(r, oracle) <= 1e-6, "{r} vs {oracle}");
}

#[test]
fn riesz_one_dimension_closed_form() {
    // Stronger singularities converge more slowly at fixed M.
    for (alpha, tol) in [(0.25, 1e-12), (0.5, 1e-12), (0.75, 1e-7)] {
        let table = build_table(LatticeSpec::new(1, 8).unwrap(), alpha, 4096).unwrap();
        for d in 0..=16i64 {
            let v = table.get(&[d]).unwrap();
            let exact = riesz_1d(d, alpha);
            assert!(rel(v, exact) <= tol, "alpha {alpha} d {d}: {v} vs {exact}");
        }
    }
    // The closed form and the substituted quadrature agree with each other.
    for d in [0, 1, 3] {
        assert!(rel(riesz_1d(d, 0.5), riesz_1d_quadrature(d, 0.5)) <= 1e-7);
    }
}

#[test]
fn two_dimensions_self_converge() {
    for d in [[0i64, 0], [1, 0], [1, 1], [5, 3], [12, 0], [8, 8]] {
        let a = riesz_kernel(&d, 2, 1.0, 512).unwrap();
        let b = riesz_kernel(&d, 2, 1.0, 1024).unwrap();
        assert!(rel(a, b) <= 1e-9, "{d:?}: {a} vs {b}");
    }
}

#[test]
fn three_dimensions_self_converge_at_default() {
    for d in [[0i64, 0, 0], [1, 0, 0], [2, 1, 1]] {
        let a = riesz_kernel(&d, 3, 1.0, 64).unwrap();
        let b = riesz_kernel(&d, 3, 1.0, 128).unwrap();
        assert!(rel(a, b) <= 1e-6, "{d:?}: {a} vs {b}");
    }
}

#[test]
fn self_convergence_improves_with_m() {
    for (dim, alpha) in [(1usize, 0.5), (2, 1.0)] {
        let k: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&m| fractional_degree(dim, alpha, m).unwrap())
            .collect();
        let e: Vec<f64> = k.windows(2).map(|w| rel(w[0], w[1])).collect();
        // Strictly shrinking until the differences reach round-off.
        for w in e.windows(2) {
            assert!(w[1] < w[0] || w[1] <= 1e-13, "{dim}: {e:?}");
        }
    }
}

#[test]
fn decreasing_along_axis() {
    let v: Vec<f64> = (1..=20i64)
        .map(|t| riesz_kernel(&[t, 0], 2, 1.0, 512).unwrap())
        .collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn one_dimensional_table_counts() {
    assert_eq!(canonical_differences(1, 16).len(), 17);
    let t = build_table(LatticeSpec::new(1, 8).unwrap(), 0.5, 4096).unwrap();
    let mut distinct: Vec<f64> = t.values().to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    assert_eq!(distinct.len(), 17);
}

#[test]
fn alpha_out_of_range() {
    assert!(riesz_kernel(&[0, 0], 2, 2.0, 64).is_err());
    assert!(fractional_degree(1, 0.0, 64).is_err());
    assert!(fractional_degree(1, 1.0, 64).is_ok());
    assert!(riesz_kernel(&[0], 1, 0.5, 4).is_err());
}

#[test]
fn table_values_positive() {
    let t = build_table(LatticeSpec::new(2, 4).unwrap(), 1.5, 128).unwrap();
    assert!(t.min_value() > 0.0);
    assert!(t.k_alpha() > 0.0);
    assert!(t.values().iter().all(|v| v.is_finite()));
}

fn random_field(spec: LatticeSpec, raw: &[f64]) -> Field {
    Field::new(spec, raw[..spec.site_count()].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn table_symmetries(a in -6i64..=6, b in -6i64..=6, c in -6i64..=6) {
        let t = build_table(LatticeSpec::new(3, 3).unwrap(), 1.0, 16).unwrap();
        let v = t.get(&[a, b, c]).unwrap();
        prop_assert_eq!(v, t.get(&[-a, -b, -c]).unwrap());
        prop_assert_eq!(v, t.get(&[b, c, a]).unwrap());
        prop_assert_eq!(v, t.get(&[c, a, b]).unwrap());
        prop_assert_eq!(v, t.get(&[-a, b, -c]).unwrap());
        prop_assert_eq!(v, t.get(&[b, a, c]).unwrap());
    }

    #[test]
    fn fft_matches_direct(raw in prop::collection::vec(-1.0f64..1.0, 81)) {
        let spec = LatticeSpec::new(2, 4).unwrap();
        let t = build_table(spec, 1.0, 64).unwrap();
        let w = random_field(spec, &raw);
        let a = t.convolve_with(&w, ConvolutionMethod::Direct).unwrap();
        let b = t.convolve_with(&w, ConvolutionMethod::Fft).unwrap();
        let scale = a.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn convolution_is_self_adjoint(raw in prop::collection::vec(-1.0f64..1.0, 34)) {
        let spec = LatticeSpec::new(1, 8).unwrap();
        let t = build_table(spec, 0.5, 1024).unwrap();
        let w1 = random_field(spec, &raw[..17]);
        let w2 = random_field(spec, &raw[17..]);
        let lhs = t.convolve(&w1).unwrap().dot(&w2).unwrap();
        let rhs = w1.dot(&t.convolve(&w2).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300));
    }

    #[test]
    fn convolution_is_linear(raw in prop::collection::vec(-1.0f64..1.0, 50), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let spec = LatticeSpec::new(2, 2).unwrap();
        let t = build_table(spec, 1.0, 64).unwrap();
        let w1 = random_field(spec, &raw[..25]);
        let w2 = random_field(spec, &raw[25..]);
        let comb = w1.scaled(a).add_scaled(b, &w2).unwrap();
        let lhs = t.convolve(&comb).unwrap();
        let rhs = t.convolve(&w1).unwrap().scaled(a).add_scaled(b, &t.convolve(&w2).unwrap()).unwrap();
        let scale = rhs.values().iter().fold(1e-300f64, |m, x| m.max(x.abs()));
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn positive_input_positive_output(raw in prop::collection::vec(0.0f64..1.0, 25)) {
        let spec = LatticeSpec::new(2, 2).unwrap();
        let t = build_table(spec, 0.5, 64).unwrap();
        let out = t.convolve(&random_field(spec, &raw)).unwrap();
        prop_assert!(out.values().iter().all(|&v| v >= 0.0));
    }
}
