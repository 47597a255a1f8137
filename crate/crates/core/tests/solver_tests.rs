mod common;

use choquard_lattice::nehari::{m_inverse, m_map, psi_grad_pairing, tangent_project};
use choquard_lattice::solver::{
    bump_start, center_normalize, minimize_ground_state, mountain_pass_geometry_probe,
    mountain_pass_level, start_field, SolverConfig,
};
use choquard_lattice::{par, Error, Field, LatticeSpec, ModelSpec, Potential};
use common::{context, model, rel, unit};

fn solve(m: ModelSpec) -> (choquard_lattice::EnergyContext, choquard_lattice::SolveReport) {
    let ctx = context(m);
    let rep = minimize_ground_state(&ctx, &SolverConfig::default()).unwrap();
    (ctx, rep)
}

#[test]
fn config_validation() {
    assert!(SolverConfig::default().validate().is_ok());
    let bad = [
        SolverConfig { grad_tol: 0.0, ..Default::default() },
        SolverConfig { energy_tol: -1.0, ..Default::default() },
        SolverConfig { backtrack: 1.0, ..Default::default() },
        SolverConfig { armijo: 0.0, ..Default::default() },
        SolverConfig { n_starts: 0, ..Default::default() },
        SolverConfig { max_iters: 0, ..Default::default() },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(Error::Parameter(_))), "{cfg:?}");
    }
    let parsed: SolverConfig = serde_json::from_str(r#"{"n_starts": 3}"#).unwrap();
    assert_eq!(parsed.n_starts, 3);
    assert_eq!(parsed.max_iters, 5000);
    assert!(serde_json::from_str::<SolverConfig>(r#"{"steps": 3}"#).is_err());
}

#[test]
fn starts_are_deterministic() {
    let spec = LatticeSpec::new(2, 4).unwrap();
    let b = bump_start(spec);
    assert_eq!(b.at(&[0, 0]), 1.0);
    assert_eq!(b.at(&[1, 0]), 0.5);
    assert_eq!(b.at(&[1, 1]), 0.0);
    assert_eq!(start_field(spec, 9, 0), b);
    assert_eq!(start_field(spec, 9, 3), start_field(spec, 9, 3));
    assert_ne!(start_field(spec, 9, 3), start_field(spec, 9, 4));
    assert_ne!(start_field(spec, 9, 3), start_field(spec, 10, 3));
}

#[test]
fn solution_is_critical_on_default_models() {
    for m in [ModelSpec::default_1d(), ModelSpec::default_2d()] {
        let (ctx, rep) = solve(m);
        let p = ctx.p();
        assert_eq!(rep.label, "ground-state candidate");
        assert!(rep.energy > 0.0);
        assert!(rep.pointwise_residual <= 1e-8 * rep.norm.powf(p - 1.0).max(1.0));
        assert!(rep.nehari_residual <= 1e-8 * rep.norm.powf(p));
        assert!(rel(rep.energy, ctx.energy_j(&rep.field).unwrap()) <= 1e-15);
        assert!(rep.starts.iter().any(|s| s.converged));
        assert!(rep.starts.iter().filter(|s| s.converged).all(|s| s.energy >= rep.energy * (1.0 - 1e-12)));
        let w = m_inverse(&ctx, &rep.field, 1e-10).unwrap();
        let again = m_map(&ctx, &w).unwrap();
        for (x, y) in again.field.values().iter().zip(rep.field.values()) {
            assert!((x - y).abs() <= 1e-8 * rep.norm);
        }
        // Tangent derivatives of Psi vanish at the minimizer.
        let spec = ctx.model().lattice;
        for i in (0..spec.site_count()).step_by(7) {
            let e = Field::delta(spec, &spec.point_of(i)).unwrap();
            let z = tangent_project(&ctx, &w, &e).unwrap();
            assert!(psi_grad_pairing(&ctx, &w, &z).unwrap().abs() <= 1e-7);
        }
    }
}

#[test]
fn trace_is_monotone() {
    let (_, rep) = solve(ModelSpec::default_1d());
    assert!(!rep.trace.is_empty());
    assert_eq!(rep.s_history.len(), rep.trace.len());
    for w in rep.trace.windows(2) {
        assert!(w[1].psi <= w[0].psi * (1.0 + 64.0 * f64::EPSILON));
    }
}

#[test]
fn solver_is_deterministic_across_pools() {
    let ctx = context(ModelSpec::default_1d());
    let cfg = SolverConfig { seed: 5, ..Default::default() };
    let a = minimize_ground_state(&ctx, &cfg).unwrap();
    let b = minimize_ground_state(&ctx, &cfg).unwrap();
    let c = par::with_threads(1, || minimize_ground_state(&ctx, &cfg).unwrap()).unwrap();
    let ja = serde_json::to_string(&a).unwrap();
    assert_eq!(ja, serde_json::to_string(&b).unwrap());
    assert_eq!(ja, serde_json::to_string(&c).unwrap());
    assert_eq!(a.field, c.field);
}

#[test]
fn iteration_limit_reports_nonconvergence() {
    let ctx = context(ModelSpec::default_2d());
    let cfg = SolverConfig { max_iters: 1, n_starts: 2, ..Default::default() };
    match minimize_ground_state(&ctx, &cfg) {
        Err(Error::NonConvergence(msg)) => {
            assert!(msg.contains("start 0") && msg.contains("start 1"), "{msg}");
        }
        other => panic!("expected nonconvergence, got {other:?}"),
    }
}

#[test]
fn rejected_model_is_not_solved() {
    let ctx = context(model(1, 4, 2.0, 0.5, unit(), &[(1.0, 2.0)]));
    let err = minimize_ground_state(&ctx, &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, Error::ModelRejected { .. }), "{err}");
}

#[test]
fn level_characterizations_agree() {
    for m in [ModelSpec::default_1d(), ModelSpec::default_2d()] {
        let (ctx, rep) = solve(m);
        let lv = mountain_pass_level(&ctx, &rep.field, 200, 1).unwrap();
        assert_eq!(lv.path_start, 0.0);
        assert!(lv.path_end < 0.0);
        assert!(rel(lv.path_max, rep.energy) <= 1e-8);
        assert!(rel(lv.path_argmax, 1.0) <= 1e-5);
        assert!(lv.direction_min >= rep.energy - 1e-8);
    }
}

#[test]
fn geometry_level_is_below_ground_state() {
    for m in [ModelSpec::default_1d(), ModelSpec::default_2d()] {
        let (ctx, rep) = solve(m);
        let g = mountain_pass_geometry_probe(&ctx, 200, 2).unwrap();
        assert!(g.rho > 0.0 && g.sigma > 0.0);
        assert!(g.validation_min >= g.sigma);
        assert!(g.witness_norm > g.rho && g.witness_energy < 0.0);
        assert!(g.sigma <= rep.energy);
    }
}

#[test]
fn centering_restores_shifted_solution() {
    let pot = Potential::Periodic { period: 2, cell: vec![1.0, 2.0] };
    let ctx = context(model(1, 10, 2.0, 0.5, pot.clone(), &[(1.0, 4.0)]));
    let spec = ctx.model().lattice;
    let mut g = choquard_lattice::rng::stream(3, 0);
    let bump = choquard_lattice::rng::supported_field(spec, 2, &mut g).translated(&[-5]).unwrap();
    let once = center_normalize(&bump, &pot);
    assert!(once.applied);
    let centered = once.field;
    assert_eq!(center_normalize(&centered, &pot).note, "already centered");
    let moved = centered.translated(&[2]).unwrap();
    let back = center_normalize(&moved, &pot);
    assert!(back.applied);
    assert_eq!(back.shift, vec![-2]);
    assert_eq!(back.field, centered);
    assert!(rel(ctx.energy_j(&moved).unwrap(), ctx.energy_j(&centered).unwrap()) <= 1e-12);

    let coercive = Potential::Coercive { h0: 1.0, center: vec![0], coefficient: 1.0, exponent: 1.0 };
    assert!(!center_normalize(&bump, &coercive).applied);
    let full = Field::from_fn(spec, |x| if x[0] == 9 { 1.0 } else { 0.5 }).unwrap();
    let c = center_normalize(&full, &Potential::Constant { h0: 1.0 });
    assert!(!c.applied);
    assert!(c.note.contains("skipped"));
}

#[test]
fn doubling_the_box_barely_moves_the_level() {
    let coercive = Potential::Coercive { h0: 1.0, center: vec![0], coefficient: 0.5, exponent: 1.0 };
    for pot in [unit(), coercive] {
        let (_, small) = solve(model(1, 8, 2.0, 0.5, pot.clone(), &[(1.0, 4.0)]));
        let (_, large) = solve(model(1, 16, 2.0, 0.5, pot, &[(1.0, 4.0)]));
        assert!(rel(small.energy, large.energy) <= 1e-2, "{} vs {}", small.energy, large.energy);
    }
}

#[test]
fn periodic_level_for_doubled_box() {
    let pot = Potential::Periodic { period: 2, cell: vec![1.0, 2.0] };
    let (_, small) = solve(model(1, 6, 2.0, 0.5, pot.clone(), &[(1.0, 4.0)]));
    let (_, large) = solve(model(1, 12, 2.0, 0.5, pot, &[(1.0, 4.0)]));
    eprintln!("periodic level r=6 {} r=12 {} rel {:e}", small.energy, large.energy, rel(small.energy, large.energy));
    assert!(large.energy <= small.energy * (1.0 + 1e-10));
}
