mod common;

use approx::assert_relative_eq;
use common::{ConstChange, ConstModel};
use jumpdiff::cirjump::{change_spec, p_model, q_model, CirJumpParams, JumpLaw, Weight};
use jumpdiff::mccheck::{
    density_mass_check, killing_compensator_check, martingale_check, positivity_check, reweighted_expectation_check,
    supermartingale_check, Provenance, Setup, Target,
};
use jumpdiff::par::Exec;
use jumpdiff::sim::SimConfig;
use jumpdiff::testfn::{Bump, Constant};
use jumpdiff::{IdentityChange, StateSpace};

fn full_change() -> CirJumpParams {
    CirJumpParams {
        tilde_b0: 1.0,
        tilde_gamma0: 0.1,
        tilde_gamma1: 0.05,
        m0: Weight::constant(0.5),
        m1: Weight::constant(0.25),
        ..CirJumpParams::identity(0.5, -1.0, 1.0, 1.0, JumpLaw::Exponential { mean: 0.5 }, 0.2, 1.0)
    }
}

#[test]
fn identity_change_has_mass_survival() {
    // Q = P: the mass is P(t < τ) = e^{−0.2}.
    let p = p_model(&full_change()).unwrap();
    let id = IdentityChange::new(StateSpace::non_negative(1));
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    let setup = Setup::new(&p, &[1.0], &cfg, 20_000, 1);
    let r = density_mass_check(&setup, &id, cfg.n_loc, 1.0, Target::Oracle((-0.2f64).exp())).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.provenance, Provenance::AnalyticOracle);
}

#[test]
fn killing_only_change_mass() {
    // γ = 0.2 under P, γ̃ = 0.1 under Q: Q(t < τ) = e^{−0.1} = 0.904837.
    let m = ConstModel::new(0.0, 0.0, 0.2);
    let c = ConstChange::new(0.0, 0.5, 1.0);
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    let setup = Setup::new(&m, &[0.0], &cfg, 50_000, 2);
    let target = (-0.1f64).exp();
    assert_relative_eq!(target, 0.904837, epsilon = 1e-6);
    let r = density_mass_check(&setup, &c, cfg.n_loc, 1.0, Target::Oracle(target)).unwrap();
    assert!(r.pass, "{r:?}");
    assert!((r.estimate - target).abs() < 0.01);
}

#[test]
fn unit_function_reproduces_the_mass() {
    let params = full_change();
    let p = p_model(&params).unwrap();
    let c = change_spec(&params).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 128.0);
    let setup = Setup::new(&p, &[1.0], &cfg, 5000, 3);
    let one = Constant { dim: 1, value: 1.0 };
    let a = density_mass_check(&setup, &c, cfg.n_loc, 1.0, Target::Oracle(1.0)).unwrap();
    let b = reweighted_expectation_check(&setup, &c, cfg.n_loc, &one, 1.0, Target::Oracle(1.0)).unwrap();
    assert_eq!(a.estimate, b.estimate);
    assert_eq!(a.se, b.se);
}

#[test]
fn exact_zero_targets() {
    let p = p_model(&full_change()).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 256.0);
    let mut setup = Setup::new(&p, &[1.0], &cfg, 20_000, 4);
    setup.fit = true;
    let f = Bump::new(vec![1.0], 0.5, 1.0);
    let r = martingale_check(&setup, &f, 1.0).unwrap();
    assert_eq!((r.target, r.provenance), (0.0, Provenance::ExactZero));
    assert!(r.pass, "{r:?}");
    let r = killing_compensator_check(&setup, 1.0).unwrap();
    assert_eq!((r.target, r.provenance), (0.0, Provenance::ExactZero));
    assert!(r.pass, "{r:?}");
}

#[test]
fn compensator_without_killing_is_exactly_zero() {
    let m = ConstModel::new(0.5, 0.3, 0.0);
    let cfg = SimConfig::new(1.0, 1.0 / 32.0);
    let setup = Setup::new(&m, &[0.0], &cfg, 3000, 5);
    let r = killing_compensator_check(&setup, 1.0).unwrap();
    assert_eq!((r.estimate, r.se), (0.0, 0.0));
    assert!(r.pass);
}

#[test]
fn identity_density_series_is_flat() {
    let p = p_model(&full_change()).unwrap();
    let id = IdentityChange::new(StateSpace::non_negative(1));
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    let setup = Setup::new(&p, &[1.0], &cfg, 3000, 6);
    let times = [0.25, 0.5, 0.75, 1.0];
    let r = supermartingale_check(&setup, &id, cfg.n_loc, &times).unwrap();
    assert_eq!(r.estimate, 0.0);
    assert!(r.pass);
    for (_, level, step) in jumpdiff::mccheck::density_series(&setup, &id, cfg.n_loc, &times).unwrap() {
        assert_eq!((level.mean, step.mean), (1.0, 0.0));
    }
}

#[test]
fn positivity_skips_zero_initial_density() {
    let p = p_model(&full_change()).unwrap();
    let c = change_spec(&full_change()).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    let setup = Setup::new(&p, &[1.0], &cfg, 2000, 7);
    for d0 in [0.0, 1.0] {
        let r = positivity_check(&setup, &c, cfg.n_loc, 1.0, d0).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(r.pass);
    }
}

#[test]
fn reports_are_deterministic_across_executors() {
    let params = full_change();
    let p = p_model(&params).unwrap();
    let q = q_model(&params).unwrap();
    let c = change_spec(&params).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    let run = |exec| {
        let mut setup = Setup::new(&p, &[1.0], &cfg, 3000, 8);
        setup.exec = exec;
        setup.fit = true;
        let mut r = density_mass_check(&setup, &c, cfg.n_loc, 1.0, Target::DirectQ(&q)).unwrap();
        r.runtime_ms = 0.0;
        r
    };
    assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
}
