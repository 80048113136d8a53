use approx::assert_relative_eq;
use jumpdiff::cirjump::{
    change_spec, feller_ok, mean_oracle, p_model, q_model, survival_oracle, CirJumpParams, JumpLaw, Side, Weight,
};
use jumpdiff::mccheck::{reweighted_expectation_check, Setup, Target};
use jumpdiff::sim::{Batch, SimConfig};
use jumpdiff::testfn::Coordinate;
use jumpdiff::{IdentityChange, MeasureChange, Model, StateSpace};

fn reference() -> CirJumpParams {
    CirJumpParams::identity(0.5, -1.0, 1.0, 1.0, JumpLaw::Exponential { mean: 0.5 }, 0.2, 1.0)
}

fn full_change() -> CirJumpParams {
    CirJumpParams {
        tilde_b0: 1.0,
        tilde_gamma0: 0.1,
        tilde_gamma1: 0.05,
        m0: Weight::constant(0.5),
        m1: Weight::constant(0.25),
        ..reference()
    }
}

#[test]
fn p_model_fields() {
    let p = p_model(&reference()).unwrap();
    let mut out = [0.0];
    p.diffusion(&[0.0], &mut out).unwrap();
    assert_eq!(out[0], 0.0);
    p.drift(&[2.0], &mut out).unwrap();
    assert_eq!(out[0], -1.5);
    p.kernel().first_moment(&[1.0], &mut out).unwrap();
    assert_relative_eq!(out[0], 0.5, epsilon = 1e-12);
}

#[test]
fn q_kernel() {
    let p = p_model(&reference()).unwrap();
    let q = q_model(&reference()).unwrap();
    for x in [0.1, 1.0, 3.0] {
        for g in [|xi: f64| xi, |xi: f64| (-3.0 * xi).exp()] {
            let a = p.kernel().integrate(&[x], &mut |xi| g(xi[0]), None).unwrap();
            let b = q.kernel().integrate(&[x], &mut |xi| g(xi[0]), None).unwrap();
            assert_eq!(a, b);
        }
    }
    let q = q_model(&full_change()).unwrap();
    assert_relative_eq!(q.kernel().intensity(&[2.0]).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn jump_entropy_is_finite() {
    for params in [full_change(), CirJumpParams { m0: Weight { coef: 2.0, rate: 3.0 }, ..full_change() }] {
        let p = p_model(&params).unwrap();
        let c = change_spec(&params).unwrap();
        for x in [0.1, 1.0, 10.0] {
            let v = c.jump_entropy(p.kernel(), &[x]).unwrap();
            assert!(v.is_finite() && v >= 0.0, "x = {x}: {v}");
        }
    }
}

#[test]
fn change_reference_values() {
    // b̃ = b, γ̃₀ = γ, γ̃₁ = 0, m₀ ≡ 1, m₁ ≡ 0.
    let id = change_spec(&reference()).unwrap();
    let mut phi1 = [1.0];
    for x in [0.0, 0.5, 2.0] {
        id.drift_tilt(&[x], &mut phi1).unwrap();
        assert_eq!(phi1[0], 0.0);
        assert_eq!(id.killing_factor(&[x]).unwrap(), 1.0);
        assert_eq!(id.jump_factor(&[x], &[0.3]).unwrap(), 1.0);
    }
    assert!(id.includes_zero());

    let drift_only = change_spec(&CirJumpParams { tilde_b0: 1.0, ..reference() }).unwrap();
    drift_only.drift_tilt(&[2.0], &mut phi1).unwrap();
    assert_relative_eq!(phi1[0], 0.25, epsilon = 1e-15);
    assert!(!drift_only.includes_zero());

    let c = change_spec(&full_change()).unwrap();
    let p = p_model(&full_change()).unwrap();
    assert_relative_eq!(c.compensator_diff(p.kernel(), &[2.0]).unwrap(), 0.0, epsilon = 1e-15);
}

#[test]
fn feller_condition() {
    assert!(feller_ok(0.5, 1.0));
    assert!(!feller_ok(0.49, 1.0));
    assert!(feller_ok(2.0, 1.5));
}

#[test]
fn oracle_reference_values() {
    let p = reference();
    assert_eq!(mean_oracle(&p, Side::P, 0.0).unwrap(), 1.0);
    assert_relative_eq!(mean_oracle(&p, Side::P, 1.0).unwrap(), 1.0, epsilon = 1e-15);
    let pure = CirJumpParams { lambda: 0.0, ..p };
    let e = (-1f64).exp();
    assert_relative_eq!(mean_oracle(&pure, Side::P, 1.0).unwrap(), e + 0.5 * (e - 1.0) / -1.0, epsilon = 1e-15);
    assert_eq!(survival_oracle(&p, Side::P, 0.0).unwrap(), 1.0);
    assert_relative_eq!(survival_oracle(&p, Side::P, 1.0).unwrap(), 0.818731, epsilon = 1e-6);
    let q = CirJumpParams { tilde_gamma0: 0.1, ..p };
    assert_relative_eq!(survival_oracle(&q, Side::Q, 2.0).unwrap(), 0.818731, epsilon = 1e-6);
    assert!(mean_oracle(&full_change(), Side::Q, 1.0).is_err());
}

#[test]
fn q_paths_stay_positive() {
    let q = q_model(&full_change()).unwrap();
    let cfg = SimConfig::new(1.0, 2f64.powi(-10));
    let touched = Batch::new(&q, &[1.0], &cfg, 100_000, 3)
        .fold_chunks(
            || ((), 0u64),
            |_, acc, _, rec| {
                let low = (0..rec.recorded()).filter_map(|k| rec.state(k).point()).any(|x| x[0] <= 0.0);
                *acc += u64::from(low);
                Ok(())
            },
        )
        .unwrap()
        .into_iter()
        .sum::<u64>();
    // Full truncation can touch 0 only as a scheme artefact; allow < 1e-3.
    assert!(touched < 100, "{touched} of 1e5 paths touched 0");
}

#[test]
fn mean_oracles_match_simulation() {
    let cfg = SimConfig::new(1.0, 2f64.powi(-9));
    let x = Coordinate { dim: 1, index: 0 };
    let params = CirJumpParams { tilde_b0: 1.0, tilde_gamma0: 0.1, ..reference() };
    for (side, model) in [(Side::P, p_model(&params).unwrap()), (Side::Q, q_model(&params).unwrap())] {
        let target = mean_oracle(&params, side, 1.0).unwrap() * survival_oracle(&params, side, 1.0).unwrap();
        let id = IdentityChange::new(StateSpace::non_negative(1));
        let mut setup = Setup::new(&model, &[1.0], &cfg, 20_000, 4);
        setup.fit = true;
        let r = reweighted_expectation_check(&setup, &id, cfg.n_loc, &x, 1.0, Target::Oracle(target)).unwrap();
        assert!(r.pass, "{side:?}: {r:?}");
    }
}

#[test]
fn invalid_parameters_are_all_reported() {
    let bad = CirJumpParams {
        sigma: -1.0,
        tilde_b0: 0.1,
        tilde_gamma0: 0.0,
        tilde_gamma1: 0.0,
        ..reference()
    };
    let v = bad.violations();
    assert!(v.len() >= 2, "{v:?}");
    assert!(p_model(&bad).is_err());
}
