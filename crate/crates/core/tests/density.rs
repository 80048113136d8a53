mod common;

use approx::assert_relative_eq;
use common::{ConstChange, ConstModel};
use jumpdiff::cirjump::{change_spec, p_model, CirJumpParams, JumpLaw, Weight};
use jumpdiff::density::{accumulate, localization_time, psi, Event};
use jumpdiff::sim::{batch_simulate, SimConfig, Status};
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
fn event_factors() {
    let id = IdentityChange::new(StateSpace::non_negative(1));
    assert_eq!(psi(&id, &[2.0], Event::Killing).unwrap(), 1.0);
    assert_eq!(psi(&id, &[2.0], Event::Jump(&[0.3])).unwrap(), 1.0);
    let c = change_spec(&full_change()).unwrap();
    assert_relative_eq!(psi(&c, &[2.0], Event::Killing).unwrap(), 1.0, epsilon = 1e-15);
    assert_relative_eq!(psi(&c, &[2.0], Event::Jump(&[0.7])).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn identity_change_keeps_the_initial_density() {
    let p = p_model(&full_change()).unwrap();
    let id = IdentityChange::new(StateSpace::non_negative(1));
    let cfg = SimConfig::new(1.0, 1.0 / 128.0);
    for rec in batch_simulate(&p, &[1.0], &cfg, Some(&id), 200, 1).unwrap() {
        let tr = accumulate(&rec, &p, &id, cfg.n_loc, 2.5).unwrap();
        assert!(tr.log_d.iter().all(|&v| v == 2.5f64.ln()));
        assert!(tr.lambda.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn pure_killing_rate_change_in_closed_form() {
    // γ = 0.2, γ̃ = 0.1: survivors gain 0.1 t, a death at τ contributes
    // log ½ + 0.1 τ.
    let m = ConstModel::new(0.0, 0.0, 0.2);
    let c = ConstChange::new(0.0, 0.5, 1.0);
    let cfg = SimConfig::new(2.0, 1.0 / 64.0);
    let mut killed = 0;
    for rec in batch_simulate(&m, &[0.0], &cfg, Some(&c), 500, 2).unwrap() {
        let tr = accumulate(&rec, &m, &c, cfg.n_loc, 1.0).unwrap();
        for k in 0..=cfg.steps() {
            let t = cfg.time_of(k);
            let expected = if t <= rec.kill_time { 0.1 * t } else { 0.5f64.ln() + 0.1 * rec.kill_time };
            assert_relative_eq!(tr.log_d[k], expected, epsilon = 1e-12);
        }
        killed += usize::from(rec.status == Status::Killed);
    }
    assert!(killed > 50);
}

#[test]
fn constant_drift_tilt_accumulates_linearly() {
    let m = ConstModel::new(1.0, 0.0, 0.0);
    let c = ConstChange::new(0.3, 1.0, 1.0);
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    for rec in batch_simulate(&m, &[0.0], &cfg, Some(&c), 50, 3).unwrap() {
        let tr = accumulate(&rec, &m, &c, cfg.n_loc, 1.0).unwrap();
        for k in 0..=cfg.steps() {
            assert_relative_eq!(tr.lambda[k], 0.045 * cfg.time_of(k), epsilon = 1e-12);
        }
    }
}

#[test]
fn components_positivity_and_lambda_on_the_square_root_family() {
    let params = full_change();
    let p = p_model(&params).unwrap();
    let c = change_spec(&params).unwrap();
    let n = 10;
    let mut cfg = SimConfig::new(1.0, 1.0 / 256.0);
    cfg.n_loc = n;
    let mut stopped = 0;
    for rec in batch_simulate(&p, &[1.0], &cfg, Some(&c), 2000, 4).unwrap() {
        let tr = accumulate(&rec, &p, &c, n, 1.0).unwrap();
        assert_eq!(tr.s_n, localization_time(&rec, &c, n));
        stopped += usize::from(tr.s_n < 1.0);
        for k in 0..tr.len() {
            let sum = tr.log_d0 + tr.i_stoch[k] - tr.i_quad[k] - tr.i_comp[k] + tr.j_jump[k];
            assert!((tr.log_d[k] - sum).abs() <= 1e-12 * sum.abs().max(1.0));
            assert!(tr.lambda[k].is_finite());
            if k > 0 {
                assert!(tr.lambda[k] >= tr.lambda[k - 1]);
            }
            if tr.valid(k) {
                assert!(tr.stopped_density(k) > 0.0);
            } else {
                assert_eq!(tr.stopped_density(k), 0.0);
            }
        }
    }
    // Uⁿ = (1/10, 10) is left by a visible share of paths.
    assert!(stopped > 0);
}

#[test]
fn zero_initial_density_is_allowed() {
    let p = p_model(&full_change()).unwrap();
    let c = change_spec(&full_change()).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    let rec = &batch_simulate(&p, &[1.0], &cfg, Some(&c), 1, 5).unwrap()[0];
    let tr = accumulate(rec, &p, &c, cfg.n_loc, 0.0).unwrap();
    assert!((0..tr.len()).all(|k| tr.stopped_density(k) == 0.0));
    assert!(accumulate(rec, &p, &c, cfg.n_loc, -1.0).is_err());
}
