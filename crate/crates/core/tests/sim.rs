mod common;

use common::{ConstChange, ConstModel};
use jumpdiff::cirjump::{mean_oracle, p_model, q_model, CirJumpParams, JumpLaw, Side, Weight};
use jumpdiff::par::Exec;
use jumpdiff::rng::split;
use jumpdiff::sim::{batch_simulate, simulate_path, Batch, SimConfig, Status};
use jumpdiff::stats::Moments;

fn reference(lambda: f64) -> CirJumpParams {
    CirJumpParams::identity(0.5, -1.0, 1.0, lambda, JumpLaw::Exponential { mean: 0.5 }, 0.2, 1.0)
}

#[test]
fn zero_model_path_is_constant() {
    let m = ConstModel::zero();
    let cfg = SimConfig::new(1.0, 1.0 / 32.0);
    let dom = ConstChange::new(0.0, 1.0, 1.0);
    let rec = simulate_path(&m, &[1.5], &cfg, Some(&dom), 1).unwrap();
    assert_eq!(rec.status, Status::Alive);
    assert_eq!(rec.t_n, f64::INFINITY);
    assert_eq!(rec.r_n, f64::INFINITY);
    for k in 0..=cfg.steps() {
        assert_eq!(rec.state(k).point(), Some(&[1.5][..]));
    }
}

#[test]
fn constant_killing_survival_is_exponential() {
    let m = ConstModel::new(0.0, 0.0, 0.2);
    let cfg = SimConfig::new(1.0, 1.0 / 16.0);
    let steps = cfg.steps();
    let ms = Batch::new(&m, &[0.0], &cfg, 100_000, 2)
        .moments(steps + 1, || (), |_, rec, out| {
            for (k, o) in out.iter_mut().enumerate() {
                *o = if rec.state(k).is_cemetery() { 0.0 } else { 1.0 };
            }
            Ok(())
        })
        .unwrap();
    for (k, m) in ms.iter().enumerate() {
        let target = (-0.2 * cfg.time_of(k)).exp();
        assert!((m.mean - target).abs() <= 3.0 * m.se() + 1e-12, "t_{k}: {} vs {target}", m.mean);
    }
}

#[test]
fn cir_mean_without_jumps() {
    // γ must be positive; at 1e-300 no path is ever killed.
    let params = CirJumpParams { gamma: 1e-300, ..reference(0.0) };
    let p = p_model(&params).unwrap();
    let cfg = SimConfig::new(1.0, 2f64.powi(-10));
    let k = cfg.steps();
    let ms = Batch::new(&p, &[1.0], &cfg, 20_000, 3)
        .moments(1, || (), |_, rec, out| {
            out[0] = rec.state(k).point().map_or(0.0, |x| x[0]);
            Ok(())
        })
        .unwrap();
    let target = (-1f64).exp() + 0.5 * (1.0 - (-1f64).exp());
    assert!((target - 0.6839397).abs() < 1e-7);
    assert!((target - mean_oracle(&params, Side::P, 1.0).unwrap()).abs() < 1e-15);
    // Euler bias on this linear drift is far below 1e-3 at Δt = 2⁻¹⁰.
    assert!((ms[0].mean - target).abs() <= 3.0 * ms[0].se() + 1e-3, "{:?}", ms[0]);
}

#[test]
fn single_path_batch_equals_simulate_path() {
    let p = p_model(&reference(1.0)).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 128.0);
    let batch = batch_simulate(&p, &[1.0], &cfg, None, 1, 77).unwrap();
    assert_eq!(batch[0], simulate_path(&p, &[1.0], &cfg, None, split(77, 0)).unwrap());
}

#[test]
fn batches_are_reproducible_and_partition_the_stream() {
    let p = p_model(&reference(1.0)).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 128.0);
    let a = batch_simulate(&p, &[1.0], &cfg, None, 2500, 9).unwrap();
    let b = batch_simulate(&p, &[1.0], &cfg, None, 2500, 9).unwrap();
    assert_eq!(a, b);
    // Paths on both sides of the chunk boundaries, simulated one by one.
    for i in [0usize, 1023, 1024, 2047, 2048, 2499] {
        assert_eq!(a[i], simulate_path(&p, &[1.0], &cfg, None, split(9, i as u64)).unwrap());
    }
    let seq = Batch::new(&p, &[1.0], &cfg, 2500, 9).with_exec(Exec::Sequential).simulate().unwrap();
    assert_eq!(a, seq);
}

#[test]
fn path_invariants_hold() {
    let params = CirJumpParams {
        tilde_b0: 1.0,
        tilde_gamma0: 0.1,
        tilde_gamma1: 0.05,
        m0: Weight::constant(0.5),
        m1: Weight::constant(0.25),
        gamma: 1.5,
        ..reference(3.0)
    };
    let q = q_model(&params).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 256.0);
    let recs = batch_simulate(&q, &[1.0], &cfg, None, 3000, 4).unwrap();
    let mut killed = 0;
    for rec in &recs {
        let t_prev = rec.jumps().map(|j| j.time).collect::<Vec<_>>();
        assert!(t_prev.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rec.s_n, rec.r_n.min(rec.t_n).min(f64::from(cfg.n_loc)));
        for k in 0..=cfg.steps() {
            match rec.state(k).point() {
                Some(x) => assert!(x[0] >= 0.0 && rec.time(k) <= rec.kill_time),
                None => assert!(rec.time(k) >= rec.kill_time),
            }
        }
        if let Some(kk) = rec.kill_step() {
            killed += 1;
            assert!((kk + 1..=cfg.steps()).all(|k| rec.state(k).is_cemetery()));
        }
    }
    assert!(killed > 100);
}

#[test]
fn constant_intensity_jump_counts() {
    let p = p_model(&reference(2.0)).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    let ms = Batch::new(&p, &[1.0], &cfg, 20_000, 5)
        .moments(1, || (), |_, rec, out| {
            // Count jumps up to min(τ, 1): the Poisson clock stops at death.
            out[0] = rec.n_jumps() as f64 - 2.0 * rec.kill_time.min(1.0);
            Ok(())
        })
        .unwrap();
    assert!(ms[0].mean.abs() <= 3.0 * ms[0].se(), "{:?}", ms[0]);
}

#[test]
fn sequential_and_parallel_moments_agree_bitwise() {
    let p = p_model(&reference(1.0)).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 64.0);
    let run = |exec| -> Vec<Moments> {
        Batch::new(&p, &[1.0], &cfg, 5000, 6)
            .with_exec(exec)
            .moments(2, || (), |_, rec, out| {
                out[0] = rec.state(cfg.steps()).point().map_or(0.0, |x| x[0]);
                out[1] = rec.n_jumps() as f64;
                Ok(())
            })
            .unwrap()
    };
    assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
}
