use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jumpdiff::cirjump::{change_spec, p_model, CirJumpParams, JumpLaw, Weight};
use jumpdiff::mccheck::{density_mass_check, Setup, Target};
use jumpdiff::par::Exec;
use jumpdiff::sim::{Batch, SimConfig};

fn params() -> CirJumpParams {
    CirJumpParams {
        tilde_b0: 1.0,
        tilde_gamma0: 0.1,
        tilde_gamma1: 0.05,
        m0: Weight::constant(0.5),
        m1: Weight::constant(0.25),
        ..CirJumpParams::identity(0.5, -1.0, 1.0, 1.0, JumpLaw::Exponential { mean: 0.5 }, 0.2, 1.0)
    }
}

fn simulate(c: &mut Criterion) {
    let p = p_model(&params()).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 256.0);
    let mut group = c.benchmark_group("simulate_8192");
    group.sample_size(10);
    for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| Batch::new(&p, &[1.0], &cfg, 8192, 1).with_exec(exec).simulate().unwrap())
        });
    }
    group.finish();
}

fn density_mass(c: &mut Criterion) {
    let params = params();
    let p = p_model(&params).unwrap();
    let change = change_spec(&params).unwrap();
    let cfg = SimConfig::new(1.0, 1.0 / 256.0);
    let mut group = c.benchmark_group("density_mass_8192");
    group.sample_size(10);
    for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            let mut setup = Setup::new(&p, &[1.0], &cfg, 8192, 2);
            setup.exec = exec;
            b.iter(|| density_mass_check(&setup, &change, cfg.n_loc, 1.0, Target::Oracle(1.0)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulate, density_mass);
criterion_main!(benches);
