//! The four subcommands. Each returns the number of failed checks.

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use jumpdiff::cdc::{
    change_from_h, gamma_explicit, gamma_via_generator, pathwise_gap, tilde_generator_cdc, HFunction,
};
use jumpdiff::cirjump::{survival_oracle, Side};
use jumpdiff::density::{accumulate_into, DensityScratch, DensityTrace};
use jumpdiff::mccheck::{arm_seed, density_series, CheckReport, Setup};
use jumpdiff::model::{lambda_parts, scan_sufficient_conditions};
use jumpdiff::numgen::apply_generator;
use jumpdiff::rng::PathRng;
use jumpdiff::sim::{batch_simulate, Batch, SimConfig, Status};
use jumpdiff::stats::Moments;
use jumpdiff::testfn::{Bump, TestFunction};
use jumpdiff::{transform_model, Model, StateSpace};
use rand::{Rng, SeedableRng};

use crate::config::{ChangeKind, Family, RunConfig};
use crate::output::{fmt_f64, write_report_csv, write_report_json, Table};
use crate::suite::{build_world, bump, even_grid, run_suite, World};

/// Seed offsets of the auxiliary runs, kept away from the check seeds.
const PLOT_ARM: u64 = 0x706C;
const DEMO_ARM: u64 = 0x6364;

pub fn verify(cfg: &RunConfig, out: &Path) -> Result<Vec<CheckReport>> {
    let world = build_world(cfg)?;
    let reports = run_suite(cfg, &world)?;
    write_report_csv(&out.join("report.csv"), &reports).context("writing report.csv")?;
    write_report_json(&out.join("report.json"), &reports).context("writing report.json")?;
    write_plots(cfg, &world, out)?;
    Ok(reports)
}

/// density_mean.csv, survival.csv and lambda_hist.csv.
fn write_plots(cfg: &RunConfig, world: &World, out: &Path) -> Result<()> {
    let p = world.p.as_ref();
    let change = world.change.as_ref();
    let n = cfg.sim.n_loc;
    let seed = arm_seed(cfg.seed, PLOT_ARM);
    let times = even_grid(&cfg.sim, cfg.sim.horizon, cfg.plots.grid_points);
    let setup = Setup::new(p, &world.x0, &cfg.sim, cfg.plots.paths, seed);

    let series = density_series(&setup, change, n, &times)?;
    let mut t = Table::create(&out.join("density_mean.csv"), &["t", "mean", "se", "lower", "upper"])?;
    t.row(["0e0", "1e0", "0e0", "1e0", "1e0"].map(String::from))?;
    for (s, m, _) in &series {
        let band = cfg.z * m.se();
        t.row([s, &m.mean, &m.se(), &(m.mean - band), &(m.mean + band)].map(|v| fmt_f64(*v)))?;
    }
    t.finish()?;

    // Survival indicators at each grid time and Λ at the horizon, per path.
    let ks: Vec<usize> = times.iter().map(|s| cfg.sim.grid_index(*s)).collect::<jumpdiff::Result<_>>()?;
    let w = ks.len();
    let chunks = Batch::new(p, &world.x0, &cfg.sim, cfg.plots.paths, seed)
        .with_domain(change)
        .fold_chunks(
            || {
                let work = (DensityTrace::default(), DensityScratch::new(p.dim()));
                (work, (vec![Moments::default(); w], Vec::new()))
            },
            |(trace, scratch), (surv, lambdas), _, rec| {
                for (m, &k) in surv.iter_mut().zip(&ks) {
                    m.push(if rec.state(k).is_cemetery() { 0.0 } else { 1.0 });
                }
                accumulate_into(rec, p, change, n, 1.0, trace, scratch)?;
                lambdas.push(*trace.lambda.last().expect("trace has the initial point"));
                Ok(())
            },
        )?;
    let mut surv = vec![Moments::default(); w];
    let mut lambdas = Vec::new();
    for (s, l) in chunks {
        for (a, b) in surv.iter_mut().zip(&s) {
            *a = a.merge(b);
        }
        lambdas.extend(l);
    }
    let mut t = Table::create(&out.join("survival.csv"), &["t", "empirical", "se", "oracle"])?;
    for (s, m) in times.iter().zip(&surv) {
        let oracle = survival_oracle(&cfg.params, Side::P, *s).map(fmt_f64).unwrap_or_default();
        t.row([fmt_f64(*s), fmt_f64(m.mean), fmt_f64(m.se()), oracle])?;
    }
    t.finish()?;

    let bins = cfg.plots.lambda_bins;
    let top = lambdas.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let width = if top > 0.0 { top / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for v in &lambdas {
        if v.is_finite() {
            counts[((v / width) as usize).min(bins - 1)] += 1;
        }
    }
    let mut t = Table::create(&out.join("lambda_hist.csv"), &["lower", "upper", "count"])?;
    for (i, c) in counts.iter().enumerate() {
        t.row([fmt_f64(i as f64 * width), fmt_f64((i + 1) as f64 * width), c.to_string()])?;
    }
    t.finish()?;
    Ok(())
}

/// Path dumps: paths.csv, jumps.csv and path_summary.csv.
pub fn simulate(cfg: &RunConfig, out: &Path, paths: u64, under_q: bool) -> Result<()> {
    let world = build_world(cfg)?;
    let model = if under_q { world.q.as_ref() } else { world.p.as_ref() };
    let recs = batch_simulate(
        model,
        &world.x0,
        &cfg.sim,
        Some(world.change.as_ref()),
        paths,
        cfg.seed,
    )?;
    let mut states = Table::create(&out.join("paths.csv"), &["path_id", "t", "x", "status"])?;
    let mut jumps = Table::create(&out.join("jumps.csv"), &["path_id", "step", "t", "pre", "xi"])?;
    let mut summary = Table::create(
        &out.join("path_summary.csv"),
        &["path_id", "status", "kill_time", "t_n", "r_n", "s_n", "jumps"],
    )?;
    for (i, rec) in recs.iter().enumerate() {
        for k in 0..=rec.steps {
            let state = rec.state(k);
            let x = state.point().map_or_else(|| "delta".to_string(), |x| fmt_f64(x[0]));
            // A killed path is alive at every recorded point; a stopped one
            // stops at its last recorded point.
            let last_alive = match rec.status {
                Status::Alive => usize::MAX,
                Status::Killed => rec.recorded(),
                Status::Capped | Status::Exited => rec.recorded() - 1,
            };
            let status = if k < last_alive { "alive" } else { rec.status.as_str() };
            states.row([i.to_string(), fmt_f64(rec.time(k)), x, status.to_string()])?;
        }
        for j in rec.jumps() {
            jumps.row([
                i.to_string(),
                j.step.to_string(),
                fmt_f64(j.time),
                fmt_f64(j.pre[0]),
                fmt_f64(j.xi[0]),
            ])?;
        }
        summary.row([
            i.to_string(),
            rec.status.as_str().to_string(),
            fmt_f64(rec.kill_time),
            fmt_f64(rec.t_n),
            fmt_f64(rec.r_n),
            fmt_f64(rec.s_n),
            rec.n_jumps().to_string(),
        ])?;
    }
    states.finish()?;
    jumps.finish()?;
    summary.finish()?;
    let killed = recs.iter().filter(|r| r.status == Status::Killed).count();
    println!("simulated {} paths, {killed} killed", recs.len());
    Ok(())
}

/// The three summands of the Λ integrand on a log grid inside Uⁿ.
pub fn scan(cfg: &RunConfig, out: &Path) -> Result<()> {
    let world = build_world(cfg)?;
    let (p, change) = (world.p.as_ref(), world.change.as_ref());
    let n = cfg.sim.n_loc;
    let s = &cfg.scan;
    let grid: Vec<Vec<f64>> = (0..s.points)
        .map(|i| {
            let u = i as f64 / (s.points - 1) as f64;
            vec![(s.lo.ln() + u * (s.hi.ln() - s.lo.ln())).exp()]
        })
        .filter(|x| change.in_level(n, x))
        .collect();
    let mut t = Table::create(&out.join("scan.csv"), &["x", "quadratic", "killing", "jump", "integrand"])?;
    for x in &grid {
        let [q, k, j] = lambda_parts(p, change, x)?;
        t.row([x[0], q, k, j, 0.5 * q + k + j].map(fmt_f64))?;
    }
    t.finish()?;
    let rep = scan_sufficient_conditions(p, change, n, &grid)?;
    let mut t = Table::create(&out.join("scan_summary.csv"), &["term", "max", "argmax_x", "at_edge"])?;
    for (i, term) in ["quadratic", "killing", "jump"].iter().enumerate() {
        t.row([
            term.to_string(),
            fmt_f64(rep.maxima[i]),
            fmt_f64(grid[rep.argmax[i]][0]),
            rep.at_edge[i].to_string(),
        ])?;
        println!(
            "{term:>9}: max {:.6e} at x = {:.4e}{}",
            rep.maxima[i],
            grid[rep.argmax[i]][0],
            if rep.at_edge[i] { " (grid edge)" } else { "" }
        );
    }
    t.finish()?;
    Ok(())
}

/// A random bump with centre, width and amplitude in the given ranges.
pub fn random_bump(rng: &mut PathRng) -> Bump {
    Bump::new(
        vec![rng.random_range(0.2..2.5)],
        rng.random_range(0.3..1.2),
        rng.random_range(-1.0..1.0),
    )
}

/// Carré-du-champ identities: Γ by definition and by formula, 𝒜̃ by
/// formula and by transformation, and the pathwise density comparison at
/// Δt and Δt/2.
pub fn cdc_demo(cfg: &RunConfig, out: &Path) -> Result<Vec<CheckReport>> {
    let world = build_world(cfg)?;
    let p = world.p.clone();
    let h_cfg = match (cfg.model.family, &cfg.model.h) {
        (Family::CdcDemo, Some(h)) => *h,
        _ => anyhow::bail!("cdc-demo needs model.family = \"cdc-demo\" with model.h"),
    };
    let h = HFunction::bump(bump(&h_cfg));
    let d = &cfg.demo;
    let mut rng = PathRng::seed_from_u64(arm_seed(cfg.seed, DEMO_ARM));
    let mut reports = Vec::new();

    let mut worst_gamma: f64 = 0.0;
    for _ in 0..d.points {
        let f: Arc<dyn TestFunction> = Arc::new(random_bump(&mut rng));
        let g: Arc<dyn TestFunction> = Arc::new(random_bump(&mut rng));
        let x = [rng.random_range(0.05..3.0)];
        let a = gamma_explicit(p.as_ref(), f.as_ref(), g.as_ref(), &x)?;
        let b = gamma_via_generator(p.as_ref(), f, g, &x)?;
        worst_gamma = worst_gamma.max((a - b).abs());
    }
    reports.push(exact("gamma_definition_vs_formula", worst_gamma, d.tolerance, d.points, cfg.seed));

    let change = Arc::new(change_from_h(h.clone(), StateSpace::non_negative(1))?);
    let tilde = transform_model(p.clone(), change)?;
    let mut worst_tilde: f64 = 0.0;
    for _ in 0..d.points {
        let f = random_bump(&mut rng);
        let x = [rng.random_range(0.05..3.0)];
        let a = tilde_generator_cdc(p.as_ref(), &h, &f, &x)?;
        let b = apply_generator(&tilde, &f, &x)?;
        worst_tilde = worst_tilde.max((a - b).abs());
    }
    reports.push(exact("tilde_generator_vs_transform", worst_tilde, d.tolerance, d.points, cfg.seed));

    let (coarse_err, fine_err) = density_gaps(p.as_ref(), &h, &world.x0, &cfg.sim, cfg.sim.n_loc, d.paths, cfg.seed)?;
    let ratio = coarse_err / fine_err;
    let mut r = CheckReport::new(
        "explicit_density_convergence_ratio",
        ratio,
        0.0,
        2.0,
        jumpdiff::mccheck::Provenance::AnalyticOracle,
        cfg.z,
        0.4,
        d.paths,
        cfg.seed,
    );
    r.rejudge();
    reports.push(r);
    let mut t = Table::create(&out.join("cdc_density_gap.csv"), &["dt", "rms_max_gap"])?;
    t.row([fmt_f64(cfg.sim.dt), fmt_f64(coarse_err)])?;
    t.row([fmt_f64(cfg.sim.dt / 2.0), fmt_f64(fine_err)])?;
    t.finish()?;

    write_report_csv(&out.join("cdc_report.csv"), &reports)?;
    write_report_json(&out.join("cdc_report.json"), &reports)?;
    if cfg.change.kind == ChangeKind::Identity {
        eprintln!("note: cdc-demo always uses the change generated by model.h");
    }
    Ok(reports)
}

/// RMS of the max pathwise gap at Δt (two substeps) and Δt/2, on coupled
/// paths.
pub fn density_gaps(
    p: &dyn Model,
    h: &HFunction,
    x0: &[f64],
    sim: &SimConfig,
    n: u32,
    paths: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut coarse = sim.clone();
    coarse.substeps *= 2;
    let fine = coarse.halved();
    let seed = arm_seed(seed, DEMO_ARM);
    Ok((
        pathwise_gap(h, p, x0, &coarse, n, paths, seed)?,
        pathwise_gap(h, p, x0, &fine, n, paths, seed)?,
    ))
}

fn exact(name: &str, worst: f64, tol: f64, n: usize, seed: u64) -> CheckReport {
    CheckReport::new(
        name,
        worst,
        0.0,
        0.0,
        jumpdiff::mccheck::Provenance::ExactZero,
        0.0,
        tol,
        n as u64,
        seed,
    )
}
