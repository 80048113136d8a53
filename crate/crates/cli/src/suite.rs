//! Builds models from a validated configuration and runs the check list.

use std::sync::Arc;

use anyhow::{Context, Result};
use jumpdiff::cdc::{change_from_h, HFunction};
use jumpdiff::cirjump::{change_spec, p_model, q_model};
use jumpdiff::mccheck::{
    density_mass_check, entropy_sign_property, girsanov_checks, identity_density_check, killing_compensator_check,
    martingale_checks, positivity_check, ratio_bounds_property, reweighted_expectation_check, supermartingale_check,
    CheckReport, Named, Setup, Target,
};
use jumpdiff::testfn::{Bump, Coordinate, TestFunction};
use jumpdiff::{transform_model, IdentityChange, MeasureChange, Model, StateSpace};

use crate::config::{Arm, BumpConfig, ChangeKind, CheckConfig, CheckKind, Family, RunConfig, TargetKind};

/// Reference model, change and alternative model of a run.
pub struct World {
    pub p: Arc<dyn Model>,
    pub change: Arc<dyn MeasureChange>,
    pub q: Arc<dyn Model>,
    pub x0: Vec<f64>,
}

pub fn bump(b: &BumpConfig) -> Bump {
    Bump::new(vec![b.center], b.width, b.amplitude)
}

pub fn build_world(cfg: &RunConfig) -> Result<World> {
    let p: Arc<dyn Model> = Arc::new(p_model(&cfg.params)?);
    let x0 = vec![cfg.params.y0];
    let (change, q): (Arc<dyn MeasureChange>, Arc<dyn Model>) = match (cfg.change.kind, cfg.model.family) {
        (ChangeKind::Identity, _) => (Arc::new(IdentityChange::new(StateSpace::non_negative(1))), p.clone()),
        (ChangeKind::Builtin, Family::CirJump) => {
            (Arc::new(change_spec(&cfg.params)?), Arc::new(q_model(&cfg.params)?))
        }
        (ChangeKind::Builtin, Family::CdcDemo) => {
            let h = cfg.model.h.as_ref().context("cdc-demo needs model.h")?;
            let change: Arc<dyn MeasureChange> =
                Arc::new(change_from_h(HFunction::bump(bump(h)), StateSpace::non_negative(1))?);
            let q: Arc<dyn Model> = Arc::new(transform_model(p.clone(), change.clone())?);
            (change, q)
        }
    };
    Ok(World { p, change, q, x0 })
}

/// Run one configured check. Martingale and girsanov yield one report per
/// bump.
pub fn run_check(cfg: &RunConfig, world: &World, c: &CheckConfig) -> Result<Vec<CheckReport>> {
    let t = c.t.unwrap_or(cfg.sim.horizon);
    let n = c.level.unwrap_or(cfg.sim.n_loc);
    let paths = c.paths.unwrap_or(cfg.paths);
    let mut setup = Setup::new(world.p.as_ref(), &world.x0, &cfg.sim, paths, cfg.seed);
    setup.z = c.z.unwrap_or(cfg.z);
    setup.fit = cfg.fit_epsilon;
    let change = world.change.as_ref();
    let name = c.display_name();

    let bumps: Vec<Bump> = c.bumps.iter().map(bump).collect();
    let labels: Vec<String> = c
        .bumps
        .iter()
        .map(|b| format!("c={},w={},a={}", b.center, b.width, b.amplitude))
        .collect();
    let named: Vec<Named<'_>> = labels
        .iter()
        .zip(&bumps)
        .map(|(l, b)| (l.as_str(), b as &dyn TestFunction))
        .collect();

    let target = || -> Result<Target<'_>> {
        Ok(match cfg.target_kind(c) {
            TargetKind::Oracle => Target::Oracle(cfg.oracle(c, t).context("no oracle for this check")?),
            TargetKind::DirectQ => Target::DirectQ(world.q.as_ref()),
        })
    };

    let mut reports = match c.kind {
        CheckKind::IdentityDensity => vec![identity_density_check(&setup, 1.0, c.tolerance.unwrap_or(1e-12))?],
        CheckKind::DensityMass => vec![density_mass_check(&setup, change, n, t, target()?)?],
        CheckKind::ReweightedExpectation => {
            let coord = Coordinate { dim: 1, index: 0 };
            let f: &dyn TestFunction = bumps.first().map_or(&coord as &dyn TestFunction, |b| b);
            vec![reweighted_expectation_check(&setup, change, n, f, t, target()?)?]
        }
        CheckKind::Martingale => martingale_checks(&setup, &named, t)?,
        CheckKind::Girsanov => girsanov_checks(&setup, change, world.q.as_ref(), n, &named, t)?,
        CheckKind::KillingCompensator => {
            if c.arm.unwrap_or_default() == Arm::Q {
                setup.model = world.q.as_ref();
            }
            vec![killing_compensator_check(&setup, t)?]
        }
        CheckKind::Supermartingale => {
            let g = c.grid_points.unwrap_or(10);
            let times = even_grid(&cfg.sim, t, g);
            vec![supermartingale_check(&setup, change, n, &times)?]
        }
        CheckKind::Positivity => vec![positivity_check(&setup, change, n, t, 1.0)?],
        CheckKind::RatioBounds => vec![ratio_bounds_property(c.samples.unwrap_or(1_000_000), cfg.seed)?],
        CheckKind::EntropySign => vec![entropy_sign_property(c.samples.unwrap_or(1_000_000), cfg.seed)?],
    };

    let many = reports.len() > 1;
    for r in &mut reports {
        r.name = if many {
            let suffix = r.name.split_once('[').map_or("", |(_, s)| s);
            format!("{name}[{suffix}")
        } else {
            name.clone()
        };
        if let Some(v) = c.target_override {
            r.target = v;
            r.rejudge();
        }
    }
    Ok(reports)
}

/// `points` grid times evenly spaced in (0, t], snapped to the Δt grid.
pub fn even_grid(sim: &jumpdiff::sim::SimConfig, t: f64, points: usize) -> Vec<f64> {
    let k_t = (t / sim.dt).round() as usize;
    let mut out: Vec<f64> = (1..=points)
        .map(|i| sim.time_of((k_t * i) / points))
        .filter(|&s| s > 0.0)
        .collect();
    out.dedup();
    out
}

pub fn run_suite(cfg: &RunConfig, world: &World) -> Result<Vec<CheckReport>> {
    let mut all = Vec::new();
    for c in &cfg.checks {
        let reports = run_check(cfg, world, c).with_context(|| format!("check {} failed to run", c.display_name()))?;
        all.extend(reports);
    }
    Ok(all)
}
