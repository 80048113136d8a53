//! Monte Carlo checks of the density identities.
//!
//! Every check reports an estimate, its standard error from the per-path
//! sample variance, a target, and passes iff
//! |estimate − target| ≤ z·SE + ε, where ε is a discretisation allowance.
//!
//! With `fit` enabled a check is run twice on coupled grids: once at Δt with
//! two Brownian substeps per step and once at Δt/2 with one, both driven by
//! the same normals. For the two biases d = estimate − target, weak order one
//! gives bias(Δt) ≈ 2(d_Δt − d_Δt/2); ε is twice that, 4|d_Δt − d_Δt/2|, and
//! the reported estimate is the Δt run. Without `fit`, ε = 0.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::density::{accumulate_into, localization_time, DensityScratch, DensityTrace};
use crate::error::Result;
use crate::model::{entropy_l, IdentityChange, MeasureChange, Model};
use crate::numgen::{martingale_increment_with, Generator};
use crate::par::Exec;
use crate::rng::{mix64, PathRng};
use crate::sim::{Batch, PathRecord, SimConfig};
use crate::stats::Moments;
use crate::testfn::{value_at, Constant, TestFunction};

pub const DEFAULT_Z: f64 = 3.0;

/// Where a target value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AnalyticOracle,
    DirectQ,
    ExactZero,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::AnalyticOracle => "analytic-oracle",
            Provenance::DirectQ => "direct-q",
            Provenance::ExactZero => "exact-zero",
        }
    }
}

/// Two-step-size bias fit behind ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonFit {
    pub dt: f64,
    /// estimate − target at Δt.
    pub bias_dt: f64,
    /// estimate − target at Δt/2.
    pub bias_half: f64,
    /// C in bias ≈ C·Δt.
    pub slope: f64,
}

impl EpsilonFit {
    fn new(dt: f64, bias_dt: f64, bias_half: f64) -> Self {
        Self {
            dt,
            bias_dt,
            bias_half,
            slope: (bias_dt - bias_half) / (0.5 * dt),
        }
    }

    /// Twice the bias at Δt extrapolated from the slope.
    pub fn epsilon(&self) -> f64 {
        2.0 * (self.slope * self.dt).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
    pub provenance: Provenance,
    pub z: f64,
    pub epsilon: f64,
    pub pass: bool,
    pub n: u64,
    pub seed: u64,
    /// Wall-clock time; excluded from serialised reports so that they are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub runtime_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<EpsilonFit>,
}

impl CheckReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        estimate: f64,
        se: f64,
        target: f64,
        provenance: Provenance,
        z: f64,
        epsilon: f64,
        n: u64,
        seed: u64,
    ) -> Self {
        let mut r = Self {
            name: name.into(),
            estimate,
            se,
            target,
            provenance,
            z,
            epsilon,
            pass: false,
            n,
            seed,
            runtime_ms: 0.0,
            fit: None,
        };
        r.rejudge();
        r
    }

    /// Recompute `pass` from the numeric fields.
    pub fn rejudge(&mut self) {
        self.pass = (self.estimate - self.target).abs() <= self.z * self.se + self.epsilon;
    }

    fn timed(mut self, start: Instant) -> Self {
        self.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }
}

/// Shared inputs of the simulation-based checks.
#[derive(Clone, Copy)]
pub struct Setup<'a> {
    /// The reference model P.
    pub model: &'a dyn Model,
    pub x0: &'a [f64],
    pub cfg: &'a SimConfig,
    pub paths: u64,
    pub seed: u64,
    pub z: f64,
    pub exec: Exec,
    pub fit: bool,
}

impl<'a> Setup<'a> {
    pub fn new(model: &'a dyn Model, x0: &'a [f64], cfg: &'a SimConfig, paths: u64, seed: u64) -> Self {
        Self {
            model,
            x0,
            cfg,
            paths,
            seed,
            z: DEFAULT_Z,
            exec: Exec::default(),
            fit: false,
        }
    }
}

/// The two simulation arms of a check draw from disjoint seed families.
const ARM_P: u64 = 0x50;
const ARM_Q: u64 = 0x51;

pub fn arm_seed(seed: u64, arm: u64) -> u64 {
    mix64(seed ^ mix64(arm))
}

/// How the right-hand side of an identity is obtained.
#[derive(Clone, Copy)]
pub enum Target<'a> {
    Oracle(f64),
    /// Simulate this model directly, localised by the same change.
    DirectQ(&'a dyn Model),
}

/// One measured quantity: the P-side sample and the target with its SE.
#[derive(Debug, Clone, Copy)]
struct Measured {
    est: Moments,
    target: f64,
    target_se: f64,
}

impl Measured {
    fn bias(&self) -> f64 {
        self.est.mean - self.target
    }

    fn se(&self) -> f64 {
        self.est.se().hypot(self.target_se)
    }
}

/// Evaluate at the configured grid, or at the coupled pair when fitting.
fn fitted(
    setup: &Setup<'_>,
    eval: impl Fn(&SimConfig) -> Result<Vec<Measured>>,
) -> Result<Vec<(Measured, f64, Option<EpsilonFit>)>> {
    if !setup.fit {
        return Ok(eval(setup.cfg)?.into_iter().map(|m| (m, 0.0, None)).collect());
    }
    let mut coarse = setup.cfg.clone();
    coarse.substeps *= 2;
    let fine = coarse.halved();
    let c = eval(&coarse)?;
    let f = eval(&fine)?;
    Ok(c
        .into_iter()
        .zip(f)
        .map(|(c, f)| {
            let fit = EpsilonFit::new(coarse.dt, c.bias(), f.bias());
            (c, fit.epsilon(), Some(fit))
        })
        .collect())
}

fn report(
    name: String,
    m: Measured,
    eps: f64,
    fit: Option<EpsilonFit>,
    provenance: Provenance,
    setup: &Setup<'_>,
    start: Instant,
) -> CheckReport {
    let mut r = CheckReport::new(
        name,
        m.est.mean,
        m.se(),
        m.target,
        provenance,
        setup.z,
        eps,
        m.est.n,
        setup.seed,
    );
    r.fit = fit;
    r.timed(start)
}

fn localized(cfg: &SimConfig, n: u32) -> SimConfig {
    SimConfig { n_loc: n, ..cfg.clone() }
}

struct DensityWork {
    trace: DensityTrace,
    scratch: DensityScratch,
}

impl DensityWork {
    fn new(d: usize) -> Self {
        Self {
            trace: DensityTrace::default(),
            scratch: DensityScratch::new(d),
        }
    }
}

/// Per-path values of D_t·f(X_t)·𝟙{t < Sₙ} under P for each f.
fn reweighted_moments(
    setup: &Setup<'_>,
    cfg: &SimConfig,
    change: &dyn MeasureChange,
    n: u32,
    fs: &[&dyn TestFunction],
    t: f64,
) -> Result<Vec<Moments>> {
    let k = cfg.grid_index(t)?;
    let model = setup.model;
    Batch::new(model, setup.x0, cfg, setup.paths, arm_seed(setup.seed, ARM_P))
        .with_domain(change)
        .with_exec(setup.exec)
        .moments(
            fs.len(),
            || DensityWork::new(model.dim()),
            |w, rec, out| {
                accumulate_into(rec, model, change, n, 1.0, &mut w.trace, &mut w.scratch)?;
                if w.trace.valid(k) {
                    let d = w.trace.log_d[k].exp();
                    for (o, f) in out.iter_mut().zip(fs) {
                        *o = d * value_at(*f, rec.state(k));
                    }
                }
                Ok(())
            },
        )
}

/// Per-path values of f(X_t)·𝟙{t < Sₙ} under a directly simulated model.
fn direct_moments(
    setup: &Setup<'_>,
    cfg: &SimConfig,
    q: &dyn Model,
    change: &dyn MeasureChange,
    n: u32,
    fs: &[&dyn TestFunction],
    t: f64,
) -> Result<Vec<Moments>> {
    let k = cfg.grid_index(t)?;
    Batch::new(q, setup.x0, cfg, setup.paths, arm_seed(setup.seed, ARM_Q))
        .with_domain(change)
        .with_exec(setup.exec)
        .moments(
            fs.len(),
            || (),
            |_, rec, out| {
                if t < localization_time(rec, change, n) {
                    for (o, f) in out.iter_mut().zip(fs) {
                        *o = value_at(*f, rec.state(k));
                    }
                }
                Ok(())
            },
        )
}

/// E_P[D_t f(X_t) 𝟙{t < Sₙ}] against Q[f(X_t); t < Sₙ], with f(Δ) = 0.
pub fn reweighted_expectation_check(
    setup: &Setup<'_>,
    change: &dyn MeasureChange,
    n: u32,
    f: &dyn TestFunction,
    t: f64,
    target: Target<'_>,
) -> Result<CheckReport> {
    reweighted_check_named("reweighted_expectation", setup, change, n, f, t, target)
}

fn reweighted_check_named(
    name: &str,
    setup: &Setup<'_>,
    change: &dyn MeasureChange,
    n: u32,
    f: &dyn TestFunction,
    t: f64,
    target: Target<'_>,
) -> Result<CheckReport> {
    let start = Instant::now();
    let fs = [f];
    let out = fitted(setup, |cfg| {
        let cfg = localized(cfg, n);
        let est = reweighted_moments(setup, &cfg, change, n, &fs, t)?[0];
        let (target, target_se) = match target {
            Target::Oracle(v) => (v, 0.0),
            Target::DirectQ(q) => {
                let m = direct_moments(setup, &cfg, q, change, n, &fs, t)?[0];
                (m.mean, m.se())
            }
        };
        Ok(vec![Measured { est, target, target_se }])
    })?;
    let (m, eps, fit) = out[0];
    let prov = match target {
        Target::Oracle(_) => Provenance::AnalyticOracle,
        Target::DirectQ(_) => Provenance::DirectQ,
    };
    Ok(report(name.to_string(), m, eps, fit, prov, setup, start))
}

/// E_P[D_t 𝟙{t < Sₙ} 𝟙{X_t ∈ E}] against Q[t < Sₙ, not killed by t].
pub fn density_mass_check(
    setup: &Setup<'_>,
    change: &dyn MeasureChange,
    n: u32,
    t: f64,
    target: Target<'_>,
) -> Result<CheckReport> {
    let one = Constant {
        dim: setup.model.dim(),
        value: 1.0,
    };
    reweighted_check_named("density_mass", setup, change, n, &one, t, target)
}

/// A named test function for the martingale checks.
pub type Named<'a> = (&'a str, &'a dyn TestFunction);

/// Mean of Mᶠ_t under P for each f, target 0, on one shared batch.
pub fn martingale_checks(setup: &Setup<'_>, fs: &[Named<'_>], t: f64) -> Result<Vec<CheckReport>> {
    let start = Instant::now();
    let model = setup.model;
    let out = fitted(setup, |cfg| {
        let k = cfg.grid_index(t)?;
        let ms = Batch::new(model, setup.x0, cfg, setup.paths, arm_seed(setup.seed, ARM_P))
            .with_exec(setup.exec)
            .moments(
                fs.len(),
                || fs.iter().map(|(_, f)| Generator::new(model, *f)).collect::<Vec<_>>(),
                |gens, rec, out| {
                    for (o, g) in out.iter_mut().zip(gens.iter_mut()) {
                        *o = martingale_increment_with(g, rec, cfg.time_of(k))?;
                    }
                    Ok(())
                },
            )?;
        Ok(ms.into_iter().map(|est| Measured { est, target: 0.0, target_se: 0.0 }).collect())
    })?;
    Ok(fs
        .iter()
        .zip(out)
        .map(|((name, _), (m, eps, fit))| {
            report(format!("martingale[{name}]"), m, eps, fit, Provenance::ExactZero, setup, start)
        })
        .collect())
}

pub fn martingale_check(setup: &Setup<'_>, f: &dyn TestFunction, t: f64) -> Result<CheckReport> {
    let mut r = martingale_checks(setup, &[("f", f)], t)?.remove(0);
    r.name = "martingale".into();
    Ok(r)
}

/// Mean of D_t M̃ᶠ_t 𝟙{t < Sₙ} over P-paths, where M̃ᶠ is built from the
/// generator of `tilde`, the transformed model. Target 0.
pub fn girsanov_checks(
    setup: &Setup<'_>,
    change: &dyn MeasureChange,
    tilde: &dyn Model,
    n: u32,
    fs: &[Named<'_>],
    t: f64,
) -> Result<Vec<CheckReport>> {
    let start = Instant::now();
    let model = setup.model;
    let out = fitted(setup, |cfg| {
        let cfg = localized(cfg, n);
        let k = cfg.grid_index(t)?;
        let tk = cfg.time_of(k);
        let ms = Batch::new(model, setup.x0, &cfg, setup.paths, arm_seed(setup.seed, ARM_P))
            .with_domain(change)
            .with_exec(setup.exec)
            .moments(
                fs.len(),
                || {
                    let gens: Vec<_> = fs.iter().map(|(_, f)| Generator::new(tilde, *f)).collect();
                    (DensityWork::new(model.dim()), gens)
                },
                |(w, gens), rec, out| {
                    accumulate_into(rec, model, change, n, 1.0, &mut w.trace, &mut w.scratch)?;
                    if w.trace.valid(k) {
                        let d = w.trace.log_d[k].exp();
                        for (o, g) in out.iter_mut().zip(gens.iter_mut()) {
                            *o = d * martingale_increment_with(g, rec, tk)?;
                        }
                    }
                    Ok(())
                },
            )?;
        Ok(ms.into_iter().map(|est| Measured { est, target: 0.0, target_se: 0.0 }).collect())
    })?;
    Ok(fs
        .iter()
        .zip(out)
        .map(|((name, _), (m, eps, fit))| {
            report(format!("girsanov[{name}]"), m, eps, fit, Provenance::ExactZero, setup, start)
        })
        .collect())
}

pub fn girsanov_check(
    setup: &Setup<'_>,
    change: &dyn MeasureChange,
    tilde: &dyn Model,
    n: u32,
    f: &dyn TestFunction,
    t: f64,
) -> Result<CheckReport> {
    let mut r = girsanov_checks(setup, change, tilde, n, &[("f", f)], t)?.remove(0);
    r.name = "girsanov".into();
    Ok(r)
}

/// 𝟙{τ ≤ t ∧ cap} − Σ γ(X_k) Δt_k over the steps before t, τ and the cap.
pub fn killing_compensator_value(model: &dyn Model, rec: &PathRecord, k_t: usize) -> Result<f64> {
    let mut sum = 0.0;
    for k in 0..k_t.min(rec.steps_taken()) {
        if let Some(x) = rec.state(k).point() {
            sum += model.killing(x)? * rec.dt;
        }
    }
    let mut hit = 0.0;
    if let Some(kk) = rec.kill_step() {
        if kk < k_t {
            let x = rec.state(kk).point().expect("pre-killing state is a point");
            sum += model.killing(x)? * (rec.kill_time - rec.time(kk));
            hit = 1.0;
        }
    }
    Ok(hit - sum)
}

/// Mean of the killing compensator residual at t, target 0.
pub fn killing_compensator_check(setup: &Setup<'_>, t: f64) -> Result<CheckReport> {
    let start = Instant::now();
    let model = setup.model;
    let out = fitted(setup, |cfg| {
        let k = cfg.grid_index(t)?;
        let ms = Batch::new(model, setup.x0, cfg, setup.paths, arm_seed(setup.seed, ARM_P))
            .with_exec(setup.exec)
            .moments(1, || (), |_, rec, out| {
                out[0] = killing_compensator_value(model, rec, k)?;
                Ok(())
            })?;
        Ok(vec![Measured {
            est: ms[0],
            target: 0.0,
            target_se: 0.0,
        }])
    })?;
    let (m, eps, fit) = out[0];
    Ok(report("killing_compensator".into(), m, eps, fit, Provenance::ExactZero, setup, start))
}

/// Mean of D_{t_i} 𝟙{t_i < Sₙ} at each grid time, paired with the mean of
/// the per-path increment from the previous time (from t = 0 for the first).
pub fn density_series(
    setup: &Setup<'_>,
    change: &dyn MeasureChange,
    n: u32,
    times: &[f64],
) -> Result<Vec<(f64, Moments, Moments)>> {
    let cfg = localized(setup.cfg, n);
    let ks: Vec<usize> = times.iter().map(|t| cfg.grid_index(*t)).collect::<Result<_>>()?;
    let model = setup.model;
    let w = times.len();
    let ms = Batch::new(model, setup.x0, &cfg, setup.paths, arm_seed(setup.seed, ARM_P))
        .with_domain(change)
        .with_exec(setup.exec)
        .moments(
            2 * w,
            || DensityWork::new(model.dim()),
            |dw, rec, out| {
                accumulate_into(rec, model, change, n, 1.0, &mut dw.trace, &mut dw.scratch)?;
                let mut prev = dw.trace.stopped_density(0);
                for (i, &k) in ks.iter().enumerate() {
                    let d = dw.trace.stopped_density(k);
                    out[i] = d;
                    out[w + i] = d - prev;
                    prev = d;
                }
                Ok(())
            },
        )?;
    Ok((0..w).map(|i| (times[i], ms[i], ms[w + i])).collect())
}

/// Violations below this size count even when the SE is zero.
const RAW_SLACK: f64 = 1e-12;

fn standardized(excess: f64, se: f64) -> f64 {
    if se > 0.0 {
        excess / se
    } else if excess > RAW_SLACK {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Supermartingale property of the stopped density on a time grid.
///
/// The statistic is the largest standardised violation, over successive
/// grid times, of mean(D_{t_i} − D_{t_{i−1}}) ≤ 0 (SE of the paired
/// per-path differences) and of mean D_{t_i} ≤ 1, floored at 0. It passes
/// iff it is at most z, which is the pass rule with target 0, SE 1 and ε 0.
pub fn supermartingale_check(
    setup: &Setup<'_>,
    change: &dyn MeasureChange,
    n: u32,
    times: &[f64],
) -> Result<CheckReport> {
    let start = Instant::now();
    let series = density_series(setup, change, n, times)?;
    let mut stat: f64 = 0.0;
    for (i, (_, level, step)) in series.iter().enumerate() {
        stat = stat.max(standardized(level.mean - 1.0, level.se()));
        if i > 0 {
            stat = stat.max(standardized(step.mean, step.se()));
        }
    }
    let r = CheckReport::new(
        "supermartingale",
        stat,
        1.0,
        0.0,
        Provenance::ExactZero,
        setup.z,
        0.0,
        setup.paths,
        setup.seed,
    );
    Ok(r.timed(start))
}

/// Count of paths on which D is not strictly positive at some grid time
/// before min(t, Sₙ), given D₀ > 0. Positivity is judged on log D, which
/// must be finite; exp(log D) may underflow without violating anything.
pub fn positivity_check(
    setup: &Setup<'_>,
    change: &dyn MeasureChange,
    n: u32,
    t: f64,
    d0: f64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let cfg = localized(setup.cfg, n);
    let k_t = cfg.grid_index(t)?;
    let model = setup.model;
    let counts = Batch::new(model, setup.x0, &cfg, setup.paths, arm_seed(setup.seed, ARM_P))
        .with_domain(change)
        .with_exec(setup.exec)
        .fold_chunks(
            || (DensityWork::new(model.dim()), 0u64),
            |w, bad, _, rec| {
                if !(d0 > 0.0) {
                    return Ok(());
                }
                accumulate_into(rec, model, change, n, d0, &mut w.trace, &mut w.scratch)?;
                let ok = (0..=k_t)
                    .take_while(|&k| w.trace.valid(k))
                    .all(|k| w.trace.log_d[k].is_finite() && w.trace.log_d[k] > f64::NEG_INFINITY);
                if !ok {
                    *bad += 1;
                }
                Ok(())
            },
        )?;
    let violations: u64 = counts.iter().sum();
    let r = CheckReport::new(
        "positivity",
        violations as f64,
        0.0,
        0.0,
        Provenance::ExactZero,
        setup.z,
        0.0,
        setup.paths,
        setup.seed,
    );
    Ok(r.timed(start))
}

/// Largest deviation of D from D₀ and of Λ from 0 over every path and grid
/// point, which is 0 for the identity change. ε is the tolerance.
pub fn identity_density_check(setup: &Setup<'_>, d0: f64, tol: f64) -> Result<CheckReport> {
    let start = Instant::now();
    let model = setup.model;
    let change = IdentityChange::new(model.space().clone());
    let n = setup.cfg.n_loc;
    let worst = Batch::new(model, setup.x0, setup.cfg, setup.paths, arm_seed(setup.seed, ARM_P))
        .with_exec(setup.exec)
        .fold_chunks(
            || (DensityWork::new(model.dim()), 0.0f64),
            |w, worst, _, rec| {
                accumulate_into(rec, model, &change, n, d0, &mut w.trace, &mut w.scratch)?;
                for k in 0..w.trace.len() {
                    let dev = (w.trace.log_d[k].exp() - d0).abs().max(w.trace.lambda[k].abs());
                    *worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
                }
                Ok(())
            },
        )?;
    let worst = worst.into_iter().fold(0.0, f64::max);
    let r = CheckReport::new(
        "identity_density",
        worst,
        0.0,
        0.0,
        Provenance::ExactZero,
        setup.z,
        tol,
        setup.paths,
        setup.seed,
    );
    Ok(r.timed(start))
}

/// Lower edge of the sampled range on (0, 2].
pub const RATIO_Y_MIN: f64 = 1e-12;
/// Upper edge of the sampled range on [2, ∞).
pub const RATIO_Y_MAX: f64 = 1e6;

/// Violations of 1/3 ≤ l(y)/(y − 1)² ≤ 1 on (0, 2] and l(y)/(y − 1) ≥ 1/3
/// on [2, 10⁶], at `samples` log-uniform points split evenly between the two
/// ranges plus y = 1 (limit 1/2), y = 2 and y = 10⁶. Exact count, no SE.
pub fn ratio_bounds_property(samples: u64, seed: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let mut rng = PathRng::seed_from_u64(seed);
    let third = 1.0 / 3.0;
    let mut bad = 0u64;
    let mut check_low = |y: f64| -> Result<()> {
        let r = if y == 1.0 { 0.5 } else { entropy_l(y)? / ((y - 1.0) * (y - 1.0)) };
        if !(third..=1.0).contains(&r) {
            bad += 1;
        }
        Ok(())
    };
    let (lo_a, lo_b) = (RATIO_Y_MIN.ln(), 2f64.ln());
    let low = samples / 2;
    for _ in 0..low {
        check_low((lo_a + (lo_b - lo_a) * rng.random::<f64>()).exp().min(2.0))?;
    }
    check_low(1.0)?;
    check_low(2.0)?;
    let mut check_high = |y: f64| -> Result<()> {
        if !(entropy_l(y)? / (y - 1.0) >= third) {
            bad += 1;
        }
        Ok(())
    };
    let (hi_a, hi_b) = (2f64.ln(), RATIO_Y_MAX.ln());
    for _ in low..samples {
        check_high((hi_a + (hi_b - hi_a) * rng.random::<f64>()).exp().clamp(2.0, RATIO_Y_MAX))?;
    }
    check_high(2.0)?;
    check_high(RATIO_Y_MAX)?;
    let r = CheckReport::new(
        "ratio_bounds",
        bad as f64,
        0.0,
        0.0,
        Provenance::ExactZero,
        DEFAULT_Z,
        0.0,
        samples,
        seed,
    );
    Ok(r.timed(start))
}

/// Violations of l(u) > 0 for |u − 1| > 1e-8 and of l(1) = 0, over
/// log-uniform u in [1e-12, 1e6] and points at distance k·1e-8 from 1.
pub fn entropy_sign_property(samples: u64, seed: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let mut rng = PathRng::seed_from_u64(seed);
    let mut bad = 0u64;
    let mut check = |u: f64| -> Result<()> {
        let v = entropy_l(u)?;
        let ok = if (u - 1.0).abs() > 1e-8 { v > 0.0 } else { v >= 0.0 };
        if !ok {
            bad += 1;
        }
        Ok(())
    };
    let (a, b) = (RATIO_Y_MIN.ln(), RATIO_Y_MAX.ln());
    for _ in 0..samples {
        check((a + (b - a) * rng.random::<f64>()).exp())?;
    }
    for k in 1..=100 {
        let d = 1e-8 * (1.0 + f64::from(k) * 1e-2);
        check(1.0 + d)?;
        check(1.0 - d)?;
    }
    if entropy_l(1.0)? != 0.0 {
        bad += 1;
    }
    let r = CheckReport::new(
        "entropy_sign",
        bad as f64,
        0.0,
        0.0,
        Provenance::ExactZero,
        DEFAULT_Z,
        0.0,
        samples,
        seed,
    );
    Ok(r.timed(start))
}
