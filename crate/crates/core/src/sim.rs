//! Euler–Maruyama simulation with jumps, hazard killing and localisation.
//!
//! One step from t_k to t_{k+1} = t_k + Δt:
//!
//! 1. Killing: the hazard H accumulates γ(X_k)Δt. If it crosses the path's
//!    Exp(1) threshold E the path dies at τ = t_k + (E − H)/γ(X_k) and the
//!    rest of the step is discarded.
//! 2. Diffusion: X̃ = X_k + β(X_k)Δt + L(X_k)ΔW with L Lᵀ = α(X_k),
//!    projected onto E.
//! 3. Jumps with times in (t_k, t_{k+1}] are applied to X̃ in time order,
//!    each followed by the projection.
//!
//! Tₙ and Rₙ are checked on X̃ and after every jump. A violation stops the
//! evolution at t_{k+1} with the violating state recorded as X_{k+1}.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cholesky_psd, MeasureChange, Model};
use crate::par::{map_chunks, Exec};
use crate::rng::{split, PathStreams};
use crate::state::{norm, State};
use crate::stats::{merge_vec, pairwise, Moments};

/// How jump times are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum JumpScheme {
    /// ExactConstant for constant intensity, else Thinning against the
    /// kernel's bound on {‖x‖ < n_expl}, else LeftEndpoint.
    Auto,
    /// Exponential inter-arrival times. Requires constant intensity.
    ExactConstant,
    /// Candidate times at rate `bound`, accepted with probability
    /// λ(X̃)/bound. Intensities above the bound are an error.
    Thinning { bound: f64 },
    /// At most one jump per step, with probability λ(X_k)Δt.
    LeftEndpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Number of standard normals summed into each ΔW. Running at Δt with
    /// two substeps and at Δt/2 with one consumes the same normals, which
    /// couples the two discretisations path by path.
    #[serde(default = "one")]
    pub substeps: u32,
    /// ‖X‖ ≥ n_expl triggers Tₙ.
    #[serde(default = "default_n_expl")]
    pub n_expl: u32,
    /// Level of the exhaustion Uⁿ used for Rₙ.
    #[serde(default = "default_n_loc")]
    pub n_loc: u32,
    #[serde(default = "auto")]
    pub jump_scheme: JumpScheme,
}

fn one() -> u32 {
    1
}
fn default_n_expl() -> u32 {
    100
}
fn default_n_loc() -> u32 {
    1000
}
fn auto() -> JumpScheme {
    JumpScheme::Auto
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64) -> Self {
        Self {
            horizon,
            dt,
            substeps: 1,
            n_expl: default_n_expl(),
            n_loc: default_n_loc(),
            jump_scheme: JumpScheme::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Param(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be at least dt {}", self.horizon, self.dt));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return bad(format!("horizon {} is not a multiple of dt {}", self.horizon, self.dt));
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        if self.n_expl == 0 || self.n_loc == 0 {
            return bad("n_expl and n_loc must be at least 1".into());
        }
        if let JumpScheme::Thinning { bound } = self.jump_scheme {
            if !(bound > 0.0 && bound.is_finite()) {
                return bad(format!("thinning bound must be positive, got {bound}"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// The same scheme at Δt/2, driven by the same normals when `self` uses
    /// two substeps.
    pub fn halved(&self) -> Self {
        Self {
            dt: self.dt / 2.0,
            substeps: (self.substeps / 2).max(1),
            ..self.clone()
        }
    }

    pub fn time_of(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Index of grid time `t`.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let k = t / self.dt;
        if t < 0.0 || (k - k.round()).abs() > 1e-9 * k.max(1.0) || k.round() as usize > self.steps() {
            return Err(Error::OffGrid(t));
        }
        Ok(k.round() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Alive,
    Killed,
    /// Stopped at Tₙ.
    Capped,
    /// Stopped at Rₙ.
    Exited,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Alive => "alive",
            Status::Killed => "killed",
            Status::Capped => "capped",
            Status::Exited => "exited",
        }
    }
}

/// A jump event: time s, pre-jump state X_{s−} and size ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent<'a> {
    pub step: usize,
    pub time: f64,
    pub pre: &'a [f64],
    pub xi: &'a [f64],
}

/// One simulated trajectory on the grid t_k = kΔt, k = 0..=steps.
///
/// Grid states are stored up to the last one the path reached. Later grid
/// points read as Δ after killing and as the frozen final state after a
/// stop at Tₙ or Rₙ.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub dim: usize,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub status: Status,
    /// τ, or ∞.
    pub kill_time: f64,
    /// Tₙ for n = n_expl, or ∞.
    pub t_n: f64,
    /// Rₙ for n = n_loc, or ∞ (always ∞ without a change domain).
    pub r_n: f64,
    /// Rₙ ∧ Tₙ ∧ n_loc.
    pub s_n: f64,
    states: Vec<f64>,
    dw: Vec<f64>,
    jump_step: Vec<usize>,
    jump_time: Vec<f64>,
    jump_pre: Vec<f64>,
    jump_xi: Vec<f64>,
}

impl PathRecord {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            dt: 0.0,
            steps: 0,
            seed: 0,
            status: Status::Alive,
            kill_time: f64::INFINITY,
            t_n: f64::INFINITY,
            r_n: f64::INFINITY,
            s_n: f64::INFINITY,
            states: Vec::new(),
            dw: Vec::new(),
            jump_step: Vec::new(),
            jump_time: Vec::new(),
            jump_pre: Vec::new(),
            jump_xi: Vec::new(),
        }
    }

    fn reset(&mut self, dim: usize, cfg: &SimConfig, seed: u64) {
        self.dim = dim;
        self.dt = cfg.dt;
        self.steps = cfg.steps();
        self.seed = seed;
        self.status = Status::Alive;
        self.kill_time = f64::INFINITY;
        self.t_n = f64::INFINITY;
        self.r_n = f64::INFINITY;
        self.s_n = f64::INFINITY;
        self.states.clear();
        self.dw.clear();
        self.jump_step.clear();
        self.jump_time.clear();
        self.jump_pre.clear();
        self.jump_xi.clear();
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Number of grid states actually reached.
    pub fn recorded(&self) -> usize {
        self.states.len() / self.dim
    }

    /// Number of completed diffusion steps (those with a recorded ΔW).
    pub fn steps_taken(&self) -> usize {
        self.dw.len() / self.dim
    }

    /// The step in which the path was killed.
    pub fn kill_step(&self) -> Option<usize> {
        (self.status == Status::Killed).then(|| self.recorded() - 1)
    }

    /// min(Tₙ, Rₙ): the time evolution stopped for localisation.
    pub fn stop_time(&self) -> f64 {
        self.t_n.min(self.r_n)
    }

    /// X_{t_k} ∈ E_Δ.
    pub fn state(&self, k: usize) -> State<'_> {
        let n = self.recorded();
        if k < n {
            State::Point(&self.states[k * self.dim..(k + 1) * self.dim])
        } else if self.status == Status::Killed {
            State::Cemetery
        } else {
            State::Point(&self.states[(n - 1) * self.dim..n * self.dim])
        }
    }

    /// Raw Brownian increment of step k, for k < steps_taken().
    pub fn dw(&self, k: usize) -> &[f64] {
        &self.dw[k * self.dim..(k + 1) * self.dim]
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_time.len()
    }

    pub fn jump(&self, i: usize) -> JumpEvent<'_> {
        let d = self.dim;
        JumpEvent {
            step: self.jump_step[i],
            time: self.jump_time[i],
            pre: &self.jump_pre[i * d..(i + 1) * d],
            xi: &self.jump_xi[i * d..(i + 1) * d],
        }
    }

    pub fn jumps(&self) -> impl Iterator<Item = JumpEvent<'_>> + '_ {
        (0..self.n_jumps()).map(|i| self.jump(i))
    }

    /// Whether the path is alive and unstopped at grid time t_k, i.e.
    /// t_k < τ and t_k < Sₙ.
    pub fn active_at(&self, k: usize) -> bool {
        let t = self.time(k);
        t < self.kill_time && t < self.s_n
    }

    fn push_state(&mut self, x: &[f64]) {
        self.states.extend_from_slice(x);
    }

    fn push_jump(&mut self, step: usize, time: f64, pre: &[f64], xi: &[f64]) {
        self.jump_step.push(step);
        self.jump_time.push(time);
        self.jump_pre.extend_from_slice(pre);
        self.jump_xi.extend_from_slice(xi);
    }
}

enum Resolved {
    None,
    Poisson { rate: f64, thinning: bool },
    LeftEndpoint,
}

fn resolve(model: &dyn Model, cfg: &SimConfig) -> Result<Resolved> {
    let kernel = model.kernel();
    let r = match cfg.jump_scheme {
        JumpScheme::Auto => match kernel.constant_intensity() {
            Some(l) if l == 0.0 => Resolved::None,
            Some(l) => Resolved::Poisson { rate: l, thinning: false },
            None => match kernel.intensity_bound(f64::from(cfg.n_expl)) {
                Some(b) if b > 0.0 => Resolved::Poisson { rate: b, thinning: true },
                Some(_) => Resolved::None,
                None => Resolved::LeftEndpoint,
            },
        },
        JumpScheme::ExactConstant => match kernel.constant_intensity() {
            Some(l) if l == 0.0 => Resolved::None,
            Some(l) => Resolved::Poisson { rate: l, thinning: false },
            None => {
                return Err(Error::Param(
                    "exact-constant jump scheme needs a constant-intensity kernel".into(),
                ))
            }
        },
        JumpScheme::Thinning { bound } => Resolved::Poisson {
            rate: bound,
            thinning: true,
        },
        JumpScheme::LeftEndpoint => Resolved::LeftEndpoint,
    };
    Ok(r)
}

/// Scratch buffers reused across the paths of one chunk.
struct Scratch {
    alpha: Vec<f64>,
    chol: Vec<f64>,
    beta: Vec<f64>,
    z: Vec<f64>,
    x: Vec<f64>,
    xi: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            alpha: vec![0.0; d * d],
            chol: vec![0.0; d * d],
            beta: vec![0.0; d],
            z: vec![0.0; d],
            x: vec![0.0; d],
            xi: vec![0.0; d],
        }
    }
}

struct Limits<'a> {
    n_expl: f64,
    n_loc: u32,
    domain: Option<&'a dyn MeasureChange>,
}

impl Limits<'_> {
    /// (‖x‖ ≥ n_expl, x ∉ Uⁿ).
    fn check(&self, x: &[f64]) -> (bool, bool) {
        let capped = norm(x) >= self.n_expl;
        let exited = self.domain.is_some_and(|c| !c.in_level(self.n_loc, x));
        (capped, exited)
    }
}

/// Simulate one path into `rec`, reusing its buffers.
pub fn simulate_into(
    model: &dyn Model,
    x0: &[f64],
    cfg: &SimConfig,
    domain: Option<&dyn MeasureChange>,
    seed: u64,
    rec: &mut PathRecord,
) -> Result<()> {
    let mut scratch = Scratch::new(model.dim());
    simulate_with(model, x0, cfg, domain, seed, rec, &mut scratch)
}

pub fn simulate_path(
    model: &dyn Model,
    x0: &[f64],
    cfg: &SimConfig,
    domain: Option<&dyn MeasureChange>,
    seed: u64,
) -> Result<PathRecord> {
    let mut rec = PathRecord::empty(model.dim());
    simulate_into(model, x0, cfg, domain, seed, &mut rec)?;
    Ok(rec)
}

fn simulate_with(
    model: &dyn Model,
    x0: &[f64],
    cfg: &SimConfig,
    domain: Option<&dyn MeasureChange>,
    seed: u64,
    rec: &mut PathRecord,
    s: &mut Scratch,
) -> Result<()> {
    cfg.validate()?;
    let d = model.dim();
    let space = model.space();
    if x0.len() != d || !space.contains(x0) {
        return Err(Error::domain("initial state outside E", x0));
    }
    rec.reset(d, cfg, seed);
    rec.push_state(x0);
    let limits = Limits {
        n_expl: f64::from(cfg.n_expl),
        n_loc: cfg.n_loc,
        domain,
    };
    let finish = |rec: &mut PathRecord| {
        rec.s_n = rec.r_n.min(rec.t_n).min(f64::from(cfg.n_loc));
    };
    let (capped, exited) = limits.check(x0);
    if capped || exited {
        stop(rec, 0.0, capped, exited);
        finish(rec);
        return Ok(());
    }

    let mut streams = PathStreams::new(seed);
    // Position 0 of the diffusion stream, by inverse CDF.
    let u: f64 = streams.diffusion.random();
    let threshold = -(-u).ln_1p();
    let mut hazard = 0.0;

    let scheme = resolve(model, cfg)?;
    let mut next_candidate = match scheme {
        Resolved::Poisson { rate, .. } => streams.jumps.sample::<f64, _>(Exp1) / rate,
        _ => f64::INFINITY,
    };
    let kernel = model.kernel();
    let dt = cfg.dt;
    let scale = (dt / f64::from(cfg.substeps)).sqrt();

    for k in 0..cfg.steps() {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        s.x.copy_from_slice(&rec.states[k * d..(k + 1) * d]);

        let gamma = model.killing(&s.x)?;
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::positivity("killing rate", gamma, &s.x));
        }
        if gamma > 0.0 {
            if hazard + gamma * dt >= threshold {
                rec.kill_time = t0 + (threshold - hazard) / gamma;
                rec.status = Status::Killed;
                break;
            }
            hazard += gamma * dt;
        }

        model.diffusion(&s.x, &mut s.alpha)?;
        cholesky_psd(&s.alpha, d, &s.x, &mut s.chol)?;
        model.drift(&s.x, &mut s.beta)?;
        s.z.fill(0.0);
        for _ in 0..cfg.substeps {
            for zi in s.z.iter_mut() {
                let n: f64 = streams.diffusion.sample(StandardNormal);
                *zi += n;
            }
        }
        for zi in s.z.iter_mut() {
            *zi *= scale;
        }
        let start = rec.states.len() - d;
        for i in 0..d {
            let noise: f64 = (0..=i).map(|j| s.chol[i * d + j] * s.z[j]).sum();
            s.x[i] = rec.states[start + i] + s.beta[i] * dt + noise;
        }
        settle(model, &mut s.x, t1)?;
        rec.dw.extend_from_slice(&s.z);

        let (capped, exited) = limits.check(&s.x);
        if capped || exited {
            rec.push_state(&s.x);
            stop(rec, t1, capped, exited);
            break;
        }

        let mut stopped = None;
        match scheme {
            Resolved::None => {}
            Resolved::Poisson { rate, thinning } => {
                while next_candidate <= t1 {
                    let time = next_candidate;
                    next_candidate += streams.jumps.sample::<f64, _>(Exp1) / rate;
                    if thinning {
                        let lambda = kernel.intensity(&s.x)?;
                        if lambda > rate * (1.0 + 1e-12) {
                            return Err(Error::IntensityBound {
                                bound: rate,
                                intensity: lambda,
                                state: s.x.clone(),
                            });
                        }
                        let u: f64 = streams.jumps.random();
                        if u * rate >= lambda {
                            continue;
                        }
                    }
                    stopped = apply_jump(model, rec, s, &mut streams, &limits, k, time, t1)?;
                    if stopped.is_some() {
                        break;
                    }
                }
            }
            Resolved::LeftEndpoint => {
                let lambda = kernel.intensity(&rec.states[k * d..(k + 1) * d])?;
                let u: f64 = streams.jumps.random();
                if u < lambda * dt {
                    let time = t0 + dt * streams.jumps.random::<f64>();
                    stopped = apply_jump(model, rec, s, &mut streams, &limits, k, time.max(t0), t1)?;
                }
            }
        }
        rec.push_state(&s.x);
        if let Some((capped, exited)) = stopped {
            stop(rec, t1, capped, exited);
            break;
        }
    }
    finish(rec);
    Ok(())
}

/// Project onto E and reject NaN or states E cannot absorb.
fn settle(model: &dyn Model, x: &mut [f64], t: f64) -> Result<()> {
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite { time: t });
    }
    let space = model.space();
    space.project(x);
    if !space.contains(x) {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: t });
        }
        return Err(Error::domain("step left the state space", x));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn apply_jump(
    model: &dyn Model,
    rec: &mut PathRecord,
    s: &mut Scratch,
    streams: &mut PathStreams,
    limits: &Limits<'_>,
    step: usize,
    time: f64,
    t1: f64,
) -> Result<Option<(bool, bool)>> {
    model.kernel().sample(&s.x, &mut streams.jumps, &mut s.xi)?;
    rec.push_jump(step, time, &s.x, &s.xi);
    for (x, xi) in s.x.iter_mut().zip(&s.xi) {
        *x += xi;
    }
    settle(model, &mut s.x, t1)?;
    let (capped, exited) = limits.check(&s.x);
    Ok((capped || exited).then_some((capped, exited)))
}

fn stop(rec: &mut PathRecord, t: f64, capped: bool, exited: bool) {
    if capped {
        rec.t_n = t;
        rec.status = Status::Capped;
    }
    if exited {
        rec.r_n = t;
        if !capped {
            rec.status = Status::Exited;
        }
    }
}

/// A batch of paths: path i is driven by the seed `split(seed, i)`.
#[derive(Clone, Copy)]
pub struct Batch<'a> {
    pub model: &'a dyn Model,
    pub x0: &'a [f64],
    pub cfg: &'a SimConfig,
    pub domain: Option<&'a dyn MeasureChange>,
    pub paths: u64,
    pub seed: u64,
    pub exec: Exec,
}

impl<'a> Batch<'a> {
    pub fn new(model: &'a dyn Model, x0: &'a [f64], cfg: &'a SimConfig, paths: u64, seed: u64) -> Self {
        Self {
            model,
            x0,
            cfg,
            domain: None,
            paths,
            seed,
            exec: Exec::default(),
        }
    }

    pub fn with_domain(mut self, domain: &'a dyn MeasureChange) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    /// Fold every chunk of paths into an accumulator; returns one
    /// accumulator per chunk, in chunk order. `init` builds per-chunk
    /// scratch and the empty accumulator.
    pub fn fold_chunks<S, A, I, F>(&self, init: I, f: F) -> Result<Vec<A>>
    where
        A: Send,
        I: Fn() -> (S, A) + Sync + Send,
        F: Fn(&mut S, &mut A, u64, &PathRecord) -> Result<()> + Sync + Send,
    {
        self.cfg.validate()?;
        map_chunks(self.exec, self.paths, |range| {
            let (mut scratch, mut acc) = init();
            let mut rec = PathRecord::empty(self.model.dim());
            let mut sim = Scratch::new(self.model.dim());
            for i in range {
                simulate_with(
                    self.model,
                    self.x0,
                    self.cfg,
                    self.domain,
                    split(self.seed, i),
                    &mut rec,
                    &mut sim,
                )
                .and_then(|_| f(&mut scratch, &mut acc, i, &rec))
                .map_err(|e| e.at_path(i))?;
            }
            Ok(acc)
        })
    }

    /// Per-path vectors of `width` values, reduced to one [`Moments`] per
    /// slot with a pairwise tree over chunks.
    pub fn moments<S, I, F>(&self, width: usize, init: I, f: F) -> Result<Vec<Moments>>
    where
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &PathRecord, &mut [f64]) -> Result<()> + Sync + Send,
    {
        let chunks = self.fold_chunks(
            || ((init(), vec![0.0; width]), vec![Moments::default(); width]),
            |(scratch, vals), acc, _, rec| {
                vals.fill(0.0);
                f(scratch, rec, vals)?;
                for (m, v) in acc.iter_mut().zip(vals.iter()) {
                    m.push(*v);
                }
                Ok(())
            },
        )?;
        Ok(pairwise(&chunks, &|a: &Vec<Moments>, b: &Vec<Moments>| merge_vec(a, b))
            .unwrap_or_else(|| vec![Moments::default(); width]))
    }

    /// Every path of the batch, in index order.
    pub fn simulate(&self) -> Result<Vec<PathRecord>> {
        let chunks = self.fold_chunks(|| ((), Vec::new()), |_, acc, _, rec| {
            acc.push(rec.clone());
            Ok(())
        })?;
        Ok(chunks.into_iter().flatten().collect())
    }
}

pub fn batch_simulate(
    model: &dyn Model,
    x0: &[f64],
    cfg: &SimConfig,
    domain: Option<&dyn MeasureChange>,
    paths: u64,
    master_seed: u64,
) -> Result<Vec<PathRecord>> {
    let mut b = Batch::new(model, x0, cfg, paths, master_seed);
    b.domain = domain;
    b.simulate()
}
