//! Log-density of a measure change along a simulated path.
//!
//! With ψ(x, ξ) = φ₃(x, ξ) for jumps inside E and ψ = φ₂ for killing, the
//! density stopped at Sₙ is accumulated as
//!
//! ```text
//! log D_t = log D_0 + I_stoch − I_quad − I_comp + J
//! I_stoch = Σ ⟨φ₁(X_k), L(X_k) ΔW_k⟩
//! I_quad  = ½ Σ ⟨α φ₁, φ₁⟩(X_k) Δt
//! I_comp  = Σ [γ(φ₂ − 1) + κ](X_k) Δt
//! J       = Σ log ψ(X_{s−}, ΔX_s)
//! ```
//!
//! Step k enters in full iff t_{k+1} < Sₙ. A killing at τ < Sₙ enters with
//! the partial length τ − t_k, no Brownian term and the factor φ₂(X_k);
//! killing does not stop the localisation, so killed paths stay valid with
//! the density frozen. Otherwise the trace freezes at t_k.

use crate::error::{Error, Result};
use crate::model::{
    checked_jump_factor, checked_killing_factor, cholesky_psd, l, MeasureChange, Model,
};
use crate::sim::PathRecord;

/// The event a factor ψ is taken for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event<'a> {
    /// A jump of size ξ landing in E.
    Jump(&'a [f64]),
    Killing,
}

/// ψ(x, event): φ₃(x, ξ) for a jump, φ₂(x) for killing.
pub fn psi(change: &dyn MeasureChange, x: &[f64], event: Event<'_>) -> Result<f64> {
    match event {
        Event::Jump(xi) => checked_jump_factor(change, x, xi),
        Event::Killing => checked_killing_factor(change, x),
    }
}

/// Per-grid-point components of log D and the Λ accumulator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DensityTrace {
    pub dt: f64,
    pub log_d0: f64,
    /// Sₙ as seen by this trace.
    pub s_n: f64,
    pub log_d: Vec<f64>,
    pub i_stoch: Vec<f64>,
    pub i_quad: Vec<f64>,
    pub i_comp: Vec<f64>,
    pub j_jump: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl DensityTrace {
    /// D_t is defined (t < Sₙ) at grid index k.
    pub fn valid(&self, k: usize) -> bool {
        (k as f64) * self.dt < self.s_n
    }

    pub fn len(&self) -> usize {
        self.log_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_d.is_empty()
    }

    /// D_{t_k} 𝟙{t_k < Sₙ}.
    pub fn stopped_density(&self, k: usize) -> f64 {
        if self.valid(k) {
            self.log_d[k].exp()
        } else {
            0.0
        }
    }

    fn reset(&mut self, len: usize, dt: f64, log_d0: f64, s_n: f64) {
        self.dt = dt;
        self.log_d0 = log_d0;
        self.s_n = s_n;
        for v in [
            &mut self.log_d,
            &mut self.i_stoch,
            &mut self.i_quad,
            &mut self.i_comp,
            &mut self.j_jump,
            &mut self.lambda,
        ] {
            v.clear();
            v.resize(len, 0.0);
        }
        self.log_d[0] = log_d0;
    }

    fn set(&mut self, k: usize, c: &Components) {
        self.i_stoch[k] = c.stoch;
        self.i_quad[k] = c.quad;
        self.i_comp[k] = c.comp;
        self.j_jump[k] = c.jump;
        self.lambda[k] = c.lambda;
        self.log_d[k] = self.log_d0 + c.stoch - c.quad - c.comp + c.jump;
    }
}

#[derive(Default)]
struct Components {
    stoch: f64,
    quad: f64,
    comp: f64,
    jump: f64,
    lambda: f64,
}

/// Sₙ for level n: the first grid time at which an observed state (grid or
/// pre-jump) leaves Uⁿ, capped by the path's own stop time and by n.
pub fn localization_time(path: &PathRecord, change: &dyn MeasureChange, n: u32) -> f64 {
    let mut s = path.stop_time().min(f64::from(n));
    let x0 = path.state(0).point().expect("initial state is a point");
    if !change.in_level(n, x0) {
        return 0.0;
    }
    let mut j = 0;
    for k in 0..path.recorded().saturating_sub(1) {
        let t1 = path.time(k + 1);
        if t1 >= s {
            break;
        }
        let mut out = false;
        while j < path.n_jumps() && path.jump(j).step == k {
            out |= !change.in_level(n, path.jump(j).pre);
            j += 1;
        }
        if let Some(x) = path.state(k + 1).point() {
            out |= !change.in_level(n, x);
        }
        if out {
            s = t1;
            break;
        }
    }
    s
}

/// Scratch buffers for [`accumulate_into`].
pub struct DensityScratch {
    alpha: Vec<f64>,
    chol: Vec<f64>,
    phi1: Vec<f64>,
}

impl DensityScratch {
    pub fn new(d: usize) -> Self {
        Self {
            alpha: vec![0.0; d * d],
            chol: vec![0.0; d * d],
            phi1: vec![0.0; d],
        }
    }
}

pub fn accumulate(
    path: &PathRecord,
    model: &dyn Model,
    change: &dyn MeasureChange,
    n: u32,
    d0: f64,
) -> Result<DensityTrace> {
    let mut trace = DensityTrace::default();
    let mut scratch = DensityScratch::new(path.dim);
    accumulate_into(path, model, change, n, d0, &mut trace, &mut scratch)?;
    Ok(trace)
}

/// Λ at the end of the path, stopped at Sₙ.
pub fn accumulate_lambda(path: &PathRecord, model: &dyn Model, change: &dyn MeasureChange, n: u32) -> Result<f64> {
    let trace = accumulate(path, model, change, n, 1.0)?;
    Ok(*trace.lambda.last().expect("trace has the initial point"))
}

pub fn accumulate_into(
    path: &PathRecord,
    model: &dyn Model,
    change: &dyn MeasureChange,
    n: u32,
    d0: f64,
    trace: &mut DensityTrace,
    s: &mut DensityScratch,
) -> Result<()> {
    if !(d0 >= 0.0) {
        return Err(Error::Param(format!("initial density must be non-negative, got {d0}")));
    }
    let d = path.dim;
    let s_n = localization_time(path, change, n);
    trace.reset(path.steps + 1, path.dt, d0.ln(), s_n);
    let mut c = Components::default();
    let kernel = model.kernel();
    let mut j = 0;
    let mut frozen_from = path.steps + 1;

    for k in 0..path.steps {
        let t0 = path.time(k);
        let t1 = path.time(k + 1);
        let killed_here = path.kill_step() == Some(k);
        if killed_here && path.kill_time >= s_n {
            frozen_from = k + 1;
            break;
        }
        if !killed_here && !(t1 < s_n) {
            frozen_from = k + 1;
            break;
        }
        let Some(x) = path.state(k).point() else {
            frozen_from = k + 1;
            break;
        };
        if !change.in_domain(x) {
            return Err(Error::domain("density step outside U", x));
        }
        let dt = if killed_here { path.kill_time - t0 } else { path.dt };

        model.diffusion(x, &mut s.alpha)?;
        change.drift_tilt(x, &mut s.phi1)?;
        let mut quad = 0.0;
        for a in 0..d {
            for b in 0..d {
                quad += s.phi1[a] * s.alpha[a * d + b] * s.phi1[b];
            }
        }
        c.quad += 0.5 * quad * dt;
        if !killed_here {
            cholesky_psd(&s.alpha, d, x, &mut s.chol)?;
            let dw = path.dw(k);
            for a in 0..d {
                let ldw: f64 = (0..=a).map(|b| s.chol[a * d + b] * dw[b]).sum();
                c.stoch += s.phi1[a] * ldw;
            }
        }
        let gamma = model.killing(x)?;
        let phi2 = if gamma > 0.0 || killed_here {
            checked_killing_factor(change, x)?
        } else {
            1.0
        };
        let kappa = change.compensator_diff(kernel, x)?;
        c.comp += (gamma * (phi2 - 1.0) + kappa) * dt;
        let kill_cost = if gamma > 0.0 { l(phi2) * gamma } else { 0.0 };
        let jump_cost = change.jump_entropy(kernel, x)?;
        c.lambda += (0.5 * quad + kill_cost + jump_cost) * dt;

        if killed_here {
            c.jump += phi2.ln();
            trace.set(k + 1, &c);
            frozen_from = k + 2;
            break;
        }
        while j < path.n_jumps() && path.jump(j).step == k {
            let ev = path.jump(j);
            c.jump += psi(change, ev.pre, Event::Jump(ev.xi))?.ln();
            j += 1;
        }
        trace.set(k + 1, &c);
    }
    for k in frozen_from..=path.steps {
        for v in [
            &mut trace.log_d,
            &mut trace.i_stoch,
            &mut trace.i_quad,
            &mut trace.i_comp,
            &mut trace.j_jump,
            &mut trace.lambda,
        ] {
            v[k] = v[k - 1];
        }
    }
    Ok(())
}
