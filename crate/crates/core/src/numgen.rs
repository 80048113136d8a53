//! Pointwise evaluation of 𝒜f and discretised martingale residuals.

use crate::error::{Error, Result};
use crate::model::{JumpKernel, Model};
use crate::sim::PathRecord;
use crate::state::{State, Support};
use crate::testfn::{value_at, TestFunction};

/// ∫ (f(x + ξ) − f(x)) μ(x, dξ), integrating only where f(x + ξ) can be
/// non-zero.
pub fn jump_term(
    kernel: &dyn JumpKernel,
    f: &dyn TestFunction,
    support: Option<&Support>,
    x: &[f64],
    y: &mut [f64],
) -> Result<f64> {
    let fx = f.value(x);
    let lambda = kernel.intensity(x)?;
    if support.is_some_and(|s| s.is_empty()) {
        return Ok(-lambda * fx);
    }
    let moved = kernel.integrate(
        x,
        &mut |xi| {
            for ((yi, xv), v) in y.iter_mut().zip(x).zip(xi) {
                *yi = xv + v;
            }
            f.value(y)
        },
        support,
    )?;
    Ok(moved - lambda * fx)
}

/// 𝒜 bound to one model and one test function, with reusable buffers.
pub struct Generator<'a> {
    model: &'a dyn Model,
    f: &'a dyn TestFunction,
    support: Option<Support>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    y: Vec<f64>,
}

impl<'a> Generator<'a> {
    pub fn new(model: &'a dyn Model, f: &'a dyn TestFunction) -> Self {
        let d = model.dim();
        Self {
            model,
            f,
            support: f.support(),
            grad: vec![0.0; d],
            hess: vec![0.0; d * d],
            alpha: vec![0.0; d * d],
            beta: vec![0.0; d],
            y: vec![0.0; d],
        }
    }

    /// 𝒜f(x) for x ∈ E.
    pub fn eval(&mut self, x: &[f64]) -> Result<f64> {
        if !self.model.space().contains(x) {
            return Err(Error::domain("generator", x));
        }
        let d = self.model.dim();
        let jump = jump_term(self.model.kernel(), self.f, self.support.as_ref(), x, &mut self.y)?;
        if self.support.as_ref().is_some_and(|s| !s.contains(x)) {
            // f, ∇f and Hess f vanish at x.
            return Ok(jump);
        }
        self.f.gradient(x, &mut self.grad);
        self.f.hessian(x, &mut self.hess);
        self.model.diffusion(x, &mut self.alpha)?;
        self.model.drift(x, &mut self.beta)?;
        let mut second = 0.0;
        for i in 0..d {
            for j in 0..d {
                second += self.alpha[i * d + j] * self.hess[j * d + i];
            }
        }
        let first: f64 = self.beta.iter().zip(&self.grad).map(|(b, g)| b * g).sum();
        let gamma = self.model.killing(x)?;
        Ok(0.5 * second + first - gamma * self.f.value(x) + jump)
    }

    /// 𝒜f on E_Δ, with 𝒜f(Δ) = 0.
    pub fn eval_state(&mut self, s: State<'_>) -> Result<f64> {
        match s {
            State::Point(x) => self.eval(x),
            State::Cemetery => Ok(0.0),
        }
    }
}

/// ½ tr(α Hess f) + ⟨β, ∇f⟩ − γ f + ∫ (f(x + ξ) − f(x)) μ(x, dξ).
pub fn apply_generator(model: &dyn Model, f: &dyn TestFunction, x: &[f64]) -> Result<f64> {
    Generator::new(model, f).eval(x)
}

/// Mᶠ_t = f(X_t) − f(X_0) − Σ 𝒜f(X_{t_k}) Δt_k, a left-endpoint sum over the
/// steps before t. The step containing the killing time contributes up to
/// τ only; steps after a localisation stop contribute nothing.
pub fn martingale_increment(model: &dyn Model, f: &dyn TestFunction, path: &PathRecord, t: f64) -> Result<f64> {
    let mut gen = Generator::new(model, f);
    martingale_increment_with(&mut gen, path, t)
}

pub fn martingale_increment_with(gen: &mut Generator<'_>, path: &PathRecord, t: f64) -> Result<f64> {
    let k_t = grid_index(path, t)?;
    let integral = compensator_sum(gen, path, k_t)?;
    Ok(value_at(gen.f, path.state(k_t)) - value_at(gen.f, path.state(0)) - integral)
}

/// Σ_{k < k_t} 𝒜f(X_k) Δt_k along the path.
pub(crate) fn compensator_sum(gen: &mut Generator<'_>, path: &PathRecord, k_t: usize) -> Result<f64> {
    let mut sum = 0.0;
    let taken = path.steps_taken();
    for k in 0..k_t.min(taken) {
        sum += gen.eval_state(path.state(k))? * path.dt;
    }
    if let Some(kk) = path.kill_step() {
        if kk < k_t {
            let partial = path.kill_time - path.time(kk);
            sum += gen.eval_state(path.state(kk))? * partial;
        }
    }
    Ok(sum)
}

pub(crate) fn grid_index(path: &PathRecord, t: f64) -> Result<usize> {
    let k = t / path.dt;
    let r = k.round();
    if t < 0.0 || (k - r).abs() > 1e-9 * k.max(1.0) || r as usize > path.steps {
        return Err(Error::OffGrid(t));
    }
    Ok(r as usize)
}
