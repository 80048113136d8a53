//! The carré-du-champ Γ(f, g) = 𝒜(fg) − f𝒜g − g𝒜f and the measure change
//! generated by a compactly supported h.
//!
//! For H = eʰ − 1 the change φ₁ = ∇h, φ₂ = e^{−h}, φ₃(x, ξ) = e^{h(x+ξ)−h(x)}
//! has the explicit density
//!
//! ```text
//! D_t = exp(h(X_t) − h(X_0) − ∫₀ᵗ 𝒜H(X_s) e^{−h(X_s)} ds)
//! ```
//!
//! and transformed generator 𝒜̃f = 𝒜f + Γ(H, f) e^{−h}.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{ball_level, l, JumpKernel, MeasureChange, Model};
use crate::numgen::{apply_generator, Generator};
use crate::density::accumulate;
use crate::sim::{Batch, PathRecord, SimConfig};
use crate::state::{State, StateSpace, Support};
use crate::testfn::{fd_gradient, fd_hessian, value_at, Bump, ExpMinusOne, Product, TestFunction};

/// h ∈ C²_c(E) together with an upper bound on sup h.
#[derive(Clone)]
pub struct HFunction {
    h: Arc<dyn TestFunction>,
    sup: f64,
    big_h: Arc<ExpMinusOne>,
}

impl HFunction {
    /// `sup` must dominate h everywhere; it bounds φ₃ for rejection sampling.
    pub fn new(h: Arc<dyn TestFunction>, sup: f64) -> Result<Self> {
        if h.support().is_none() {
            return Err(Error::Param("h must have compact support".into()));
        }
        if !sup.is_finite() || sup < 0.0 {
            return Err(Error::Param(format!("sup h bound must be finite and >= 0, got {sup}")));
        }
        let big_h = Arc::new(ExpMinusOne { h: h.clone() });
        Ok(Self { h, sup, big_h })
    }

    pub fn bump(b: Bump) -> Self {
        let sup = b.amplitude.max(0.0);
        Self::new(Arc::new(b), sup).expect("bumps have compact support")
    }

    /// h ≡ 0.
    pub fn zero(dim: usize) -> Self {
        Self::bump(Bump::new(vec![0.0; dim], 1.0, 0.0))
    }

    pub fn h(&self) -> &Arc<dyn TestFunction> {
        &self.h
    }

    /// H = eʰ − 1.
    pub fn big_h(&self) -> Arc<dyn TestFunction> {
        self.big_h.clone()
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn support(&self) -> Support {
        self.h.support().expect("checked at construction")
    }

    /// h on E_Δ with h(Δ) = 0.
    pub fn value_at(&self, s: State<'_>) -> f64 {
        value_at(self.h.as_ref(), s)
    }

    /// Largest deviation of the supplied ∇h and Hess h from central
    /// differences at x.
    pub fn derivative_mismatch(&self, x: &[f64], step: f64) -> f64 {
        let d = self.dim();
        let f = |y: &[f64]| self.h.value(y);
        let (mut g, mut gn) = (vec![0.0; d], vec![0.0; d]);
        let (mut hs, mut hn) = (vec![0.0; d * d], vec![0.0; d * d]);
        self.h.gradient(x, &mut g);
        self.h.hessian(x, &mut hs);
        fd_gradient(&f, step, x, &mut gn);
        fd_hessian(&f, step, x, &mut hn);
        g.iter()
            .zip(&gn)
            .chain(hs.iter().zip(&hn))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// ∫ f(x + ξ) μ(x, dξ) over landing points in `window`.
fn windowed(kernel: &dyn JumpKernel, x: &[f64], f: &dyn Fn(&[f64]) -> f64, window: Option<&Support>) -> Result<f64> {
    let mut y = x.to_vec();
    kernel.integrate(
        x,
        &mut |xi| {
            for ((yi, xv), v) in y.iter_mut().zip(x).zip(xi) {
                *yi = xv + v;
            }
            f(&y)
        },
        window,
    )
}

/// ⟨α∇f, ∇g⟩ + γfg + ∫ (f(x+ξ) − f(x))(g(x+ξ) − g(x)) μ(x, dξ).
///
/// The jump integral is expanded as ∫fg − g(x)∫f − f(x)∫g + λfg over the
/// landing points so that every piece is integrated on its own support, as
/// the generator does.
pub fn gamma_explicit(model: &dyn Model, f: &dyn TestFunction, g: &dyn TestFunction, x: &[f64]) -> Result<f64> {
    if !model.space().contains(x) {
        return Err(Error::domain("carre du champ", x));
    }
    let d = model.dim();
    let (fx, gx) = (f.value(x), g.value(x));
    let mut alpha = vec![0.0; d * d];
    let (mut df, mut dg) = (vec![0.0; d], vec![0.0; d]);
    model.diffusion(x, &mut alpha)?;
    f.gradient(x, &mut df);
    g.gradient(x, &mut dg);
    let mut diffusive = 0.0;
    for i in 0..d {
        for j in 0..d {
            diffusive += df[i] * alpha[i * d + j] * dg[j];
        }
    }
    let killing = model.killing(x)? * fx * gx;

    let kernel = model.kernel();
    let (sf, sg) = (f.support(), g.support());
    let sfg = match (&sf, &sg) {
        (Some(a), Some(b)) => Some(a.intersect(b)),
        (a, b) => a.clone().or_else(|| b.clone()),
    };
    let int_fg = if sfg.as_ref().is_some_and(|s| s.is_empty()) {
        0.0
    } else {
        windowed(kernel, x, &|y| f.value(y) * g.value(y), sfg.as_ref())?
    };
    let int_f = if gx == 0.0 { 0.0 } else { windowed(kernel, x, &|y| f.value(y), sf.as_ref())? };
    let int_g = if fx == 0.0 { 0.0 } else { windowed(kernel, x, &|y| g.value(y), sg.as_ref())? };
    let lambda = kernel.intensity(x)?;
    let jump = int_fg - gx * int_f - fx * int_g + lambda * fx * gx;
    Ok(diffusive + killing + jump)
}

/// 𝒜(fg) − f𝒜g − g𝒜f at x, with fg differentiated by the Leibniz rule.
pub fn gamma_via_generator(
    model: &dyn Model,
    f: Arc<dyn TestFunction>,
    g: Arc<dyn TestFunction>,
    x: &[f64],
) -> Result<f64> {
    let fg = Product { f: f.clone(), g: g.clone() };
    let a_fg = apply_generator(model, &fg, x)?;
    let a_f = apply_generator(model, f.as_ref(), x)?;
    let a_g = apply_generator(model, g.as_ref(), x)?;
    Ok(a_fg - f.value(x) * a_g - g.value(x) * a_f)
}

/// The change (∇h, e^{−h}, e^{h(x+ξ)−h(x)}) on U = E with Uⁿ = E ∩ {‖x‖ < n}.
#[derive(Clone)]
pub struct HChange {
    h: HFunction,
    space: StateSpace,
}

pub fn change_from_h(h: HFunction, space: StateSpace) -> Result<HChange> {
    if h.dim() != space.dim() {
        return Err(Error::Param(format!(
            "h has dimension {} but the state space has dimension {}",
            h.dim(),
            space.dim()
        )));
    }
    Ok(HChange { h, space })
}

impl HChange {
    pub fn h(&self) -> &HFunction {
        &self.h
    }
}

impl MeasureChange for HChange {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.space.contains(x)
    }

    fn in_level(&self, n: u32, x: &[f64]) -> bool {
        ball_level(&self.space, n, x)
    }

    fn drift_tilt(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.h.h.gradient(x, out);
        Ok(())
    }

    fn killing_factor(&self, x: &[f64]) -> Result<f64> {
        Ok((-self.h.h.value(x)).exp())
    }

    fn jump_factor(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        let y: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a + b).collect();
        Ok((self.h.h.value(&y) - self.h.h.value(x)).exp())
    }

    fn jump_factor_bound(&self, x: &[f64]) -> Option<f64> {
        Some((self.h.sup - self.h.h.value(x)).exp().max(1.0))
    }

    fn jump_factor_kinks(&self, _x: &[f64]) -> Option<Support> {
        Some(self.h.support())
    }

    /// e^{−h(x)} ∫ H(x+ξ) μ + λ (e^{−h(x)} − 1), the first integral over
    /// landing points in supp h only.
    fn compensator_diff(&self, kernel: &dyn JumpKernel, x: &[f64]) -> Result<f64> {
        let e = (-self.h.h.value(x)).exp();
        let s = self.h.support();
        let big_h = self.h.big_h.as_ref();
        let inner = windowed(kernel, x, &|y| big_h.value(y), Some(&s))?;
        Ok(e * inner + kernel.intensity(x)? * (e - 1.0))
    }

    /// ∫ [l(e^{h(x+ξ)−h(x)}) − l(e^{−h(x)})] μ over supp h plus λ l(e^{−h(x)}).
    fn jump_entropy(&self, kernel: &dyn JumpKernel, x: &[f64]) -> Result<f64> {
        let hx = self.h.h.value(x);
        let off = l((-hx).exp());
        let s = self.h.support();
        let h = self.h.h.as_ref();
        let mut y = x.to_vec();
        let inner = kernel.integrate(
            x,
            &mut |xi| {
                for ((yi, xv), v) in y.iter_mut().zip(x).zip(xi) {
                    *yi = xv + v;
                }
                l((h.value(&y) - hx).exp()) - off
            },
            Some(&s),
        )?;
        Ok(inner + kernel.intensity(x)? * off)
    }
}

/// D_{t_k} for every grid index, from the closed form with h(Δ) = 0 and
/// 𝒜H(Δ) = 0. The killing step contributes up to τ; after a localisation
/// stop the value is frozen.
pub fn explicit_density(h: &HFunction, path: &PathRecord, model: &dyn Model) -> Result<Vec<f64>> {
    let big_h = h.big_h();
    let mut gen = Generator::new(model, big_h.as_ref());
    let h0 = h.value_at(path.state(0));
    let taken = path.steps_taken();
    let mut out = Vec::with_capacity(path.steps + 1);
    out.push(1.0);
    let mut integral = 0.0;
    for k in 0..path.steps {
        let dt = if k < taken {
            path.dt
        } else if path.kill_step() == Some(k) {
            path.kill_time - path.time(k)
        } else {
            0.0
        };
        if dt > 0.0 {
            if let State::Point(x) = path.state(k) {
                integral += gen.eval(x)? * (-h.h.value(x)).exp() * dt;
            }
        }
        out.push((h.value_at(path.state(k + 1)) - h0 - integral).exp());
    }
    Ok(out)
}

/// Root mean square over `paths` P-paths of max_k |D^explicit_k − D^accumulated_k|,
/// where the accumulated density uses `change_from_h(h)` at level `n`.
pub fn pathwise_gap(
    h: &HFunction,
    model: &dyn Model,
    x0: &[f64],
    cfg: &SimConfig,
    n: u32,
    paths: u64,
    seed: u64,
) -> Result<f64> {
    let change = change_from_h(h.clone(), model.space().clone())?;
    let sq = Batch::new(model, x0, cfg, paths, seed).fold_chunks(
        || ((), 0.0),
        |_, acc, _, rec| {
            let exp = explicit_density(h, rec, model)?;
            let trace = accumulate(rec, model, &change, n, 1.0)?;
            let worst = exp
                .iter()
                .zip(&trace.log_d)
                .map(|(e, l)| (e - l.exp()).abs())
                .fold(0.0, f64::max);
            *acc += worst * worst;
            Ok(())
        },
    )?;
    Ok((sq.iter().sum::<f64>() / paths as f64).sqrt())
}

/// 𝒜f(x) + Γ(H, f)(x) e^{−h(x)}.
pub fn tilde_generator_cdc(model: &dyn Model, h: &HFunction, f: &dyn TestFunction, x: &[f64]) -> Result<f64> {
    let a = apply_generator(model, f, x)?;
    let g = gamma_explicit(model, h.big_h.as_ref(), f, x)?;
    Ok(a + g * (-h.h.value(x)).exp())
}
