//! Square-root diffusion with compound Poisson jumps and killing.
//!
//! The reference measure has generator
//!
//! ```text
//! 𝒜f(x) = ½σ²x f″(x) + (b₀ + b₁x) f′(x) − γ f(x) + λ ∫ (f(x + ξ) − f(x)) m(dξ)
//! ```
//!
//! on E = [0, ∞), with m a law on (0, ∞). The alternative measure has drift
//! b̃₀ + b̃₁x, killing rate γ̃₀ + γ̃₁x and jump measure
//! (m₀(ξ) + m₁(ξ)x) λ m(dξ), where each mᵢ(ξ) = cᵢ e^{−ρᵢξ}.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{l, Integrand, JumpKernel, MeasureChange, Model};
use crate::quad::{laguerre, legendre_panels};
use crate::rng::PathRng;
use crate::state::{StateSpace, Support};

/// Jump-size law m on (0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpLaw {
    Exponential { mean: f64 },
    PointMass { at: f64 },
}

impl JumpLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Exponential { mean } => mean,
            JumpLaw::PointMass { at } => at,
        }
    }

    fn sample(&self, rng: &mut PathRng) -> f64 {
        match *self {
            JumpLaw::Exponential { mean } => mean * Exp::new(1.0).expect("unit rate").sample(rng),
            JumpLaw::PointMass { at } => at,
        }
    }
}

/// ξ ↦ coef · e^{−rate ξ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weight {
    pub coef: f64,
    #[serde(default)]
    pub rate: f64,
}

impl Weight {
    pub const ONE: Weight = Weight { coef: 1.0, rate: 0.0 };
    pub const ZERO: Weight = Weight { coef: 0.0, rate: 0.0 };

    pub fn constant(coef: f64) -> Self {
        Self { coef, rate: 0.0 }
    }

    pub fn at(&self, xi: f64) -> f64 {
        if self.rate == 0.0 {
            self.coef
        } else {
            self.coef * (-self.rate * xi).exp()
        }
    }

    /// (∫ w dm, ∫ ξ w dm).
    pub fn moments(&self, law: &JumpLaw) -> (f64, f64) {
        match *law {
            JumpLaw::Exponential { mean } => {
                let s = 1.0 + self.rate * mean;
                (self.coef / s, self.coef * mean / (s * s))
            }
            JumpLaw::PointMass { at } => {
                let c = self.at(at);
                (c, at * c)
            }
        }
    }
}

/// Parameters of both measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirJumpParams {
    pub b0: f64,
    pub b1: f64,
    pub sigma: f64,
    /// Jump rate λ.
    pub lambda: f64,
    pub law: JumpLaw,
    /// Killing rate γ.
    pub gamma: f64,
    /// Initial state.
    pub y0: f64,
    pub tilde_b0: f64,
    pub tilde_b1: f64,
    pub tilde_gamma0: f64,
    pub tilde_gamma1: f64,
    pub m0: Weight,
    pub m1: Weight,
}

/// c₀ = ∫m₀ dm, c₁ = ∫m₁ dm, j₀ = ∫ξ m₀ dm, j₁ = ∫ξ m₁ dm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightMoments {
    pub c0: f64,
    pub c1: f64,
    pub j0: f64,
    pub j1: f64,
}

/// Which measure an oracle refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    P,
    Q,
}

/// b₀ ≥ σ²/2: the square-root diffusion does not reach 0.
pub fn feller_ok(b0: f64, sigma: f64) -> bool {
    b0 >= 0.5 * sigma * sigma
}

impl CirJumpParams {
    /// A parameter set whose alternative measure equals the reference one.
    pub fn identity(b0: f64, b1: f64, sigma: f64, lambda: f64, law: JumpLaw, gamma: f64, y0: f64) -> Self {
        Self {
            b0,
            b1,
            sigma,
            lambda,
            law,
            gamma,
            y0,
            tilde_b0: b0,
            tilde_b1: b1,
            tilde_gamma0: gamma,
            tilde_gamma1: 0.0,
            m0: Weight::ONE,
            m1: Weight::ZERO,
        }
    }

    pub fn moments(&self) -> WeightMoments {
        let (c0, j0) = self.m0.moments(&self.law);
        let (c1, j1) = self.m1.moments(&self.law);
        WeightMoments { c0, c1, j0, j1 }
    }

    /// Every violated constraint, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        let finite = [
            self.b0,
            self.b1,
            self.sigma,
            self.lambda,
            self.gamma,
            self.y0,
            self.tilde_b0,
            self.tilde_b1,
            self.tilde_gamma0,
            self.tilde_gamma1,
            self.m0.coef,
            self.m0.rate,
            self.m1.coef,
            self.m1.rate,
            self.law.mean(),
        ];
        need(finite.iter().all(|x| x.is_finite()), "all parameters must be finite".into());
        need(self.b0 >= 0.0, format!("b0 must be >= 0, got {}", self.b0));
        need(self.sigma > 0.0, format!("sigma must be > 0, got {}", self.sigma));
        need(self.lambda >= 0.0, format!("lambda must be >= 0, got {}", self.lambda));
        need(self.gamma > 0.0, format!("gamma must be > 0, got {}", self.gamma));
        need(self.y0 > 0.0, format!("y0 must be > 0, got {}", self.y0));
        match self.law {
            JumpLaw::Exponential { mean } => need(mean > 0.0, format!("exponential mean must be > 0, got {mean}")),
            JumpLaw::PointMass { at } => need(at > 0.0, format!("point mass must sit in (0, inf), got {at}")),
        }
        need(
            feller_ok(self.tilde_b0, self.sigma),
            format!(
                "tilde_b0 = {} violates the well-posedness hypothesis tilde_b0 >= sigma^2/2 = {}",
                self.tilde_b0,
                0.5 * self.sigma * self.sigma
            ),
        );
        need(
            self.tilde_gamma0 >= 0.0 && self.tilde_gamma1 >= 0.0,
            "tilde_gamma0 and tilde_gamma1 must be >= 0".into(),
        );
        need(
            !(self.tilde_gamma0 == 0.0 && self.tilde_gamma1 == 0.0),
            "(tilde_gamma0, tilde_gamma1) must lie in R+^2 without (0, 0)".into(),
        );
        for (name, w) in [("m0", self.m0), ("m1", self.m1)] {
            need(w.coef >= 0.0, format!("{name}.coef must be >= 0, got {}", w.coef));
            need(w.rate >= 0.0, format!("{name}.rate must be >= 0, got {}", w.rate));
        }
        need(
            self.m0.coef > 0.0 || self.m1.coef > 0.0,
            "(m0(xi), m1(xi)) must not vanish together".into(),
        );
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Param(v.join("; ")))
        }
    }
}

/// Jump kernel (m₀(ξ) + m₁(ξ)x) λ m(dξ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirKernel {
    pub lambda: f64,
    pub law: JumpLaw,
    pub m0: Weight,
    pub m1: Weight,
    c0: f64,
    c1: f64,
}

impl CirKernel {
    pub fn new(lambda: f64, law: JumpLaw, m0: Weight, m1: Weight) -> Self {
        Self {
            lambda,
            law,
            m0,
            m1,
            c0: m0.moments(&law).0,
            c1: m1.moments(&law).0,
        }
    }

    /// m₀(ξ) + m₁(ξ)x.
    pub fn weight(&self, x: f64, xi: f64) -> f64 {
        self.m0.at(xi) + self.m1.at(xi) * x
    }

    fn plain(&self) -> bool {
        self.m1.coef == 0.0 && self.m0.rate == 0.0
    }

    /// sup over the support of m of the weight at x.
    pub fn weight_bound(&self, x: f64) -> f64 {
        match self.law {
            JumpLaw::PointMass { at } => self.weight(x, at),
            JumpLaw::Exponential { .. } => self.m0.coef + self.m1.coef * x,
        }
    }
}

/// ∫ g(ξ) w(ξ) m(dξ) for m exponential with the given mean, restricted to
/// landing points x + ξ inside `window` when given.
fn exponential_integral(
    mean: f64,
    x: f64,
    window: Option<&Support>,
    mut gw: impl FnMut(f64) -> f64,
) -> f64 {
    let density = |xi: f64| (-xi / mean).exp() / mean;
    let Some(w) = window else {
        return laguerre(|s| gw(mean * s));
    };
    let a = (w.lo[0] - x).max(0.0);
    let b = w.hi[0] - x;
    if !(b > a) {
        return 0.0;
    }
    if b.is_finite() {
        let pts = w.pieces(0, x, a, b);
        return legendre_panels(&pts, |xi| gw(xi) * density(xi));
    }
    let finite_end = w.breaks[0]
        .iter()
        .map(|p| p - x)
        .filter(|p| p.is_finite() && *p > a)
        .fold(a, f64::max);
    let head = if finite_end > a {
        legendre_panels(&w.pieces(0, x, a, finite_end), |xi| gw(xi) * density(xi))
    } else {
        0.0
    };
    head + (-finite_end / mean).exp() * laguerre(|s| gw(finite_end + mean * s))
}

impl JumpKernel for CirKernel {
    fn dim(&self) -> usize {
        1
    }

    fn intensity(&self, x: &[f64]) -> Result<f64> {
        Ok(self.lambda * (self.c0 + self.c1 * x[0]))
    }

    fn constant_intensity(&self) -> Option<f64> {
        (self.m1.coef == 0.0).then_some(self.lambda * self.c0)
    }

    fn intensity_bound(&self, radius: f64) -> Option<f64> {
        Some(self.lambda * (self.c0 + self.c1 * radius))
    }

    fn sample(&self, x: &[f64], rng: &mut PathRng, xi: &mut [f64]) -> Result<()> {
        if self.plain() {
            xi[0] = self.law.sample(rng);
            return Ok(());
        }
        let bound = self.weight_bound(x[0]);
        loop {
            let v = self.law.sample(rng);
            let w = self.weight(x[0], v);
            if w > bound * (1.0 + 1e-12) {
                return Err(Error::RejectionBound {
                    bound,
                    weight: w,
                    state: x.to_vec(),
                });
            }
            if rng.random::<f64>() * bound < w {
                xi[0] = v;
                return Ok(());
            }
        }
    }

    fn integrate(&self, x: &[f64], g: &mut Integrand<'_>, window: Option<&Support>) -> Result<f64> {
        let x0 = x[0];
        let v = match self.law {
            JumpLaw::PointMass { at } => {
                if window.is_some_and(|w| !w.contains(&[x0 + at])) {
                    0.0
                } else {
                    self.weight(x0, at) * g(&[at])
                }
            }
            JumpLaw::Exponential { mean } => {
                exponential_integral(mean, x0, window, |xi| g(&[xi]) * self.weight(x0, xi))
            }
        };
        Ok(self.lambda * v)
    }
}

/// Coefficients b₀ + b₁x, σ²x, g₀ + g₁x and a [`CirKernel`] on [0, ∞).
#[derive(Debug, Clone)]
pub struct CirModel {
    space: StateSpace,
    pub b0: f64,
    pub b1: f64,
    pub sigma: f64,
    pub g0: f64,
    pub g1: f64,
    pub kernel: CirKernel,
}

impl Model for CirModel {
    fn space(&self) -> &StateSpace {
        &self.space
    }

    /// σ² max(x, 0): full truncation keeps α PSD at projected states.
    fn diffusion(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.sigma * self.sigma * x[0].max(0.0);
        Ok(())
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.b0 + self.b1 * x[0];
        Ok(())
    }

    fn killing(&self, x: &[f64]) -> Result<f64> {
        Ok(self.g0 + self.g1 * x[0].max(0.0))
    }

    fn kernel(&self) -> &dyn JumpKernel {
        &self.kernel
    }
}

pub fn p_model(p: &CirJumpParams) -> Result<CirModel> {
    p.validate()?;
    Ok(CirModel {
        space: StateSpace::non_negative(1),
        b0: p.b0,
        b1: p.b1,
        sigma: p.sigma,
        g0: p.gamma,
        g1: 0.0,
        kernel: CirKernel::new(p.lambda, p.law, Weight::ONE, Weight::ZERO),
    })
}

pub fn q_model(p: &CirJumpParams) -> Result<CirModel> {
    p.validate()?;
    Ok(CirModel {
        space: StateSpace::non_negative(1),
        b0: p.tilde_b0,
        b1: p.tilde_b1,
        sigma: p.sigma,
        g0: p.tilde_gamma0,
        g1: p.tilde_gamma1,
        kernel: CirKernel::new(p.lambda, p.law, p.m0, p.m1),
    })
}

/// The triple carrying the reference model to the alternative one.
///
/// U = (0, ∞) with Uⁿ = (1/n, n) in general. When b̃₀ = b₀, γ̃₀ > 0 and
/// m₀ > 0 every factor is finite and positive at 0, so U = [0, ∞) with
/// Uⁿ = [0, n); both sets are open in E.
#[derive(Debug, Clone)]
pub struct CirChange {
    params: CirJumpParams,
    moments: WeightMoments,
    closed_at_zero: bool,
    q_kernel: CirKernel,
}

pub fn change_spec(p: &CirJumpParams) -> Result<CirChange> {
    p.validate()?;
    Ok(CirChange {
        params: *p,
        moments: p.moments(),
        closed_at_zero: p.tilde_b0 == p.b0 && p.tilde_gamma0 > 0.0 && p.m0.coef > 0.0,
        q_kernel: CirKernel::new(p.lambda, p.law, p.m0, p.m1),
    })
}

impl CirChange {
    pub fn params(&self) -> &CirJumpParams {
        &self.params
    }

    pub fn includes_zero(&self) -> bool {
        self.closed_at_zero
    }
}

impl MeasureChange for CirChange {
    fn dim(&self) -> usize {
        1
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == 1 && x[0].is_finite() && if self.closed_at_zero { x[0] >= 0.0 } else { x[0] > 0.0 }
    }

    fn in_level(&self, n: u32, x: &[f64]) -> bool {
        let n = f64::from(n);
        self.in_domain(x) && x[0] < n && (self.closed_at_zero || x[0] > 1.0 / n)
    }

    fn drift_tilt(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if !self.in_domain(x) {
            return Err(Error::domain("phi1", x));
        }
        let p = &self.params;
        let s2 = p.sigma * p.sigma;
        let mut v = (p.tilde_b1 - p.b1) / s2;
        if p.tilde_b0 != p.b0 {
            v += (p.tilde_b0 - p.b0) / (s2 * x[0]);
        }
        out[0] = v;
        Ok(())
    }

    fn killing_factor(&self, x: &[f64]) -> Result<f64> {
        let p = &self.params;
        Ok((p.tilde_gamma0 + p.tilde_gamma1 * x[0]) / p.gamma)
    }

    /// m₀(ξ) + m₁(ξ)x on ξ > 0 and 1 elsewhere.
    fn jump_factor(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        if xi[0] > 0.0 {
            Ok(self.q_kernel.weight(x[0], xi[0]))
        } else {
            Ok(1.0)
        }
    }

    fn jump_factor_bound(&self, x: &[f64]) -> Option<f64> {
        Some(self.q_kernel.weight_bound(x[0]))
    }

    /// λ(c₀ − 1 + c₁x), relative to the reference kernel.
    fn compensator_diff(&self, _kernel: &dyn JumpKernel, x: &[f64]) -> Result<f64> {
        let m = &self.moments;
        Ok(self.params.lambda * (m.c0 - 1.0 + m.c1 * x[0]))
    }

    /// λ ∫ l(m₀(ξ) + m₁(ξ)x) m(dξ), relative to the reference kernel.
    fn jump_entropy(&self, _kernel: &dyn JumpKernel, x: &[f64]) -> Result<f64> {
        let p = &self.params;
        let k = &self.q_kernel;
        let v = match p.law {
            JumpLaw::PointMass { at } => l(k.weight(x[0], at)),
            JumpLaw::Exponential { mean } => {
                if p.m0.rate == 0.0 && p.m1.rate == 0.0 {
                    l(p.m0.coef + p.m1.coef * x[0])
                } else {
                    laguerre(|s| l(k.weight(x[0], mean * s)))
                }
            }
        };
        Ok(p.lambda * v)
    }
}

fn linear_ode(y0: f64, a: f64, b: f64, t: f64) -> f64 {
    // y' = a + b y; expm1 keeps the b → 0 limit y0 + a t accurate.
    if b == 0.0 {
        y0 + a * t
    } else {
        y0 * (b * t).exp() + a * (b * t).exp_m1() / b
    }
}

/// Mean of X_t given survival, for state-independent killing.
pub fn mean_oracle(p: &CirJumpParams, side: Side, t: f64) -> Result<f64> {
    let (a, b) = match side {
        Side::P => (p.b0 + p.lambda * p.law.mean(), p.b1),
        Side::Q => {
            if p.tilde_gamma1 != 0.0 {
                return Err(Error::OracleUnavailable(
                    "state-dependent killing correlates survival with the level".into(),
                ));
            }
            let m = p.moments();
            (p.tilde_b0 + p.lambda * m.j0, p.tilde_b1 + p.lambda * m.j1)
        }
    };
    Ok(linear_ode(p.y0, a, b, t))
}

/// Probability of no killing by t.
pub fn survival_oracle(p: &CirJumpParams, side: Side, t: f64) -> Result<f64> {
    match side {
        Side::P => Ok((-p.gamma * t).exp()),
        Side::Q => {
            if p.tilde_gamma1 != 0.0 {
                return Err(Error::OracleUnavailable("killing rate depends on the state".into()));
            }
            Ok((-p.tilde_gamma0 * t).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base() -> CirJumpParams {
        CirJumpParams::identity(0.5, -1.0, 1.0, 1.0, JumpLaw::Exponential { mean: 0.5 }, 0.2, 1.0)
    }

    #[test]
    fn weight_moments_match_quadrature() {
        let law = JumpLaw::Exponential { mean: 0.7 };
        let w = Weight { coef: 0.4, rate: 1.3 };
        let (c, j) = w.moments(&law);
        let qc = laguerre(|s| w.at(0.7 * s));
        let qj = laguerre(|s| 0.7 * s * w.at(0.7 * s));
        assert_relative_eq!(c, qc, epsilon = 1e-13);
        assert_relative_eq!(j, qj, epsilon = 1e-13);
    }

    #[test]
    fn oracle_reference_values() {
        let p = base();
        assert_relative_eq!(mean_oracle(&p, Side::P, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(mean_oracle(&p, Side::P, 0.0).unwrap(), 1.0);
        assert_relative_eq!(survival_oracle(&p, Side::P, 1.0).unwrap(), 0.818730753, epsilon = 1e-9);
        let q = CirJumpParams {
            tilde_gamma1: 0.05,
            ..p
        };
        assert!(matches!(mean_oracle(&q, Side::Q, 1.0), Err(Error::OracleUnavailable(_))));
    }

    #[test]
    fn feller() {
        assert!(feller_ok(0.5, 1.0));
        assert!(!feller_ok(0.49, 1.0));
        assert!(feller_ok(2.0, 1.5));
    }

    #[test]
    fn windowed_integral_matches_unwindowed() {
        let k = CirKernel::new(1.5, JumpLaw::Exponential { mean: 0.5 }, Weight { coef: 0.5, rate: 0.3 }, Weight::constant(0.25));
        let full = k.integrate(&[0.4], &mut |xi| (-xi[0]).exp(), None).unwrap();
        let mut w = Support::new(vec![-1.0], vec![f64::INFINITY]);
        w.breaks[0] = vec![0.9, 2.0];
        let win = k.integrate(&[0.4], &mut |xi| (-xi[0]).exp(), Some(&w)).unwrap();
        assert_relative_eq!(full, win, epsilon = 1e-12);
    }
}
