//! Generators, measure changes and the transformation between them.
//!
//! A [`Model`] is the coefficient set (α, β, γ, μ) of
//!
//! ```text
//! 𝒜f(x) = ½ tr(α(x) Hess f(x)) + ⟨β(x), ∇f(x)⟩ − γ(x) f(x)
//!         + ∫ (f(x + ξ) − f(x)) μ(x, dξ)
//! ```
//!
//! Only finite-activity kernels are supported, so the jump term is written
//! without the truncation compensator; [`chi_integral`] converts between the
//! two parametrisations.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{fixed, PathRng};
use crate::state::{norm, StateSpace, Support};

/// Tolerance below which a Cholesky pivot counts as zero.
pub const EPS_PSD: f64 = 1e-10;

/// Sample count of the Monte Carlo fallback in [`JumpKernel::integrate`].
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
/// Seed of the Monte Carlo fallback in [`JumpKernel::integrate`].
pub const DEFAULT_MC_SEED: u64 = 0x6A75_6D70_6469_6666;

/// Integrand over jump sizes ξ.
pub type Integrand<'a> = dyn FnMut(&[f64]) -> f64 + 'a;

/// Finite-activity transition kernel μ(x, dξ) = λ(x) m(x, dξ).
pub trait JumpKernel: Send + Sync {
    fn dim(&self) -> usize;

    /// Total intensity λ(x) = μ(x, ℝᵈ).
    fn intensity(&self, x: &[f64]) -> Result<f64>;

    /// `Some(λ)` when λ does not depend on the state.
    fn constant_intensity(&self) -> Option<f64> {
        None
    }

    /// An upper bound for λ on `{x ∈ E : ‖x‖ < radius}`, if known.
    fn intensity_bound(&self, _radius: f64) -> Option<f64> {
        None
    }

    /// Draw ξ from the normalised law m(x, ·) into `xi`.
    fn sample(&self, x: &[f64], rng: &mut PathRng, xi: &mut [f64]) -> Result<()>;

    /// ∫ g(ξ) μ(x, dξ).
    ///
    /// `window` is a box in landing coordinates y = x + ξ outside of which
    /// `g` vanishes; its break points mark where `g` may be non-smooth.
    /// Kernels without a closed form fall back to fixed-seed Monte Carlo with
    /// [`DEFAULT_MC_SAMPLES`] draws from [`DEFAULT_MC_SEED`] and ignore the
    /// window.
    fn integrate(&self, x: &[f64], g: &mut Integrand<'_>, _window: Option<&Support>) -> Result<f64> {
        let lambda = self.intensity(x)?;
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let mut rng = fixed(DEFAULT_MC_SEED);
        let mut xi = vec![0.0; self.dim()];
        let mut sum = 0.0;
        for _ in 0..DEFAULT_MC_SAMPLES {
            self.sample(x, &mut rng, &mut xi)?;
            sum += g(&xi);
        }
        Ok(lambda * sum / DEFAULT_MC_SAMPLES as f64)
    }

    /// ∫ ξ μ(x, dξ).
    fn first_moment(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.integrate(x, &mut |xi| xi[i], None)?;
        }
        Ok(())
    }
}

/// ∫ g μ(x, dξ) for an integrand that can fail. The first error wins.
pub fn integrate_fallible(
    kernel: &dyn JumpKernel,
    x: &[f64],
    window: Option<&Support>,
    mut g: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let mut failure = None;
    let v = kernel.integrate(
        x,
        &mut |xi| match g(xi) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        window,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// μ ≡ 0.
#[derive(Debug, Clone)]
pub struct NoJumps {
    pub dim: usize,
}

impl JumpKernel for NoJumps {
    fn dim(&self) -> usize {
        self.dim
    }

    fn intensity(&self, _x: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn constant_intensity(&self) -> Option<f64> {
        Some(0.0)
    }

    fn sample(&self, _x: &[f64], _rng: &mut PathRng, _xi: &mut [f64]) -> Result<()> {
        Err(Error::Param("sampled a jump from the zero kernel".into()))
    }

    fn integrate(&self, _x: &[f64], _g: &mut Integrand<'_>, _w: Option<&Support>) -> Result<f64> {
        Ok(0.0)
    }
}

/// Coefficients (α, β, γ, μ) on a state space E.
///
/// Evaluators are only ever called with points of E; the cemetery is
/// handled by callers, where every coefficient is zero.
pub trait Model: Send + Sync {
    fn space(&self) -> &StateSpace;

    fn dim(&self) -> usize {
        self.space().dim()
    }

    /// α(x), row-major d × d.
    fn diffusion(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// β(x).
    fn drift(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// γ(x) ≥ 0.
    fn killing(&self, x: &[f64]) -> Result<f64>;

    fn kernel(&self) -> &dyn JumpKernel;
}

/// Lower-triangular L with L Lᵀ = a for a symmetric PSD matrix.
///
/// Pivots within [`EPS_PSD`] of zero produce a zero column, so rank-deficient
/// matrices (α(0) = 0 for square-root diffusions) factor without error.
pub fn cholesky_psd(a: &[f64], d: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
    if d == 1 {
        let v = a[0];
        if v < -EPS_PSD || v.is_nan() {
            return Err(Error::NotPsd {
                state: x.to_vec(),
                pivot: v,
            });
        }
        out[0] = if v <= EPS_PSD { 0.0 } else { v.sqrt() };
        return Ok(());
    }
    for i in 0..d {
        for j in 0..i {
            let (u, v) = (a[i * d + j], a[j * d + i]);
            if (u - v).abs() > 1e-12 * (1.0 + u.abs().max(v.abs())) {
                return Err(Error::NotPsd {
                    state: x.to_vec(),
                    pivot: f64::NAN,
                });
            }
        }
    }
    out.fill(0.0);
    for j in 0..d {
        let mut pivot = a[j * d + j];
        for k in 0..j {
            pivot -= out[j * d + k] * out[j * d + k];
        }
        if pivot < -EPS_PSD || pivot.is_nan() {
            return Err(Error::NotPsd {
                state: x.to_vec(),
                pivot,
            });
        }
        if pivot <= EPS_PSD {
            continue;
        }
        let ljj = pivot.sqrt();
        out[j * d + j] = ljj;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= out[i * d + k] * out[j * d + k];
            }
            out[i * d + j] = s / ljj;
        }
    }
    Ok(())
}

/// Triple (φ₁, φ₂, φ₃) on an open set U ⊆ E with an increasing exhaustion
/// U¹ ⊆ U² ⊆ … of U.
pub trait MeasureChange: Send + Sync {
    fn dim(&self) -> usize;

    /// x ∈ U.
    fn in_domain(&self, x: &[f64]) -> bool;

    /// x ∈ Uⁿ.
    fn in_level(&self, n: u32, x: &[f64]) -> bool;

    /// φ₁(x).
    fn drift_tilt(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// φ₂(x) > 0.
    fn killing_factor(&self, x: &[f64]) -> Result<f64>;

    /// φ₃(x, ξ) > 0.
    fn jump_factor(&self, x: &[f64], xi: &[f64]) -> Result<f64>;

    /// sup over ξ of φ₃(x, ξ), needed to sample the reweighted kernel by
    /// rejection.
    fn jump_factor_bound(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Landing-coordinate box whose edges and breaks are the points where
    /// ξ ↦ φ₃(x, ξ) may lose smoothness.
    fn jump_factor_kinks(&self, _x: &[f64]) -> Option<Support> {
        None
    }

    /// κ(x) = ∫ (φ₃(x, ξ) − 1) μ(x, dξ).
    fn compensator_diff(&self, kernel: &dyn JumpKernel, x: &[f64]) -> Result<f64> {
        integrate_fallible(kernel, x, None, |xi| Ok(self.jump_factor(x, xi)? - 1.0))
    }

    /// ℓ₃(x) = ∫ l(φ₃(x, ξ)) μ(x, dξ).
    fn jump_entropy(&self, kernel: &dyn JumpKernel, x: &[f64]) -> Result<f64> {
        integrate_fallible(kernel, x, None, |xi| Ok(l(self.jump_factor(x, xi)?)))
    }
}

/// Uⁿ = (1/n, n), the default exhaustion of U = (0, ∞).
pub fn scalar_level(n: u32, x: &[f64]) -> bool {
    let n = f64::from(n);
    x.len() == 1 && x[0] > 1.0 / n && x[0] < n
}

/// Uⁿ = E ∩ {‖x‖ < n}.
pub fn ball_level(space: &StateSpace, n: u32, x: &[f64]) -> bool {
    space.contains(x) && norm(x) < f64::from(n)
}

/// φ₁ ≡ 0, φ₂ ≡ 1, φ₃ ≡ 1 on U = E.
#[derive(Debug, Clone)]
pub struct IdentityChange {
    space: StateSpace,
}

impl IdentityChange {
    pub fn new(space: StateSpace) -> Self {
        Self { space }
    }
}

impl MeasureChange for IdentityChange {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.space.contains(x)
    }

    fn in_level(&self, n: u32, x: &[f64]) -> bool {
        ball_level(&self.space, n, x)
    }

    fn drift_tilt(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }

    fn killing_factor(&self, _x: &[f64]) -> Result<f64> {
        Ok(1.0)
    }

    fn jump_factor(&self, _x: &[f64], _xi: &[f64]) -> Result<f64> {
        Ok(1.0)
    }

    fn jump_factor_bound(&self, _x: &[f64]) -> Option<f64> {
        Some(1.0)
    }

    fn compensator_diff(&self, _kernel: &dyn JumpKernel, _x: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn jump_entropy(&self, _kernel: &dyn JumpKernel, _x: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
}

/// (−φ₁, 1/φ₂, 1/φ₃): maps the transformed model back to the original one.
///
/// κ and ℓ₃ are integrated against whatever kernel the caller passes, which
/// must be the transformed kernel.
#[derive(Clone)]
pub struct InverseChange {
    inner: Arc<dyn MeasureChange>,
}

impl InverseChange {
    pub fn new(inner: Arc<dyn MeasureChange>) -> Self {
        Self { inner }
    }
}

impl MeasureChange for InverseChange {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.inner.in_domain(x)
    }

    fn in_level(&self, n: u32, x: &[f64]) -> bool {
        self.inner.in_level(n, x)
    }

    fn drift_tilt(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.drift_tilt(x, out)?;
        out.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    }

    fn killing_factor(&self, x: &[f64]) -> Result<f64> {
        Ok(1.0 / checked_killing_factor(self.inner.as_ref(), x)?)
    }

    fn jump_factor(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(1.0 / checked_jump_factor(self.inner.as_ref(), x, xi)?)
    }

    fn jump_factor_kinks(&self, x: &[f64]) -> Option<Support> {
        self.inner.jump_factor_kinks(x)
    }
}

/// φ₂(x), with the domain and positivity checks applied.
pub fn checked_killing_factor(change: &dyn MeasureChange, x: &[f64]) -> Result<f64> {
    if !change.in_domain(x) {
        return Err(Error::domain("phi2", x));
    }
    let v = change.killing_factor(x)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::positivity("phi2", v, x))
    }
}

/// φ₃(x, ξ), with the domain and positivity checks applied.
pub fn checked_jump_factor(change: &dyn MeasureChange, x: &[f64], xi: &[f64]) -> Result<f64> {
    if !change.in_domain(x) {
        return Err(Error::domain("phi3", x));
    }
    let v = change.jump_factor(x, xi)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::positivity("phi3", v, x))
    }
}

/// l(u) = u log u − u + 1 with l(0) = 1, for u ≥ 0.
pub fn entropy_l(u: f64) -> Result<f64> {
    if u < 0.0 || u.is_nan() {
        return Err(Error::Param(format!("entropy argument must be non-negative, got {u}")));
    }
    Ok(l(u))
}

/// l without the argument check. `u·ln_1p(u − 1)` keeps full relative
/// accuracy near the minimum at u = 1.
pub(crate) fn l(u: f64) -> f64 {
    if u == 0.0 {
        return 1.0;
    }
    if u.is_infinite() {
        return f64::INFINITY;
    }
    let v = u - 1.0;
    let r = if v.abs() < 0.5 { u * v.ln_1p() - v } else { u * u.ln() - v };
    r.max(0.0)
}

/// Run `f` with a zeroed scratch slice of length `n`, on the stack when small.
pub(crate) fn with_scratch<T>(n: usize, f: impl FnOnce(&mut [f64]) -> T) -> T {
    if n <= 16 {
        let mut buf = [0.0; 16];
        f(&mut buf[..n])
    } else {
        let mut buf = vec![0.0; n];
        f(&mut buf)
    }
}

fn quad_form(a: &[f64], v: &[f64]) -> f64 {
    let d = v.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += v[i] * a[i * d + j] * v[j];
        }
    }
    s
}

/// The three summands of the Λ integrand at x, without the ½ on the first:
/// ⟨α φ₁, φ₁⟩, l(φ₂) γ and ℓ₃.
pub fn lambda_parts(model: &dyn Model, change: &dyn MeasureChange, x: &[f64]) -> Result<[f64; 3]> {
    if !change.in_domain(x) {
        return Err(Error::domain("lambda integrand", x));
    }
    let d = model.dim();
    let quad = with_scratch(d * d + d, |buf| -> Result<f64> {
        let (a, phi1) = buf.split_at_mut(d * d);
        model.diffusion(x, a)?;
        change.drift_tilt(x, phi1)?;
        Ok(quad_form(a, phi1))
    })?;
    let gamma = model.killing(x)?;
    let kill = if gamma == 0.0 {
        0.0
    } else {
        l(checked_killing_factor(change, x)?) * gamma
    };
    let jump = change.jump_entropy(model.kernel(), x)?;
    Ok([quad, kill, jump])
}

/// ½⟨α φ₁, φ₁⟩ + l(φ₂) γ + ℓ₃ at x ∈ U.
pub fn lambda_integrand(model: &dyn Model, change: &dyn MeasureChange, x: &[f64]) -> Result<f64> {
    let [q, k, j] = lambda_parts(model, change, x)?;
    Ok(0.5 * q + k + j)
}

/// Grid maxima of the three summands bounded in the sufficient criterion
/// for finiteness of Λₙ.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    /// max ⟨α φ₁, φ₁⟩, max l(φ₂) γ, max ℓ₃.
    pub maxima: [f64; 3],
    /// Grid index of each maximum.
    pub argmax: [usize; 3],
    /// Whether each maximum sits on the first or last grid point, the
    /// signature of a bound that degenerates towards the edge of Uⁿ.
    pub at_edge: [bool; 3],
}

pub fn scan_sufficient_conditions(
    model: &dyn Model,
    change: &dyn MeasureChange,
    n: u32,
    grid: &[Vec<f64>],
) -> Result<ScanReport> {
    if grid.is_empty() {
        return Err(Error::Param("scan grid is empty".into()));
    }
    let mut maxima = [f64::NEG_INFINITY; 3];
    let mut argmax = [0; 3];
    for (i, x) in grid.iter().enumerate() {
        if !change.in_level(n, x) {
            return Err(Error::domain("scan grid point outside U^n", x));
        }
        let parts = lambda_parts(model, change, x)?;
        for c in 0..3 {
            if parts[c] > maxima[c] {
                maxima[c] = parts[c];
                argmax[c] = i;
            }
        }
    }
    let last = grid.len() - 1;
    let at_edge = argmax.map(|i| maxima[0].is_finite() && (i == 0 || i == last));
    Ok(ScanReport {
        maxima,
        argmax,
        at_edge,
    })
}

/// The truncation function χ(ξ) = ξ min(1, 1/‖ξ‖).
pub fn chi(xi: &[f64], out: &mut [f64]) {
    let r = norm(xi);
    let s = if r > 1.0 { 1.0 / r } else { 1.0 };
    for (o, v) in out.iter_mut().zip(xi) {
        *o = v * s;
    }
}

/// ∫ χ(ξ) μ(x, dξ), the drift shift between the untruncated and the
/// truncated parametrisation: β_truncated = β + ∫ χ dμ.
pub fn chi_integral(kernel: &dyn JumpKernel, x: &[f64], out: &mut [f64]) -> Result<()> {
    let d = out.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = with_scratch(d, |c| {
            kernel.integrate(
                x,
                &mut |xi| {
                    chi(xi, c);
                    c[i]
                },
                None,
            )
        })?;
    }
    Ok(())
}

/// Transformed drift in the truncated parametrisation,
/// β_t + α φ₁ + ∫ (φ₃ − 1) χ dμ, with β_t = β + ∫ χ dμ.
pub fn truncated_transformed_drift(
    model: &dyn Model,
    change: &dyn MeasureChange,
    x: &[f64],
    out: &mut [f64],
) -> Result<()> {
    if !change.in_domain(x) {
        return Err(Error::domain("drift", x));
    }
    let d = model.dim();
    model.drift(x, out)?;
    let mut a = vec![0.0; d * d];
    let mut phi1 = vec![0.0; d];
    model.diffusion(x, &mut a)?;
    change.drift_tilt(x, &mut phi1)?;
    let mut shift = vec![0.0; d];
    chi_integral(model.kernel(), x, &mut shift)?;
    let mut c = vec![0.0; d];
    for i in 0..d {
        let corr = integrate_fallible(model.kernel(), x, None, |xi| {
            chi(xi, &mut c);
            Ok((checked_jump_factor(change, x, xi)? - 1.0) * c[i])
        })?;
        let tilt: f64 = (0..d).map(|j| a[i * d + j] * phi1[j]).sum();
        out[i] += shift[i] + tilt + corr;
    }
    Ok(())
}

/// μ̃(x, dξ) = φ₃(x, ξ) μ(x, dξ).
pub struct ReweightedKernel {
    base: Arc<dyn Model>,
    change: Arc<dyn MeasureChange>,
}

impl JumpKernel for ReweightedKernel {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn intensity(&self, x: &[f64]) -> Result<f64> {
        if !self.change.in_domain(x) {
            return Err(Error::domain("jump intensity", x));
        }
        let base = self.base.kernel();
        let v = base.intensity(x)? + self.change.compensator_diff(base, x)?;
        // κ from quadrature may undershoot −λ by round-off.
        Ok(v.max(0.0))
    }

    fn sample(&self, x: &[f64], rng: &mut PathRng, xi: &mut [f64]) -> Result<()> {
        let bound = self
            .change
            .jump_factor_bound(x)
            .ok_or_else(|| Error::Param("reweighted kernel needs a jump-factor bound to sample".into()))?;
        loop {
            self.base.kernel().sample(x, rng, xi)?;
            let w = checked_jump_factor(self.change.as_ref(), x, xi)?;
            if w > bound * (1.0 + 1e-12) {
                return Err(Error::RejectionBound {
                    bound,
                    weight: w,
                    state: x.to_vec(),
                });
            }
            if rng.random::<f64>() * bound < w {
                return Ok(());
            }
        }
    }

    fn integrate(&self, x: &[f64], g: &mut Integrand<'_>, window: Option<&Support>) -> Result<f64> {
        if !self.change.in_domain(x) {
            return Err(Error::domain("jump integral", x));
        }
        let widened = match (window, self.change.jump_factor_kinks(x)) {
            (Some(w), Some(k)) => Some(w.clone().with_kinks_of(&k)),
            (w, _) => w.cloned(),
        };
        let change = self.change.as_ref();
        integrate_fallible(self.base.kernel(), x, widened.as_ref(), |xi| {
            let v = g(xi);
            if v == 0.0 {
                return Ok(0.0);
            }
            Ok(v * checked_jump_factor(change, x, xi)?)
        })
    }
}

/// The model with coefficients β + α φ₁, φ₂ γ and φ₃ μ, defined on U.
pub struct TransformedModel {
    base: Arc<dyn Model>,
    change: Arc<dyn MeasureChange>,
    kernel: ReweightedKernel,
}

impl TransformedModel {
    pub fn base(&self) -> &Arc<dyn Model> {
        &self.base
    }

    pub fn change(&self) -> &Arc<dyn MeasureChange> {
        &self.change
    }

    fn check(&self, what: &'static str, x: &[f64]) -> Result<()> {
        if self.change.in_domain(x) {
            Ok(())
        } else {
            Err(Error::domain(what, x))
        }
    }
}

pub fn transform_model(model: Arc<dyn Model>, change: Arc<dyn MeasureChange>) -> Result<TransformedModel> {
    if model.dim() != change.dim() {
        return Err(Error::Param(format!(
            "model dimension {} does not match change dimension {}",
            model.dim(),
            change.dim()
        )));
    }
    let kernel = ReweightedKernel {
        base: model.clone(),
        change: change.clone(),
    };
    Ok(TransformedModel {
        base: model,
        change,
        kernel,
    })
}

impl Model for TransformedModel {
    fn space(&self) -> &StateSpace {
        self.base.space()
    }

    fn diffusion(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check("diffusion", x)?;
        self.base.diffusion(x, out)
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check("drift", x)?;
        let d = self.dim();
        self.base.drift(x, out)?;
        with_scratch(d * d + d, |buf| {
            let (a, phi1) = buf.split_at_mut(d * d);
            self.base.diffusion(x, a)?;
            self.change.drift_tilt(x, phi1)?;
            for i in 0..d {
                out[i] += (0..d).map(|j| a[i * d + j] * phi1[j]).sum::<f64>();
            }
            Ok(())
        })
    }

    fn killing(&self, x: &[f64]) -> Result<f64> {
        self.check("killing", x)?;
        let g = self.base.killing(x)?;
        if g == 0.0 {
            return Ok(0.0);
        }
        Ok(checked_killing_factor(self.change.as_ref(), x)? * g)
    }

    fn kernel(&self) -> &dyn JumpKernel {
        &self.kernel
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn entropy_reference_values() {
        assert_eq!(entropy_l(1.0).unwrap(), 0.0);
        assert_eq!(entropy_l(0.0).unwrap(), 1.0);
        assert_relative_eq!(entropy_l(2.0).unwrap(), 2.0 * 2f64.ln() - 1.0, epsilon = 1e-15);
        assert!(entropy_l(-1e-9).is_err());
        // Second-order behaviour at the minimum: l(1 + v) ≈ v²/2.
        let v = 1e-6;
        assert_relative_eq!(l(1.0 + v), 0.5 * v * v, max_relative = 1e-5);
    }

    #[test]
    fn cholesky_handles_rank_deficiency() {
        let a = [4.0, 2.0, 2.0, 1.0];
        let mut l = [0.0; 4];
        cholesky_psd(&a, 2, &[0.0], &mut l).unwrap();
        assert_eq!(l, [2.0, 0.0, 1.0, 0.0]);
        let bad = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(cholesky_psd(&bad, 2, &[0.0], &mut l), Err(Error::NotPsd { .. })));
        let mut s = [0.0];
        cholesky_psd(&[-1e-12], 1, &[0.0], &mut s).unwrap();
        assert_eq!(s, [0.0]);
    }

    #[test]
    fn chi_is_identity_near_zero_and_bounded() {
        let mut out = [0.0; 2];
        chi(&[0.3, -0.4], &mut out);
        assert_eq!(out, [0.3, -0.4]);
        chi(&[3.0, 4.0], &mut out);
        assert_relative_eq!(out[0], 0.6);
        assert_relative_eq!(out[1], 0.8);
    }
}
