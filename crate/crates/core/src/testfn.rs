//! Test functions f ∈ C²_c(E) with gradients and Hessians.
//!
//! Every function here evaluates to 0 at the cemetery; see [`value_at`].

use std::sync::Arc;

use crate::state::{State, Support};

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-4;

pub trait TestFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Step used by the finite-difference defaults.
    fn fd_step(&self) -> f64 {
        FD_STEP
    }

    /// ∇f(x). Defaults to central differences.
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        fd_gradient(&|y| self.value(y), self.fd_step(), x, out)
    }

    /// Hess f(x), row-major. Defaults to central differences.
    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        fd_hessian(&|y| self.value(y), self.fd_step(), x, out)
    }

    /// A box outside of which f, ∇f and Hess f vanish.
    fn support(&self) -> Option<Support> {
        None
    }
}

/// f at a point of E_Δ, with f(Δ) = 0.
pub fn value_at(f: &dyn TestFunction, s: State<'_>) -> f64 {
    match s {
        State::Point(x) => f.value(x),
        State::Cemetery => 0.0,
    }
}

pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, h: f64, x: &[f64], out: &mut [f64]) {
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let up = f(&y);
        y[i] = x[i] - h;
        let down = f(&y);
        y[i] = x[i];
        out[i] = (up - down) / (2.0 * h);
    }
}

pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, h: f64, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    let mut y = x.to_vec();
    let centre = f(x);
    for i in 0..d {
        y[i] = x[i] + h;
        let up = f(&y);
        y[i] = x[i] - h;
        let down = f(&y);
        y[i] = x[i];
        out[i * d + i] = (up - 2.0 * centre + down) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                y[i] = x[i] + si * h;
                y[j] = x[j] + sj * h;
                let v = f(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h * h);
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
}

/// A (1 − ‖x − c‖²/w²)^4 on the ball of radius w around c, zero outside.
/// C³ with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

const BUMP_POWER: i32 = 4;

impl Bump {
    pub fn new(center: Vec<f64>, width: f64, amplitude: f64) -> Self {
        assert!(width > 0.0, "bump width must be positive");
        Self {
            center,
            width,
            amplitude,
        }
    }

    /// 1 − r²/w² and the offset x − c.
    fn inner(&self, x: &[f64], offset: &mut [f64]) -> f64 {
        let mut r2 = 0.0;
        for ((o, xi), ci) in offset.iter_mut().zip(x).zip(&self.center) {
            *o = xi - ci;
            r2 += *o * *o;
        }
        1.0 - r2 / (self.width * self.width)
    }
}

impl TestFunction for Bump {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        let q = 1.0 - r2 / (self.width * self.width);
        if q <= 0.0 {
            0.0
        } else {
            self.amplitude * q.powi(BUMP_POWER)
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let q = self.inner(x, out);
        if q <= 0.0 {
            out.fill(0.0);
            return;
        }
        let k = f64::from(BUMP_POWER);
        let s = self.amplitude * k * q.powi(BUMP_POWER - 1) * (-2.0 / (self.width * self.width));
        out.iter_mut().for_each(|o| *o *= s);
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let mut off = vec![0.0; d];
        let q = self.inner(x, &mut off);
        if q <= 0.0 {
            out.fill(0.0);
            return;
        }
        let k = f64::from(BUMP_POWER);
        let w2 = self.width * self.width;
        let outer = self.amplitude * k * (k - 1.0) * q.powi(BUMP_POWER - 2) * 4.0 / (w2 * w2);
        let diag = self.amplitude * k * q.powi(BUMP_POWER - 1) * (-2.0 / w2);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = outer * off[i] * off[j] + if i == j { diag } else { 0.0 };
            }
        }
    }

    fn support(&self) -> Option<Support> {
        Some(Support::ball_box(&self.center, self.width))
    }
}

/// f ≡ c on E.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl TestFunction for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn hessian(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// f(x) = x_i.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate {
    pub dim: usize,
    pub index: usize,
}

impl TestFunction for Coordinate {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        x[self.index]
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[self.index] = 1.0;
    }

    fn hessian(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// f·g with Leibniz-rule derivatives.
#[derive(Clone)]
pub struct Product {
    pub f: Arc<dyn TestFunction>,
    pub g: Arc<dyn TestFunction>,
}

impl TestFunction for Product {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.f.value(x) * self.g.value(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let (fv, gv) = (self.f.value(x), self.g.value(x));
        let mut gf = vec![0.0; d];
        let mut gg = vec![0.0; d];
        self.f.gradient(x, &mut gf);
        self.g.gradient(x, &mut gg);
        for i in 0..d {
            out[i] = gf[i] * gv + fv * gg[i];
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let (fv, gv) = (self.f.value(x), self.g.value(x));
        let mut gf = vec![0.0; d];
        let mut gg = vec![0.0; d];
        let mut hf = vec![0.0; d * d];
        let mut hg = vec![0.0; d * d];
        self.f.gradient(x, &mut gf);
        self.g.gradient(x, &mut gg);
        self.f.hessian(x, &mut hf);
        self.g.hessian(x, &mut hg);
        for i in 0..d {
            for j in 0..d {
                let k = i * d + j;
                out[k] = hf[k] * gv + fv * hg[k] + gf[i] * gg[j] + gf[j] * gg[i];
            }
        }
    }

    fn support(&self) -> Option<Support> {
        match (self.f.support(), self.g.support()) {
            (Some(a), Some(b)) => Some(a.intersect(&b)),
            (a, b) => a.or(b),
        }
    }
}

/// Σ cᵢ fᵢ.
#[derive(Clone)]
pub struct LinearCombination {
    pub terms: Vec<(f64, Arc<dyn TestFunction>)>,
}

impl TestFunction for LinearCombination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(x)).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let mut buf = vec![0.0; out.len()];
        out.fill(0.0);
        for (c, f) in &self.terms {
            f.gradient(x, &mut buf);
            out.iter_mut().zip(&buf).for_each(|(o, b)| *o += c * b);
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let mut buf = vec![0.0; out.len()];
        out.fill(0.0);
        for (c, f) in &self.terms {
            f.hessian(x, &mut buf);
            out.iter_mut().zip(&buf).for_each(|(o, b)| *o += c * b);
        }
    }

    fn support(&self) -> Option<Support> {
        let mut it = self.terms.iter().map(|(_, f)| f.support());
        let first = it.next()??;
        it.try_fold(first, |acc, s| s.map(|s| acc.hull(&s)))
    }
}

/// H = eʰ − 1 with ∇H = eʰ ∇h and Hess H = eʰ (Hess h + ∇h ∇hᵀ).
#[derive(Clone)]
pub struct ExpMinusOne {
    pub h: Arc<dyn TestFunction>,
}

impl TestFunction for ExpMinusOne {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.h.value(x).exp_m1()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let e = self.h.value(x).exp();
        self.h.gradient(x, out);
        out.iter_mut().for_each(|o| *o *= e);
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let e = self.h.value(x).exp();
        let mut g = vec![0.0; d];
        self.h.gradient(x, &mut g);
        self.h.hessian(x, out);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = e * (out[i * d + j] + g[i] * g[j]);
            }
        }
    }

    fn support(&self) -> Option<Support> {
        self.h.support()
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type DerivFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A test function from closures. Missing derivatives fall back to central
/// differences with step `h`.
#[derive(Clone)]
pub struct FnTest {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Option<Arc<DerivFn>>,
    hessian: Option<Arc<DerivFn>>,
    support: Option<Support>,
    h: f64,
}

impl FnTest {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: None,
            hessian: None,
            support: None,
            h: FD_STEP,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_support(mut self, s: Support) -> Self {
        self.support = Some(s);
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.h = h;
        self
    }
}

impl TestFunction for FnTest {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn fd_step(&self) -> f64 {
        self.h
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.gradient {
            Some(g) => g(x, out),
            None => fd_gradient(&*self.value, self.h, x, out),
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        match &self.hessian {
            Some(h) => h(x, out),
            None => fd_hessian(&*self.value, self.h, x, out),
        }
    }

    fn support(&self) -> Option<Support> {
        self.support.clone()
    }
}
