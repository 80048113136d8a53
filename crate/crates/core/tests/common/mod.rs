//! Constant-coefficient models and changes shared by the integration tests.
#![allow(dead_code)]

use jumpdiff::model::{ball_level, NoJumps};
use jumpdiff::{JumpKernel, MeasureChange, Model, Result, StateSpace};

/// Scalar model with constant α, β, γ and the given kernel.
pub struct ConstModel {
    pub space: StateSpace,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kernel: Box<dyn JumpKernel>,
}

impl ConstModel {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            space: StateSpace::euclidean(1),
            alpha,
            beta,
            gamma,
            kernel: Box::new(NoJumps { dim: 1 }),
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}

impl Model for ConstModel {
    fn space(&self) -> &StateSpace {
        &self.space
    }

    fn diffusion(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.alpha;
        Ok(())
    }

    fn drift(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.beta;
        Ok(())
    }

    fn killing(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.gamma)
    }

    fn kernel(&self) -> &dyn JumpKernel {
        self.kernel.as_ref()
    }
}

/// Constant φ₁, φ₂, φ₃ on U = ℝ with Uⁿ = (−n, n).
pub struct ConstChange {
    pub space: StateSpace,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl ConstChange {
    pub fn new(phi1: f64, phi2: f64, phi3: f64) -> Self {
        Self {
            space: StateSpace::euclidean(1),
            phi1,
            phi2,
            phi3,
        }
    }
}

impl MeasureChange for ConstChange {
    fn dim(&self) -> usize {
        1
    }

    fn in_domain(&self, _x: &[f64]) -> bool {
        true
    }

    fn in_level(&self, n: u32, x: &[f64]) -> bool {
        ball_level(&self.space, n, x)
    }

    fn drift_tilt(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.phi1;
        Ok(())
    }

    fn killing_factor(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.phi2)
    }

    fn jump_factor(&self, _x: &[f64], _xi: &[f64]) -> Result<f64> {
        Ok(self.phi3)
    }

    fn jump_factor_bound(&self, _x: &[f64]) -> Option<f64> {
        Some(self.phi3)
    }
}
