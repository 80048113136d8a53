//! Fixed-order Gauss rules shared by the closed-form jump laws.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::laguerre::GaussLaguerre;
use gauss_quad::legendre::GaussLegendre;
use gauss_quad::FiniteAboveNegOneF64;

/// Nodes per Gauss–Legendre panel.
pub const LEGENDRE_NODES: usize = 16;
/// Nodes of the Gauss–Laguerre rule used on unbounded ranges.
pub const LAGUERRE_NODES: usize = 64;

fn legendre_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(LEGENDRE_NODES).unwrap()))
}

fn laguerre_rule() -> &'static GaussLaguerre {
    static RULE: OnceLock<GaussLaguerre> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLaguerre::new(
            NonZeroUsize::new(LAGUERRE_NODES).unwrap(),
            FiniteAboveNegOneF64::new(0.0).unwrap(),
        )
    })
}

/// ∫ f over the consecutive panels `[pts[i], pts[i+1]]`.
pub fn legendre_panels(pts: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = legendre_rule();
    pts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| rule.integrate(w[0], w[1], &mut f))
        .sum()
}

/// ∫₀^∞ f(s) e^{−s} ds.
pub fn laguerre(f: impl FnMut(f64) -> f64) -> f64 {
    laguerre_rule().integrate(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_on_polynomials() {
        let v = legendre_panels(&[0.0, 0.5, 2.0], |x| x.powi(7) - 3.0 * x);
        assert_relative_eq!(v, 2f64.powi(8) / 8.0 - 6.0, epsilon = 1e-12);
        assert_relative_eq!(laguerre(|s| s * s), 2.0, epsilon = 1e-12);
        assert_relative_eq!(laguerre(|_| 1.0), 1.0, epsilon = 1e-14);
    }
}
