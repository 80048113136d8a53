//! State space E ⊆ ℝᵈ, the cemetery Δ, and axis-aligned support boxes.

use std::fmt;
use std::sync::Arc;

/// A point of E_Δ = E ∪ {Δ}.
///
/// The cemetery is an out-of-band tag, never a coordinate vector, so there is
/// no way to confuse it with a point of E.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum State<'a> {
    Point(&'a [f64]),
    Cemetery,
}

impl<'a> State<'a> {
    pub fn point(&self) -> Option<&'a [f64]> {
        match *self {
            State::Point(x) => Some(x),
            State::Cemetery => None,
        }
    }

    pub fn is_cemetery(&self) -> bool {
        matches!(self, State::Cemetery)
    }

    /// Euclidean norm with ‖Δ‖ = ∞.
    pub fn norm(&self) -> f64 {
        match self {
            State::Point(x) => norm(x),
            State::Cemetery => f64::INFINITY,
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone)]
enum Region {
    Whole,
    NonNegative,
    Custom(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>),
}

/// Closed state space E ⊆ ℝᵈ together with the projection applied after an
/// Euler step.
#[derive(Clone)]
pub struct StateSpace {
    dim: usize,
    region: Region,
}

impl StateSpace {
    /// E = ℝᵈ.
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim > 0, "state dimension must be positive");
        Self {
            dim,
            region: Region::Whole,
        }
    }

    /// E = ℝ₊ᵈ; Euler steps are projected coordinatewise onto [0, ∞).
    pub fn non_negative(dim: usize) -> Self {
        assert!(dim > 0, "state dimension must be positive");
        Self {
            dim,
            region: Region::NonNegative,
        }
    }

    /// A user-supplied closed set. No projection is applied; a step that
    /// leaves E is a model error.
    pub fn custom(dim: usize, contains: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        assert!(dim > 0, "state dimension must be positive");
        Self {
            dim,
            region: Region::Custom(Arc::new(contains)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Membership in E. Total on ℝᵈ; false for non-finite input.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match &self.region {
            Region::Whole => true,
            Region::NonNegative => x.iter().all(|&v| v >= 0.0),
            Region::Custom(f) => f(x),
        }
    }

    pub fn contains_state(&self, s: State<'_>) -> bool {
        match s {
            State::Point(x) => self.contains(x),
            State::Cemetery => false,
        }
    }

    pub fn project(&self, x: &mut [f64]) {
        if let Region::NonNegative = self.region {
            for v in x.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
    }
}

impl fmt::Debug for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.region {
            Region::Whole => "whole",
            Region::NonNegative => "non-negative",
            Region::Custom(_) => "custom",
        };
        f.debug_struct("StateSpace")
            .field("dim", &self.dim)
            .field("region", &kind)
            .finish()
    }
}

/// Axis-aligned box outside of which an integrand vanishes, plus the
/// coordinates inside it where the integrand may lose smoothness.
///
/// Closed-form jump kernels use this to restrict quadrature to the part of
/// the jump range where the integrand is non-zero and to split the range at
/// kinks.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub breaks: Vec<Vec<f64>>,
}

impl Support {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        let breaks = vec![Vec::new(); lo.len()];
        Self { lo, hi, breaks }
    }

    /// The box ∏[cᵢ − r, cᵢ + r].
    pub fn ball_box(center: &[f64], radius: f64) -> Self {
        Self::new(
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(lo, hi)| lo >= hi)
    }

    /// Intersection of two boxes; break points of both are kept.
    pub fn intersect(&self, other: &Support) -> Support {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        let mut out = Support::new(lo, hi);
        out.breaks = self.merged_breaks(other);
        out
    }

    /// Smallest box containing both; break points of both are kept.
    pub fn hull(&self, other: &Support) -> Support {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect();
        let mut out = Support::new(lo, hi);
        out.breaks = self.merged_breaks(other);
        out
    }

    /// Same box, with the edges and break points of `other` added as break
    /// points.
    pub fn with_kinks_of(mut self, other: &Support) -> Support {
        for i in 0..self.dim() {
            self.breaks[i].push(other.lo[i]);
            self.breaks[i].push(other.hi[i]);
            self.breaks[i].extend_from_slice(&other.breaks[i]);
        }
        self
    }

    fn merged_breaks(&self, other: &Support) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| {
                let mut b = self.breaks[i].clone();
                b.push(self.lo[i]);
                b.push(self.hi[i]);
                b.push(other.lo[i]);
                b.push(other.hi[i]);
                b.extend_from_slice(&other.breaks[i]);
                b
            })
            .collect()
    }

    /// Sorted sub-interval end points of coordinate `i` restricted to
    /// `[a, b]`, in the shifted frame `v − shift`.
    pub fn pieces(&self, i: usize, shift: f64, a: f64, b: f64) -> Vec<f64> {
        let mut pts = vec![a, b];
        for &p in &self.breaks[i] {
            let q = p - shift;
            if q > a && q < b {
                pts.push(q);
            }
        }
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + x.abs()));
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cemetery_is_not_a_point() {
        let e = StateSpace::non_negative(1);
        assert!(!e.contains_state(State::Cemetery));
        assert_eq!(State::Cemetery.norm(), f64::INFINITY);
        assert_eq!(State::Cemetery, State::Cemetery);
        assert_ne!(State::Point(&[0.0]), State::Cemetery);
    }

    #[test]
    fn membership_is_total() {
        let e = StateSpace::non_negative(1);
        assert!(e.contains(&[0.0]));
        assert!(!e.contains(&[-1e-300]));
        assert!(!e.contains(&[f64::NAN]));
        assert!(!e.contains(&[1.0, 2.0]));
        let mut x = [-0.5];
        e.project(&mut x);
        assert_eq!(x, [0.0]);
    }

    #[test]
    fn pieces_split_at_breaks() {
        let mut s = Support::new(vec![0.0], vec![2.0]);
        s.breaks[0] = vec![0.5, 1.5, 7.0];
        let p = s.pieces(0, 1.0, -1.0, 1.0);
        assert_eq!(p, vec![-1.0, -0.5, 0.5, 1.0]);
    }
}
