//! Conformal Riemannian geometry of g = c⁻²δ: phase space, geodesic flow,
//! and the three distance notions used by the condition checkers (metric
//! distance, exterior/obstacle distance, asymmetric set distance).

mod distance;
mod geodesic;

pub use distance::{
    distance_field, exterior_distance, metric_distance, set_distance, DistanceField,
    DistanceGridSpec, NodeFilter,
};
pub use geodesic::{geodesic_flow, Exit, FlowOpts, Geodesic};

use crate::math::Vec2;
use crate::speed::SpeedField;

/// A point of phase space: position and momentum covector ξ. The metric
/// identifies ξ with the velocity vector v = g⁻¹ξ = c²ξ.
#[derive(Clone, Copy, Debug)]
pub struct PhasePoint {
    pub x: Vec2,
    pub xi: Vec2,
}

impl PhasePoint {
    /// Phase point with |ξ|_g = 1 pointing along `dir` (Euclidean direction).
    pub fn unit(c: &SpeedField, x: Vec2, dir: Vec2) -> Self {
        let cv = c.value(x);
        PhasePoint { x, xi: dir.normalized() / cv }
    }

    /// Co-norm |ξ|_g = c |ξ| (unit for unit-speed geodesics).
    pub fn g_norm(&self, c: &SpeedField) -> f64 {
        c.value(self.x) * self.xi.norm()
    }

    /// The velocity vector v = c²ξ the flow follows.
    pub fn velocity(&self, c: &SpeedField) -> Vec2 {
        self.xi * c.value(self.x).powi(2)
    }

    /// Rescale ξ so |ξ|_g = 1 (no-op on zero covectors).
    pub fn normalized(mut self, c: &SpeedField) -> Self {
        let n = self.g_norm(c);
        if n > 0.0 {
            self.xi = self.xi / n;
        }
        self
    }

    pub fn reversed(mut self) -> Self {
        self.xi = -self.xi;
        self
    }
}
