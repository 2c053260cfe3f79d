//! Bounded smooth domains Ω ⊂ ℝ² given as level sets {β < 0}, with an
//! arclength boundary parametrization, outward normals, the observation set
//! Γ ⊂ ∂Ω, and the per-point observation-time profile τ.

use crate::error::{Error, Result};
use crate::math::{vec2, Vec2};

#[derive(Clone, Debug)]
pub enum DomainShape {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
}

/// Observation-time profile on Γ (lengths; speeds are dimensionless).
#[derive(Clone, Debug)]
pub enum TauProfile {
    Constant(f64),
    /// One value per boundary sample (samples outside Γ are ignored).
    Table(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct BoundarySample {
    pub pos: Vec2,
    /// Outward unit normal.
    pub normal: Vec2,
    /// Arclength position as a fraction of the perimeter, in [0,1).
    pub s: f64,
}

#[derive(Clone, Debug)]
pub struct Domain {
    pub shape: DomainShape,
    boundary: Vec<BoundarySample>,
    perimeter: f64,
    /// Γ as arclength-fraction intervals (lo may be negative for wrap-around).
    gamma: Vec<(f64, f64)>,
    tau: TauProfile,
}

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 256;

impl Domain {
    pub fn new(shape: DomainShape, n_boundary: usize) -> Self {
        let (boundary, perimeter) = sample_boundary(&shape, n_boundary);
        Domain { shape, boundary, perimeter, gamma: vec![(0.0, 1.0)], tau: TauProfile::Constant(f64::INFINITY) }
    }

    pub fn disk(radius: f64) -> Self {
        Self::new(DomainShape::Disk { radius }, DEFAULT_BOUNDARY_SAMPLES)
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::new(DomainShape::Ellipse { a, b }, DEFAULT_BOUNDARY_SAMPLES)
    }

    /// Restrict the observation set to arclength-fraction intervals.
    pub fn with_gamma(mut self, intervals: Vec<(f64, f64)>) -> Self {
        assert!(!intervals.is_empty());
        self.gamma = intervals;
        self
    }

    pub fn with_tau(mut self, tau: TauProfile) -> Self {
        if let TauProfile::Table(t) = &tau {
            assert_eq!(t.len(), self.boundary.len(), "tau table must match boundary sampling");
        }
        self.tau = tau;
        self
    }

    /// Level-set function β: negative inside, zero on ∂Ω, positive outside.
    pub fn levelset(&self, x: Vec2) -> f64 {
        match self.shape {
            DomainShape::Disk { radius } => 0.5 * (x.norm2() - radius * radius),
            DomainShape::Ellipse { a, b } => {
                0.5 * (x.x * x.x / (a * a) + x.y * x.y / (b * b) - 1.0)
            }
        }
    }

    pub fn levelset_grad(&self, x: Vec2) -> Vec2 {
        match self.shape {
            DomainShape::Disk { .. } => x,
            DomainShape::Ellipse { a, b } => vec2(x.x / (a * a), x.y / (b * b)),
        }
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.levelset(x) < 0.0
    }

    /// Radius of the smallest origin-centered disk containing Ω.
    pub fn outer_radius(&self) -> f64 {
        match self.shape {
            DomainShape::Disk { radius } => radius,
            DomainShape::Ellipse { a, b } => a.max(b),
        }
    }

    /// Signed Euclidean distance to ∂Ω: negative inside, positive outside.
    pub fn signed_boundary_distance(&self, x: Vec2) -> f64 {
        match self.shape {
            DomainShape::Disk { radius } => x.norm() - radius,
            DomainShape::Ellipse { .. } => {
                let p = self.nearest_boundary_point(x);
                let d = (x - p).norm();
                if self.contains(x) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Closest point on ∂Ω (Newton on the boundary angle for ellipses).
    pub fn nearest_boundary_point(&self, x: Vec2) -> Vec2 {
        match self.shape {
            DomainShape::Disk { radius } => {
                let n = x.norm();
                if n < 1e-14 {
                    vec2(radius, 0.0)
                } else {
                    x * (radius / n)
                }
            }
            DomainShape::Ellipse { a, b } => {
                // Damped Newton on the boundary angle from the classic
                // foot-point guess; points near the evolute (around the
                // center) get extra starts since single-start iteration can
                // land on the wrong critical point there.
                let mut best = vec2(a, 0.0);
                let mut best_d = f64::INFINITY;
                let evolute = (a * a - b * b).abs() / a.max(b) + 0.05 * b;
                let starts = if x.norm() > evolute { 1 } else { 8 };
                for k in 0..starts {
                    let mut th = (a * x.y).atan2(b * x.x) + k as f64 * std::f64::consts::FRAC_PI_4;
                    for _ in 0..40 {
                        let (s, c) = th.sin_cos();
                        let p = vec2(a * c, b * s);
                        let dp = vec2(-a * s, b * c);
                        let ddp = vec2(-a * c, -b * s);
                        let r = p - x;
                        let f1 = r.dot(dp);
                        let f2 = dp.norm2() + r.dot(ddp);
                        if f2.abs() < 1e-300 {
                            break;
                        }
                        let step = f1 / f2.abs();
                        th -= step.clamp(-0.5, 0.5);
                        if step.abs() < 1e-14 {
                            break;
                        }
                    }
                    let (s, c) = th.sin_cos();
                    let p = vec2(a * c, b * s);
                    let d = (p - x).norm();
                    if d < best_d {
                        best_d = d;
                        best = p;
                    }
                }
                best
            }
        }
    }

    /// Curvature of ∂Ω at the boundary point nearest to x.
    pub fn curvature_at_nearest(&self, x: Vec2) -> f64 {
        match self.shape {
            DomainShape::Disk { radius } => 1.0 / radius,
            DomainShape::Ellipse { a, b } => {
                let p = self.nearest_boundary_point(x);
                let (s, c) = (p.y / b, p.x / a);
                a * b / (a * a * s * s + b * b * c * c).powf(1.5)
            }
        }
    }

    pub fn boundary(&self) -> &[BoundarySample] {
        &self.boundary
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn tau(&self) -> &TauProfile {
        &self.tau
    }

    pub fn gamma_intervals(&self) -> &[(f64, f64)] {
        &self.gamma
    }

    /// Arclength fraction of the boundary point nearest to x (continuous:
    /// nearest sample refined by projection onto the local tangent).
    pub fn boundary_fraction(&self, x: Vec2) -> f64 {
        let p = self.nearest_boundary_point(x);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, s) in self.boundary.iter().enumerate() {
            let d = (s.pos - p).norm2();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        let sample = &self.boundary[best];
        // counter-clockwise tangent (arclength increases with the angle)
        let tangent = sample.normal.perp();
        let ds = (p - sample.pos).dot(tangent);
        (sample.s + ds / self.perimeter).rem_euclid(1.0)
    }

    /// Whether the arclength fraction lies in Γ (with a symmetric tolerance,
    /// in fractions of the perimeter).
    pub fn fraction_in_gamma(&self, s: f64, tol: f64) -> bool {
        let s = s.rem_euclid(1.0);
        self.gamma.iter().any(|&(lo, hi)| {
            // compare in wrapped coordinates relative to lo
            let span = hi - lo;
            let rel = (s - lo).rem_euclid(1.0);
            rel <= span + tol || rel >= 1.0 - tol
        })
    }

    /// τ at a boundary sample index; 0 when the sample is outside Γ.
    pub fn tau_at_sample(&self, k: usize) -> f64 {
        let s = self.boundary[k].s;
        if !self.fraction_in_gamma(s, 0.0) {
            return 0.0;
        }
        match &self.tau {
            TauProfile::Constant(t) => *t,
            TauProfile::Table(v) => v[k],
        }
    }

    /// Boundary samples inside Γ together with their τ values.
    pub fn gamma_samples(&self) -> Vec<(usize, Vec2, f64)> {
        (0..self.boundary.len())
            .filter_map(|k| {
                let t = self.tau_at_sample(k);
                if t > 0.0 {
                    Some((k, self.boundary[k].pos, t))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Arclength fractions of Γ = full boundary check.
    pub fn gamma_is_full(&self) -> bool {
        self.gamma.iter().any(|&(lo, hi)| hi - lo >= 1.0 - 1e-12)
    }

    pub fn precondition_outside(&self, x: Vec2, tol: f64) -> Result<()> {
        if self.levelset(x) < -tol {
            return Err(Error::precondition(format!(
                "point ({}, {}) must lie outside or on the boundary",
                x.x, x.y
            )));
        }
        Ok(())
    }
}

/// Arclength-uniform boundary sampling with outward normals.
fn sample_boundary(shape: &DomainShape, n: usize) -> (Vec<BoundarySample>, f64) {
    let param = |th: f64| -> Vec2 {
        match *shape {
            DomainShape::Disk { radius } => Vec2::from_angle(th) * radius,
            DomainShape::Ellipse { a, b } => vec2(a * th.cos(), b * th.sin()),
        }
    };
    let speed = |th: f64| -> f64 {
        match *shape {
            DomainShape::Disk { radius } => radius,
            DomainShape::Ellipse { a, b } => {
                let (s, c) = th.sin_cos();
                (a * a * s * s + b * b * c * c).sqrt()
            }
        }
    };
    // cumulative arclength on a fine θ grid
    let fine = 16 * n.max(64);
    let mut cum = Vec::with_capacity(fine + 1);
    cum.push(0.0);
    let dth = 2.0 * std::f64::consts::PI / fine as f64;
    let mut acc = 0.0;
    for k in 0..fine {
        let th0 = k as f64 * dth;
        // midpoint rule per sub-interval
        acc += speed(th0 + 0.5 * dth) * dth;
        cum.push(acc);
    }
    let perimeter = acc;
    // invert: θ at arclength targets j·P/n
    let mut samples = Vec::with_capacity(n);
    let mut k = 0usize;
    for j in 0..n {
        let target = perimeter * j as f64 / n as f64;
        while k + 1 < cum.len() && cum[k + 1] < target {
            k += 1;
        }
        let frac = if cum[k + 1] > cum[k] {
            (target - cum[k]) / (cum[k + 1] - cum[k])
        } else {
            0.0
        };
        let th = (k as f64 + frac) * dth;
        let pos = param(th);
        let normal = match *shape {
            DomainShape::Disk { .. } => pos.normalized(),
            DomainShape::Ellipse { a, b } => vec2(pos.x / (a * a), pos.y / (b * b)).normalized(),
        };
        samples.push(BoundarySample { pos, normal, s: j as f64 / n as f64 });
    }
    (samples, perimeter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_boundary_is_uniform_and_outward() {
        let d = Domain::disk(1.0);
        assert!((d.perimeter() - 2.0 * std::f64::consts::PI).abs() < 1e-3);
        for s in d.boundary() {
            assert!((s.pos.norm() - 1.0).abs() < 1e-9);
            // outward: β increases along ν
            let eps = 1e-4;
            assert!(d.levelset(s.pos + s.normal * eps) > 0.0);
            assert!(d.levelset(s.pos - s.normal * eps) < 0.0);
        }
    }

    #[test]
    fn ellipse_boundary_samples_lie_on_curve_with_uniform_spacing() {
        let a = 1.4;
        let b = 0.8;
        let d = Domain::ellipse(a, b);
        let pts = d.boundary();
        let mut min_gap = f64::INFINITY;
        let mut max_gap: f64 = 0.0;
        for k in 0..pts.len() {
            let p = pts[k].pos;
            assert!((p.x * p.x / (a * a) + p.y * p.y / (b * b) - 1.0).abs() < 1e-6);
            let q = pts[(k + 1) % pts.len()].pos;
            let gap = (p - q).norm();
            min_gap = min_gap.min(gap);
            max_gap = max_gap.max(gap);
        }
        // arclength-uniform: chord lengths nearly equal
        assert!(max_gap / min_gap < 1.01, "gap spread {min_gap}..{max_gap}");
    }

    #[test]
    fn nearest_point_and_signed_distance_on_ellipse() {
        let d = Domain::ellipse(2.0, 1.0);
        // on-axis points have closed-form nearest points
        let p = d.nearest_boundary_point(vec2(3.0, 0.0));
        assert!((p - vec2(2.0, 0.0)).norm() < 1e-10);
        assert!((d.signed_boundary_distance(vec2(3.0, 0.0)) - 1.0).abs() < 1e-10);
        assert!((d.signed_boundary_distance(vec2(0.0, 0.0)) + 1.0).abs() < 1e-10);
        // inside/outside signs
        assert!(d.signed_boundary_distance(vec2(1.0, 0.3)) < 0.0);
        assert!(d.signed_boundary_distance(vec2(0.0, 1.5)) > 0.0);
    }

    #[test]
    fn gamma_membership_wraps() {
        let d = Domain::disk(1.0).with_gamma(vec![(-0.05, 0.05)]);
        assert!(d.fraction_in_gamma(0.02, 0.0));
        assert!(d.fraction_in_gamma(0.97, 0.0));
        assert!(!d.fraction_in_gamma(0.5, 0.0));
        assert!(!d.gamma_is_full());
        assert!(Domain::disk(1.0).gamma_is_full());
    }

    #[test]
    fn tau_is_zero_outside_gamma() {
        let d = Domain::disk(1.0)
            .with_gamma(vec![(0.0, 0.25)])
            .with_tau(TauProfile::Constant(3.0));
        let n = d.boundary().len();
        assert_eq!(d.tau_at_sample(0), 3.0);
        assert_eq!(d.tau_at_sample(n / 2), 0.0);
        let g = d.gamma_samples();
        assert!(g.len() > n / 5 && g.len() < n / 3);
    }

    #[test]
    fn outside_precondition() {
        let d = Domain::disk(1.0);
        assert!(d.precondition_outside(vec2(0.5, 0.0), 1e-9).is_err());
        assert!(d.precondition_outside(vec2(1.5, 0.0), 1e-9).is_ok());
    }
}
