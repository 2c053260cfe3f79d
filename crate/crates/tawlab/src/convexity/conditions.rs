use super::gsq::geodesic_second_derivative;
use super::{worst_witnesses, ConditionReport, SampleRegion, Witness};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::field::Field2;
use crate::geometry::PhasePoint;
use crate::math::{Mat2, Vec2};
use crate::speed::SpeedField;

/// Tolerance within which a weak (≥) inequality counts as satisfied.
pub const EQUALITY_TOL: f64 = 1e-8;

/// Strictness threshold for strict (>) conditions.
pub const STRICT_TOL: f64 = 1e-6;

/// The convexity inequality for a squared-radius phase: min over unit phase
/// points of G²f − |ξ|²_g with f = r²/2. Equality cases (Euclidean r, collar
/// phases on a disk) report margin ≈ 0 and pass within [`EQUALITY_TOL`].
pub fn check_flow_convexity(
    c: &SpeedField,
    half_r_squared: &dyn Field2,
    region: &SampleRegion,
    n_samples: usize,
    exec: Execution,
) -> Result<ConditionReport> {
    let pts = region.halton_phase_samples(n_samples);
    let vals = exec::map_slice(exec, &pts, |&(x, theta, _)| {
        let p = PhasePoint::unit(c, x, Vec2::from_angle(theta));
        geodesic_second_derivative(c, half_r_squared, &p).map(|g2| (x, theta, g2 - 1.0))
    });
    let mut witnesses = Vec::new();
    for v in vals {
        let (x, theta, val) = v?;
        witnesses.push(Witness {
            x,
            xi: Some(Vec2::from_angle(theta)),
            t: None,
            value: val,
        });
    }
    if witnesses.is_empty() {
        return Ok(ConditionReport::indeterminate("flow-convexity", 0));
    }
    let margin = witnesses.iter().map(|w| w.value).fold(f64::INFINITY, f64::min);
    Ok(ConditionReport::evaluate(
        "flow-convexity",
        margin,
        EQUALITY_TOL,
        n_samples,
        worst_witnesses(witnesses, 5),
    ))
}

/// Phase family ψ_s(t,x) = (R − xⁿ)² − δ t² − s built over a normal
/// coordinate xⁿ (distance to the reference surface, positive on the
/// interior side), restricted to a collar xⁿ ∈ [0, ε].
pub struct PseudoconvexFamily {
    /// R: the largest curvature radius of the reference surface.
    pub curvature_radius: f64,
    pub delta: f64,
    /// Convexification exponent carried for reporting; the checks act on ψ.
    pub mu: f64,
    /// Collar depth ε.
    pub collar: f64,
    pub s_range: (f64, f64),
    pub normal_coord: Box<dyn Field2 + Send + Sync>,
}

impl PseudoconvexFamily {
    pub fn new(
        curvature_radius: f64,
        delta: f64,
        mu: f64,
        collar: f64,
        s_range: (f64, f64),
        normal_coord: Box<dyn Field2 + Send + Sync>,
    ) -> Result<Self> {
        if !(0.0 < delta && delta < 1.0) {
            return Err(Error::precondition("delta must lie in (0,1)"));
        }
        if mu <= 0.0 {
            return Err(Error::precondition("mu must be positive"));
        }
        let r = curvature_radius;
        let lo = (r - collar) * (r - collar);
        if s_range.0 < lo - 1e-12 || s_range.1 > r * r + 1e-12 || s_range.0 > s_range.1 {
            return Err(Error::precondition(format!(
                "s_range must lie within [(R-eps)^2, R^2] = [{lo}, {}]",
                r * r
            )));
        }
        Ok(PseudoconvexFamily { curvature_radius, delta, mu, collar, s_range, normal_coord })
    }

    /// The spatial phase f = (R − xⁿ)²/2 as a differentiable field.
    pub fn half_r_squared(&self) -> CollarHalfSquare<'_> {
        CollarHalfSquare { family: self }
    }

    /// ψ_s as a spacetime phase for the pseudoconvexity check.
    pub fn phase(&self, s: f64) -> CollarPhase<'_> {
        CollarPhase { family: self, s }
    }
}

/// f = (R − xⁿ)²/2 with derivatives by the chain rule.
pub struct CollarHalfSquare<'a> {
    family: &'a PseudoconvexFamily,
}

impl Field2 for CollarHalfSquare<'_> {
    fn value(&self, x: Vec2) -> f64 {
        let r = self.family.curvature_radius - self.family.normal_coord.value(x);
        0.5 * r * r
    }
    fn grad(&self, x: Vec2) -> Vec2 {
        let xn = self.family.normal_coord.value(x);
        let g = self.family.normal_coord.grad(x);
        g * -(self.family.curvature_radius - xn)
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        let xn = self.family.normal_coord.value(x);
        let g = self.family.normal_coord.grad(x);
        let h = self.family.normal_coord.hessian(x);
        Mat2::outer(g, g).add(h.scale(-(self.family.curvature_radius - xn)))
    }
}

/// A spacetime phase ψ(t,x) with the derivatives the pseudoconvexity check
/// needs. ∂_t and the spatial flow derivative commute on these phases.
pub trait PhaseFn: Sync {
    fn value(&self, t: f64, x: Vec2) -> f64;
    fn dt(&self, t: f64, x: Vec2) -> f64;
    fn dtt(&self, t: f64, x: Vec2) -> f64;
    fn grad_x(&self, t: f64, x: Vec2) -> Vec2;
    fn hess_x(&self, t: f64, x: Vec2) -> Mat2;
    /// ∇_x ∂_t ψ.
    fn grad_x_dt(&self, t: f64, x: Vec2) -> Vec2;
    /// Magnitude scale of ψ over the sampled set (for constraint bands).
    fn scale(&self) -> f64 {
        1.0
    }
}

/// ψ = f(x) − δ t² − s for a spatial field f.
pub struct QuadraticPhase<F: Field2> {
    pub spatial: F,
    pub delta: f64,
    pub s: f64,
    pub magnitude: f64,
}

impl<F: Field2> PhaseFn for QuadraticPhase<F> {
    fn value(&self, t: f64, x: Vec2) -> f64 {
        self.spatial.value(x) - self.delta * t * t - self.s
    }
    fn dt(&self, t: f64, _x: Vec2) -> f64 {
        -2.0 * self.delta * t
    }
    fn dtt(&self, _t: f64, _x: Vec2) -> f64 {
        -2.0 * self.delta
    }
    fn grad_x(&self, _t: f64, x: Vec2) -> Vec2 {
        self.spatial.grad(x)
    }
    fn hess_x(&self, _t: f64, x: Vec2) -> Mat2 {
        self.spatial.hessian(x)
    }
    fn grad_x_dt(&self, _t: f64, _x: Vec2) -> Vec2 {
        Vec2::ZERO
    }
    fn scale(&self) -> f64 {
        self.magnitude
    }
}

impl PhaseFn for CollarPhase<'_> {
    fn value(&self, t: f64, x: Vec2) -> f64 {
        let r = self.family.curvature_radius - self.family.normal_coord.value(x);
        r * r - self.family.delta * t * t - self.s
    }
    fn dt(&self, t: f64, _x: Vec2) -> f64 {
        -2.0 * self.family.delta * t
    }
    fn dtt(&self, _t: f64, _x: Vec2) -> f64 {
        -2.0 * self.family.delta
    }
    fn grad_x(&self, _t: f64, x: Vec2) -> Vec2 {
        let xn = self.family.normal_coord.value(x);
        self.family.normal_coord.grad(x) * (-2.0 * (self.family.curvature_radius - xn))
    }
    fn hess_x(&self, _t: f64, x: Vec2) -> Mat2 {
        let xn = self.family.normal_coord.value(x);
        let g = self.family.normal_coord.grad(x);
        let h = self.family.normal_coord.hessian(x);
        Mat2::outer(g, g)
            .scale(2.0)
            .add(h.scale(-2.0 * (self.family.curvature_radius - xn)))
    }
    fn grad_x_dt(&self, _t: f64, _x: Vec2) -> Vec2 {
        Vec2::ZERO
    }
    fn scale(&self) -> f64 {
        self.family.curvature_radius * self.family.curvature_radius
    }
}

pub struct CollarPhase<'a> {
    family: &'a PseudoconvexFamily,
    pub s: f64,
}

/// Non-characteristic check for a phase family at parameter s: the margin is
/// min over the level set {ψ_s = 0} of | |d(r²/2)|_g − δ|t| |. Extra probe
/// points (e.g. known degenerate vertices) are always included.
pub fn check_noncharacteristic(
    c: &SpeedField,
    family: &PseudoconvexFamily,
    s: f64,
    region: &SampleRegion,
    n_samples: usize,
    probes: &[Vec2],
    exec: Execution,
) -> ConditionReport {
    let f = family.half_r_squared();
    let delta = family.delta;
    let pts = region.halton_phase_samples(n_samples);
    let scale = family.curvature_radius.max(1e-12);
    // accept points within a thin band of the surface's x-projection so the
    // degenerate extremes (Σ_s touching ∂Ω at t = 0) stay sampled
    let band = 0.02 * scale * scale / delta;
    let eval = |x: Vec2| -> Option<Witness> {
        let r2 = 2.0 * f.value(x);
        let t2 = (r2 - s) / delta;
        if t2 < -band {
            return None; // no point of Σ_s over x
        }
        let t = t2.max(0.0).sqrt();
        let grad = f.grad(x);
        let co_norm = c.value(x) * grad.norm(); // |df|_g = c|∇f|
        let value = (co_norm - delta * t).abs();
        Some(Witness { x, xi: None, t: Some(t), value })
    };
    let mut witnesses: Vec<Witness> = exec::map_slice(exec, &pts, |&(x, _, _)| eval(x))
        .into_iter()
        .flatten()
        .collect();
    witnesses.extend(probes.iter().filter_map(|&x| eval(x)));
    let samples = witnesses.len();
    if witnesses.is_empty() {
        return ConditionReport::indeterminate("noncharacteristic", 0);
    }
    let margin = witnesses.iter().map(|w| w.value).fold(f64::INFINITY, f64::min);
    let mut rep = ConditionReport::evaluate(
        "noncharacteristic",
        margin - STRICT_TOL * scale,
        0.0,
        samples,
        worst_witnesses(witnesses, 5),
    );
    rep.extras.push(("raw_min".into(), margin));
    rep
}

/// Strong pseudoconvexity (∂_t − G)²ψ > 0 on the constraint set
/// {ψ = 0, ψ_t − Gψ = 0, |ξ|_g = 1}.
///
/// Samples (t, x, ξ) are Newton-projected onto the constraint set (t solves
/// ψ = 0, the direction angle solves ψ_t = Gψ; both λ-branches and both
/// ξ-signs are taken), then filtered by the tolerance bands
/// |ψ| < 1e−3·scale(ψ), |ψ_t − Gψ| < 1e−3. The projection keeps the band
/// populated; samples that fail to project are discarded. An empty constraint
/// set yields an indeterminate (flagged, not passed) report.
pub fn check_strong_pseudoconvexity(
    c: &SpeedField,
    phase: &dyn PhaseFn,
    region: &SampleRegion,
    t_max: f64,
    n_samples: usize,
    exec: Execution,
) -> Result<ConditionReport> {
    let tol_psi = 1e-3 * phase.scale();
    let tol_constraint = 1e-3;
    let pts = region.halton_phase_samples(n_samples);
    let results = exec::map_slice(exec, &pts, |&(x, _theta, aux)| {
        // project t onto {ψ(·,x) = 0} by damped Newton
        let mut t = (2.0 * aux - 1.0) * t_max;
        for _ in 0..60 {
            let f = phase.value(t, x);
            let df = phase.dt(t, x);
            if df.abs() < 1e-14 {
                break;
            }
            let step = (f / df).clamp(-0.5 * t_max, 0.5 * t_max);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        if phase.value(t, x).abs() > tol_psi || t.abs() > t_max {
            return Ok::<_, Error>(Vec::new());
        }
        let cv = c.value(x);
        let grad = phase.grad_x(t, x);
        let psi_t = phase.dt(t, x);
        // directions v with |v|_g = 1 solving ψ_t = v·∇ψ: |v| = c, so
        // cos(θ − α) = ψ_t / (c|∇ψ|) with α the gradient angle. Two tangency
        // roots; each is then also evaluated at ξ ↦ −ξ (the other λ-branch).
        let mag = cv * grad.norm();
        let mut dirs: Vec<Vec2> = Vec::new();
        if mag < 1e-12 {
            if psi_t.abs() < 1e-9 * (1.0 + phase.scale()) {
                // degenerate: every direction satisfies the constraint
                let th = 2.0 * std::f64::consts::PI * aux;
                dirs.push(Vec2::from_angle(th) * cv);
            }
        } else {
            let ratio = psi_t / mag;
            if ratio.abs() <= 1.0 {
                let alpha = grad.y.atan2(grad.x);
                let phi = ratio.acos();
                dirs.push(Vec2::from_angle(alpha + phi) * cv);
                dirs.push(Vec2::from_angle(alpha - phi) * cv);
            }
        }
        let gam = c.christoffel(x)?;
        let hess = phase.hess_x(t, x);
        let grad_dt = phase.grad_x_dt(t, x);
        let mut found = Vec::new();
        for v0 in dirs {
            if (psi_t - v0.dot(grad)).abs() > tol_constraint {
                continue;
            }
            for v in [v0, -v0] {
                let mut g2_psi = hess.quad(v);
                for i in 0..2 {
                    let mut q = 0.0;
                    for j in 0..2 {
                        for k in 0..2 {
                            q += gam[i][j][k] * comp(v, j) * comp(v, k);
                        }
                    }
                    g2_psi -= q * comp(grad, i);
                }
                let expr = phase.dtt(t, x) - 2.0 * v.dot(grad_dt) + g2_psi;
                found.push(Witness { x, xi: Some(v), t: Some(t), value: expr });
            }
        }
        Ok(found)
    });
    let mut witnesses = Vec::new();
    for r in results {
        witnesses.extend(r?);
    }
    if witnesses.is_empty() {
        return Ok(ConditionReport::indeterminate("pseudoconvexity", n_samples));
    }
    let accepted = witnesses.len();
    let margin = witnesses.iter().map(|w| w.value).fold(f64::INFINITY, f64::min);
    Ok(ConditionReport::evaluate(
        "pseudoconvexity",
        margin,
        0.0,
        accepted,
        worst_witnesses(witnesses, 5),
    ))
}

fn comp(v: Vec2, i: usize) -> f64 {
    if i == 0 {
        v.x
    } else {
        v.y
    }
}

/// Ellipticity of an initial datum or amplitude on K: margin = min |Δf|,
/// failed outright when Δf changes sign on K (a zero crossing exists).
pub fn check_ellipticity(
    f: &dyn Field2,
    k_samples: &[Vec2],
    exec: Execution,
) -> ConditionReport {
    if k_samples.is_empty() {
        return ConditionReport::indeterminate("ellipticity", 0);
    }
    let laps = exec::map_slice(exec, k_samples, |&x| f.laplacian(x));
    let mut witnesses: Vec<Witness> = k_samples
        .iter()
        .zip(&laps)
        .map(|(&x, &l)| Witness { x, xi: None, t: None, value: l.abs() })
        .collect();
    let min_lap = laps.iter().copied().fold(f64::INFINITY, f64::min);
    let max_lap = laps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = laps.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let margin_abs = witnesses.iter().map(|w| w.value).fold(f64::INFINITY, f64::min);
    let sign_change = min_lap < 0.0 && max_lap > 0.0;
    witnesses = worst_witnesses(witnesses, 8);
    let margin = if sign_change {
        // a zero of Δf exists between samples
        -margin_abs.max(STRICT_TOL * scale)
    } else {
        margin_abs - STRICT_TOL * scale
    };
    ConditionReport::evaluate("ellipticity", margin, 0.0, k_samples.len(), witnesses)
        .with_extra("min_abs_laplacian", margin_abs)
        .with_extra("sign_change", if sign_change { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{BumpField, ConstField, HalfSquareDist, LinearField, RadialDist};
    use crate::math::vec2;

    fn unit_disk_region() -> SampleRegion<'static> {
        static INSIDE: fn(Vec2) -> bool = |p| p.norm() < 1.0;
        SampleRegion::rect(vec2(-1.0, -1.0), vec2(1.0, 1.0)).with_inside(&INSIDE)
    }

    // Euclidean r = |x − x₀|: exact equality case, margin ≈ 0, passes.
    #[test]
    fn euclidean_radius_is_the_equality_case() {
        let c = SpeedField::constant(1.0);
        let f = HalfSquareDist { center: vec2(0.4, 0.2), coeff: 1.0 };
        let rep = check_flow_convexity(&c, &f, &unit_disk_region(), 2048, Execution::Parallel)
            .unwrap();
        assert!(rep.passed);
        assert!(rep.margin.abs() <= 1e-8, "margin {}", rep.margin);
    }

    // r ≡ const: G²(r²/2) = 0 < 1, fails with margin −1.
    #[test]
    fn constant_radius_fails_with_unit_deficit() {
        let c = SpeedField::constant(1.0);
        let f = ConstField(0.7);
        let rep = check_flow_convexity(&c, &f, &unit_disk_region(), 512, Execution::Parallel)
            .unwrap();
        assert!(!rep.passed);
        assert!((rep.margin + 1.0).abs() < 1e-12);
    }

    fn disk_family(delta: f64, collar: f64) -> PseudoconvexFamily {
        // unit disk: xⁿ = 1 − |x|, R = 1
        struct DiskNormal;
        impl Field2 for DiskNormal {
            fn value(&self, x: Vec2) -> f64 {
                1.0 - x.norm()
            }
            fn grad(&self, x: Vec2) -> Vec2 {
                -x.normalized()
            }
            fn hessian(&self, x: Vec2) -> Mat2 {
                let r = x.norm();
                let u = x.normalized();
                Mat2::identity().add(Mat2::outer(u, u).scale(-1.0)).scale(-1.0 / r)
            }
        }
        let r = 1.0f64;
        PseudoconvexFamily::new(
            r,
            delta,
            8.0,
            collar,
            ((r - collar) * (r - collar), r * r),
            Box::new(DiskNormal),
        )
        .unwrap()
    }

    // On the unit disk the collar phase is |x|² − δt² − s: the flow-convexity
    // margin is exactly zero (the critical case) across the collar.
    #[test]
    fn disk_collar_phase_is_critical_for_flow_convexity() {
        let c = SpeedField::constant(1.0);
        let fam = disk_family(0.99, 0.05);
        let f = fam.half_r_squared();
        let collar = |p: Vec2| {
            let xn = 1.0 - p.norm();
            (0.0..0.05).contains(&xn)
        };
        let reg = SampleRegion::rect(vec2(-1.0, -1.0), vec2(1.0, 1.0)).with_inside(&collar);
        let rep = check_flow_convexity(&c, &f, &reg, 1024, Execution::Parallel).unwrap();
        assert!(rep.passed, "margin {}", rep.margin);
        assert!(rep.margin.abs() < 1e-8);
    }

    #[test]
    fn noncharacteristic_passes_off_vertex_and_fails_at_vertex() {
        let c = SpeedField::constant(1.0);
        let fam = disk_family(0.9, 0.05);
        // s = R²: Σ touches only the boundary circle at t = 0, margin = R
        let reg = unit_disk_region();
        let rep = check_noncharacteristic(&c, &fam, 1.0, &reg, 2048, &[], Execution::Parallel);
        assert!(rep.passed);
        assert!((rep.extra("raw_min").unwrap() - 1.0).abs() < 0.08);

        // degenerate vertex: the pure quadratic family around x₀ with s = 0
        // has a zero of both sides at x = x₀, t = 0; probe it directly.
        struct RadialNormal; // xⁿ = R − |x − 0| with R = 1 → r(x) = |x|
        impl Field2 for RadialNormal {
            fn value(&self, x: Vec2) -> f64 {
                1.0 - x.norm()
            }
            fn grad(&self, x: Vec2) -> Vec2 {
                if x.norm() < 1e-12 {
                    Vec2::ZERO
                } else {
                    -x.normalized()
                }
            }
        }
        let fam0 = PseudoconvexFamily::new(
            1.0,
            0.9,
            8.0,
            1.0,
            (0.0, 1.0),
            Box::new(RadialNormal),
        )
        .unwrap();
        let rep = check_noncharacteristic(
            &c,
            &fam0,
            0.0,
            &reg,
            512,
            &[Vec2::ZERO],
            Execution::Parallel,
        );
        assert!(!rep.passed, "margin {}", rep.margin);
        assert!(rep.extra("raw_min").unwrap().abs() < 1e-12);
    }

    // Example phase ψ = |x−x₀|² − δt² − s with c ≡ 1, δ = 0.9, s = 0.5:
    // (∂_t − G)²ψ = 2 − 2δ = 0.2 > 0 on the constraint set.
    #[test]
    fn quadratic_phase_is_strongly_pseudoconvex() {
        let c = SpeedField::constant(1.0);
        let phase = QuadraticPhase {
            spatial: HalfSquareDist { center: vec2(0.2, 0.0), coeff: 2.0 },
            delta: 0.9,
            s: 0.5,
            magnitude: 1.0,
        };
        let reg = SampleRegion::rect(vec2(-1.2, -1.2), vec2(1.2, 1.2));
        let rep =
            check_strong_pseudoconvexity(&c, &phase, &reg, 1.2, 4096, Execution::Parallel)
                .unwrap();
        assert!(!rep.indeterminate, "constraint set should be populated");
        assert!(rep.passed);
        assert!((rep.margin - 0.2).abs() < 1e-6, "margin {}", rep.margin);
    }

    // ψ = −t²: (∂_t − G)²ψ = −2 < 0 everywhere on its constraint set.
    #[test]
    fn pure_time_phase_fails_pseudoconvexity() {
        let c = SpeedField::constant(1.0);
        let phase = QuadraticPhase {
            spatial: ConstField(0.0),
            delta: 1.0 - 1e-9,
            s: 0.0,
            magnitude: 1.0,
        };
        let reg = SampleRegion::rect(vec2(-1.0, -1.0), vec2(1.0, 1.0));
        let rep =
            check_strong_pseudoconvexity(&c, &phase, &reg, 1.0, 4096, Execution::Parallel)
                .unwrap();
        assert!(!rep.indeterminate);
        assert!(!rep.passed);
        assert!((rep.margin + 2.0).abs() < 1e-6, "margin {}", rep.margin);
    }

    #[test]
    fn ellipticity_examples() {
        let grid: Vec<Vec2> = (0..40)
            .flat_map(|i| (0..40).map(move |j| vec2(i as f64 / 40.0 - 0.5, j as f64 / 40.0 - 0.5)))
            .filter(|p| p.norm() < 0.45)
            .collect();
        // Δ(|x|²/2) = 2
        let f = HalfSquareDist { center: Vec2::ZERO, coeff: 1.0 };
        let rep = check_ellipticity(&f, &grid, Execution::Parallel);
        assert!(rep.passed);
        assert!((rep.extra("min_abs_laplacian").unwrap() - 2.0).abs() < 1e-9);

        // harmonic on K: linear function, Δ = 0
        let f = LinearField { a: vec2(1.0, -2.0), b: 0.3 };
        let rep = check_ellipticity(&f, &grid, Execution::Parallel);
        assert!(!rep.passed);

        // compact bump: Δ changes sign on the ring where the profile flexes
        let f = BumpField::new(Vec2::ZERO, 0.6, 1.0);
        let rep = check_ellipticity(&f, &grid, Execution::Parallel);
        assert!(!rep.passed);
        assert_eq!(rep.extra("sign_change"), Some(1.0));
        // witnesses cluster near the zero ring of Δf
        let w = rep.worst().unwrap();
        let lap_at = |p: Vec2| f.laplacian(p);
        assert!(lap_at(w.x).abs() < 0.3, "worst witness far from zero set");
        let _ = RadialDist { center: Vec2::ZERO };
    }
}
