//! Property-style invariants of the geometry stack: conservation along the
//! flow, metric axioms of the grid distances, and the flow-derivative oracle.

use proptest::prelude::*;
use tawlab::convexity::{geodesic_second_derivative, metric_set_distance};
use tawlab::domain::Domain;
use tawlab::field::{Field2, HalfSquareDist};
use tawlab::geometry::{
    exterior_distance, geodesic_flow, metric_distance, DistanceGridSpec, FlowOpts, PhasePoint,
};
use tawlab::math::{halton, vec2, Vec2};
use tawlab::speed::SpeedField;

// Speed conservation |ξ(t)|_g = 1 within 1e−6 across 1000 deterministic
// starts in a variable-speed field.
#[test]
fn speed_conservation_over_1000_starts() {
    let c = SpeedField::herglotz_trap();
    let dom = Domain::disk(2.0);
    let opts = FlowOpts { step: 2e-3, cap_time: 4.0, record_stride: 16, max_drift: 1e-4 };
    let mut worst = 0.0f64;
    for k in 0..1000u64 {
        let x = Vec2::from_angle(2.0 * std::f64::consts::PI * halton(k + 1, 3))
            * (1.9 * halton(k + 1, 2).sqrt());
        let dir = Vec2::from_angle(2.0 * std::f64::consts::PI * halton(k + 1, 5));
        let g = geodesic_flow(&c, &dom, PhasePoint::unit(&c, x, dir), 3.0, 3.0, &opts).unwrap();
        worst = worst.max(g.speed_drift);
    }
    assert!(worst < 1e-6, "worst drift {worst}");
}

// Flow-based oracle for the second derivative along geodesics, 500 samples
// across the smooth part of the trapping profile (the blend seams are only
// C², where no fixed-order difference oracle attains this tolerance). The
// differencing step scales with the local speed so the Euclidean footprint
// of the stencil is uniform.
#[test]
fn flow_second_derivative_oracle_500_samples() {
    let c = SpeedField::herglotz_trap();
    let f = HalfSquareDist { center: vec2(0.3, -0.1), coeff: 0.9 };
    let mut worst = 0.0f64;
    for k in 0..500u64 {
        let x = Vec2::from_angle(2.0 * std::f64::consts::PI * halton(k + 1, 3))
            * (1.3 * halton(k + 1, 2).sqrt());
        let dir = Vec2::from_angle(2.0 * std::f64::consts::PI * halton(k + 1, 5));
        let p = PhasePoint::unit(&c, x, dir);
        let g2 = geodesic_second_derivative(&c, &f, &p).unwrap();
        let cv = c.value(x);
        let step = 5e-5 / cv;
        let ds = 0.007 / cv;
        // five-point second difference of f along the exact flow
        let eval = |s: f64| -> f64 {
            let steps = (s.abs() / step).round() as usize;
            let mut q = p;
            let dt = step * s.signum();
            for _ in 0..steps {
                q = rk4(&c, q, dt);
            }
            f.value(q.x)
        };
        let d2 = (-eval(2.0 * ds) + 16.0 * eval(ds) - 30.0 * eval(0.0) + 16.0 * eval(-ds)
            - eval(-2.0 * ds))
            / (12.0 * ds * ds);
        worst = worst.max((g2 - d2).abs());
    }
    assert!(worst < 1e-5, "worst oracle gap {worst}");
}

fn rk4(c: &SpeedField, p: PhasePoint, dt: f64) -> PhasePoint {
    let rhs = |q: PhasePoint| -> (Vec2, Vec2) {
        let cv = c.value(q.x);
        (q.xi * (cv * cv), c.grad(q.x) * (-cv * q.xi.norm2()))
    };
    let (k1x, k1v) = rhs(p);
    let (k2x, k2v) = rhs(PhasePoint { x: p.x + k1x * (dt * 0.5), xi: p.xi + k1v * (dt * 0.5) });
    let (k3x, k3v) = rhs(PhasePoint { x: p.x + k2x * (dt * 0.5), xi: p.xi + k2v * (dt * 0.5) });
    let (k4x, k4v) = rhs(PhasePoint { x: p.x + k3x * dt, xi: p.xi + k3v * dt });
    PhasePoint {
        x: p.x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0),
        xi: p.xi + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0),
    }
}

// dist(Ω-sampling, ∂Ω-sampling) on the unit disk is the inradius.
#[test]
fn disk_set_distance_is_the_inradius() {
    let c = SpeedField::constant(1.0);
    let dom = Domain::disk(1.0);
    let spec = DistanceGridSpec::for_domain(&dom, 256);
    let mut interior = Vec::new();
    for j in 0..40 {
        for i in 0..40 {
            let p = vec2(-0.99 + i as f64 * 0.05, -0.99 + j as f64 * 0.05);
            if dom.contains(p) {
                interior.push(p);
            }
        }
    }
    let boundary: Vec<Vec2> = dom.boundary().iter().map(|s| s.pos).collect();
    let d = metric_set_distance(&c, &interior, &boundary, spec).unwrap();
    assert!((d - 1.0).abs() < 0.02, "inradius estimate {d}");
    // swapped arguments: boundary points are limits of interior samples
    let d_swap = metric_set_distance(&c, &boundary, &interior, spec).unwrap();
    assert!(d_swap < 0.06, "swapped distance {d_swap}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    // Triangle inequality of the refined grid metric within its documented
    // discretization slack.
    #[test]
    fn metric_distance_triangle_inequality(
        ax in -0.8f64..0.8, ay in -0.8f64..0.8,
        bx in -0.8f64..0.8, by in -0.8f64..0.8,
        cx in -0.8f64..0.8, cy in -0.8f64..0.8,
    ) {
        let c = SpeedField::herglotz_trap();
        let spec = DistanceGridSpec::new(1.2, 192);
        let a = vec2(ax, ay);
        let b = vec2(bx, by);
        let m = vec2(cx, cy);
        let dab = metric_distance(&c, a, b, spec).unwrap();
        let dam = metric_distance(&c, a, m, spec).unwrap();
        let dmb = metric_distance(&c, m, b, spec).unwrap();
        // slack 2h·max(1/c); c ≥ c_min ≈ 0.6 on the sampled box
        let slack = 2.0 * spec.h() / 0.6;
        prop_assert!(dab <= dam + dmb + slack,
            "triangle violated: {dab} > {dam} + {dmb} + {slack}");
    }

    // Obstacle-constrained paths are never shorter than straight lines.
    #[test]
    fn exterior_distance_dominates_euclidean(
        th1 in 0.0f64..std::f64::consts::TAU,
        r1 in 1.0f64..1.8,
        th2 in 0.0f64..std::f64::consts::TAU,
        r2 in 1.0f64..1.8,
    ) {
        let dom = Domain::disk(1.0);
        let spec = DistanceGridSpec::new(2.0, 192);
        let a = Vec2::from_angle(th1) * r1;
        let b = Vec2::from_angle(th2) * r2;
        let d = exterior_distance(&dom, a, b, spec).unwrap();
        prop_assert!(d >= (a - b).norm() - 1e-9, "{d} < |a-b| = {}", (a - b).norm());
    }
}
