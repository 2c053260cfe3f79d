//! Hamiltonian geodesic flow of g = c⁻²δ with boundary exit events.
//!
//! The flow solves ẋ = c²ξ, ξ̇ = −c ∇c |ξ|² (the Hamilton equations of
//! H = ½ c²|ξ|²) with classic RK4. Exit times through ∂Ω are located by
//! bisection on the domain level set to 1e−10 in time. A ray that stays
//! inside beyond the configured cap is flagged as trapped in that direction.

use super::PhasePoint;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::speed::SpeedField;

/// Outcome of following a ray in one time direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exit {
    /// Crossed ∂Ω at the given flow time (signed: negative for backward).
    Boundary(f64),
    /// Still inside Ω when the integration cap was reached.
    Capped(f64),
}

impl Exit {
    pub fn time(&self) -> f64 {
        match *self {
            Exit::Boundary(t) | Exit::Capped(t) => t,
        }
    }

    pub fn is_trapped(&self) -> bool {
        matches!(self, Exit::Capped(_))
    }
}

#[derive(Clone, Debug)]
pub struct Geodesic {
    /// Time-stamped phase points, forward orbit (t ≥ 0).
    pub samples: Vec<(f64, PhasePoint)>,
    pub exit_fwd: Exit,
    pub exit_bwd: Exit,
    /// Set when either direction hit the cap without exiting.
    pub trapped: bool,
    /// max |(|ξ(t)|_g − |ξ(0)|_g)| observed along the orbit.
    pub speed_drift: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOpts {
    pub step: f64,
    /// Integration cap per direction; rays alive past it are trapped.
    pub cap_time: f64,
    /// Keep every `record_stride`-th sample in `samples` (fwd direction).
    pub record_stride: usize,
    /// Abort with an accuracy error if |ξ|_g drifts more than this.
    pub max_drift: f64,
}

impl FlowOpts {
    pub fn new(step: f64, cap_time: f64) -> Self {
        FlowOpts { step, cap_time, record_stride: 8, max_drift: 1e-4 }
    }

    /// Default cap: 10 × diameter(Ω) at the slowest speed inside.
    pub fn for_scenario(domain: &Domain, c: &SpeedField) -> Self {
        let diam = 2.0 * domain.outer_radius();
        let c_min = (0..400)
            .map(|k| {
                let th = k as f64 * std::f64::consts::PI / 200.0;
                let r = (k % 20) as f64 / 20.0 * domain.outer_radius();
                c.value(Vec2::from_angle(th) * r)
            })
            .fold(f64::INFINITY, f64::min);
        FlowOpts::new(1e-3 * diam, 10.0 * diam / c_min.max(1e-6))
    }
}

fn rhs(c: &SpeedField, p: PhasePoint) -> (Vec2, Vec2) {
    let cv = c.value(p.x);
    let dc = c.grad(p.x);
    let xi2 = p.xi.norm2();
    (p.xi * (cv * cv), dc * (-cv * xi2))
}

fn rk4_step(c: &SpeedField, p: PhasePoint, dt: f64) -> PhasePoint {
    let (k1x, k1v) = rhs(c, p);
    let (k2x, k2v) = rhs(c, PhasePoint { x: p.x + k1x * (dt * 0.5), xi: p.xi + k1v * (dt * 0.5) });
    let (k3x, k3v) = rhs(c, PhasePoint { x: p.x + k2x * (dt * 0.5), xi: p.xi + k2v * (dt * 0.5) });
    let (k4x, k4v) = rhs(c, PhasePoint { x: p.x + k3x * dt, xi: p.xi + k3v * dt });
    PhasePoint {
        x: p.x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0),
        xi: p.xi + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0),
    }
}

/// Follow the geodesic through `start` (normalized to unit g-speed) over
/// [−t_bwd, t_fwd], recording the forward orbit and locating both exits.
pub fn geodesic_flow(
    c: &SpeedField,
    domain: &Domain,
    start: PhasePoint,
    t_fwd: f64,
    t_bwd: f64,
    opts: &FlowOpts,
) -> Result<Geodesic> {
    assert!(opts.step > 0.0, "step must be positive");
    let start = start.normalized(c);
    let mut samples = vec![(0.0, start)];
    let mut drift: f64 = 0.0;

    let fwd = integrate_direction(c, domain, start, t_fwd.min(opts.cap_time), opts, 1.0, Some(&mut samples), &mut drift);
    let bwd = integrate_direction(c, domain, start, t_bwd.min(opts.cap_time), opts, -1.0, None, &mut drift);

    if drift > opts.max_drift {
        return Err(Error::Accuracy(format!(
            "geodesic speed conservation drift {drift:.3e} exceeds {:.1e}; reduce the step",
            opts.max_drift
        )));
    }

    let trapped = fwd.is_trapped() || bwd.is_trapped();
    Ok(Geodesic { samples, exit_fwd: fwd, exit_bwd: bwd, trapped, speed_drift: drift })
}

#[allow(clippy::too_many_arguments)]
fn integrate_direction(
    c: &SpeedField,
    domain: &Domain,
    start: PhasePoint,
    t_max: f64,
    opts: &FlowOpts,
    sign: f64,
    mut record: Option<&mut Vec<(f64, PhasePoint)>>,
    drift: &mut f64,
) -> Exit {
    let dt = opts.step * sign;
    let mut t = 0.0f64;
    let mut p = start;
    let mut inside = domain.levelset(p.x) < 0.0;
    let mut k = 0usize;
    while t.abs() < t_max {
        let p_next = rk4_step(c, p, dt);
        let t_next = t + dt;
        let d = (p_next.g_norm(c) - 1.0).abs();
        if d > *drift {
            *drift = d;
        }
        let inside_next = domain.levelset(p_next.x) < 0.0;
        if inside && !inside_next {
            // bisection on the step fraction for the crossing time
            let (exit_t, exit_state) = bisect_exit(c, domain, p, t, dt);
            if let Some(rec) = record.as_deref_mut() {
                rec.push((exit_t, exit_state));
            }
            return Exit::Boundary(exit_t);
        }
        p = p_next;
        t = t_next;
        inside = inside_next;
        k += 1;
        if let Some(rec) = record.as_deref_mut() {
            if k % opts.record_stride == 0 {
                rec.push((t, p));
            }
        }
    }
    if inside {
        Exit::Capped(t)
    } else {
        // started outside Ω: the exit already happened
        Exit::Boundary(0.0)
    }
}

fn bisect_exit(c: &SpeedField, domain: &Domain, p0: PhasePoint, t0: f64, dt: f64) -> (f64, PhasePoint) {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    // β(x(t0 + s·dt)) changes sign on [0,1]
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let pm = rk4_step(c, p0, dt * mid);
        if domain.levelset(pm.x) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) * dt.abs() < 1e-10 {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    (t0 + dt * s, rk4_step(c, p0, dt * s))
}
