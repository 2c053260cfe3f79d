//! Numerical verification of the geometric hypotheses behind uniqueness and
//! stability of single-measurement recovery: convexity of the squared-radius
//! phase along the geodesic flow, non-characteristic level sets, strong
//! pseudoconvexity, strict convexity of level-set foliations, observation
//! times, the partial-data cone condition, and source ellipticity.
//!
//! Every check samples deterministically (Halton sequences plus optional
//! caller-supplied probe points), reduces to a worst-case margin, and returns
//! a machine-readable [`ConditionReport`].

mod conditions;
mod foliation;
mod gsq;
mod surface;

pub use conditions::{
    check_ellipticity, check_flow_convexity, check_noncharacteristic,
    check_strong_pseudoconvexity, PhaseFn, PseudoconvexFamily, QuadraticPhase,
};
pub use foliation::{
    check_cone_condition, check_observation_time, metric_set_distance, verify_foliation,
    ConeReport, FoliationFamily, FoliationOpts, ObservationOpts,
};
pub use gsq::geodesic_second_derivative;
pub use surface::{sample_level_set, second_fundamental_form};

use crate::math::{halton_point, vec2, Vec2};

/// A worst sample recorded by a check.
#[derive(Clone, Copy, Debug)]
pub struct Witness {
    pub x: Vec2,
    pub xi: Option<Vec2>,
    pub t: Option<f64>,
    pub value: f64,
}

/// Machine-readable outcome of a single hypothesis check.
///
/// `passed` ⟺ `margin > -equality_tol` (and the constraint set was
/// non-empty). Strict conditions use `equality_tol = 0`, which recovers the
/// margin > 0 ⟺ passed convention exactly; weak inequalities (≥) report the
/// raw margin and pass within a small tolerance of equality.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub condition_id: String,
    pub passed: bool,
    pub margin: f64,
    pub equality_tol: f64,
    pub samples: usize,
    /// Set when the constraint set came out empty after filtering; such a
    /// report is flagged, never passed.
    pub indeterminate: bool,
    pub witnesses: Vec<Witness>,
    /// Auxiliary named quantities (critical times, sub-margins, bounds).
    pub extras: Vec<(String, f64)>,
}

impl ConditionReport {
    pub fn evaluate(
        condition_id: impl Into<String>,
        margin: f64,
        equality_tol: f64,
        samples: usize,
        witnesses: Vec<Witness>,
    ) -> Self {
        ConditionReport {
            condition_id: condition_id.into(),
            passed: margin > -equality_tol,
            margin,
            equality_tol,
            samples,
            indeterminate: false,
            witnesses,
            extras: Vec::new(),
        }
    }

    pub fn indeterminate(condition_id: impl Into<String>, samples: usize) -> Self {
        ConditionReport {
            condition_id: condition_id.into(),
            passed: false,
            margin: f64::NAN,
            equality_tol: 0.0,
            samples,
            indeterminate: true,
            witnesses: Vec::new(),
            extras: Vec::new(),
        }
    }

    pub fn with_extra(mut self, key: impl Into<String>, value: f64) -> Self {
        self.extras.push((key.into(), value));
        self
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    /// Worst witness (the one attaining the margin), if any.
    pub fn worst(&self) -> Option<&Witness> {
        self.witnesses.first()
    }
}

/// Rectangular sampling region with an optional membership predicate.
pub struct SampleRegion<'a> {
    pub lo: Vec2,
    pub hi: Vec2,
    pub inside: Option<&'a (dyn Fn(Vec2) -> bool + Sync)>,
}

impl<'a> SampleRegion<'a> {
    pub fn rect(lo: Vec2, hi: Vec2) -> Self {
        SampleRegion { lo, hi, inside: None }
    }

    pub fn with_inside(mut self, pred: &'a (dyn Fn(Vec2) -> bool + Sync)) -> Self {
        self.inside = Some(pred);
        self
    }

    fn point(&self, u: f64, v: f64) -> Vec2 {
        vec2(
            self.lo.x + (self.hi.x - self.lo.x) * u,
            self.lo.y + (self.hi.y - self.lo.y) * v,
        )
    }

    /// First `n` accepted Halton positions (bases 2,3), with a direction
    /// angle (base 5) and an auxiliary coordinate (base 7) attached.
    pub fn halton_phase_samples(&self, n: usize) -> Vec<(Vec2, f64, f64)> {
        let mut out = Vec::with_capacity(n);
        let mut i = 0u64;
        while out.len() < n && i < (n as u64) * 1000 + 10_000 {
            let q: [f64; 4] = halton_point(i);
            i += 1;
            let x = self.point(q[0], q[1]);
            if let Some(pred) = &self.inside {
                if !pred(x) {
                    continue;
                }
            }
            out.push((x, 2.0 * std::f64::consts::PI * q[2], q[3]));
        }
        out
    }
}

/// Keep the `k` smallest-value witnesses, sorted ascending by value.
pub(crate) fn worst_witnesses(mut ws: Vec<Witness>, k: usize) -> Vec<Witness> {
    ws.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal));
    ws.truncate(k);
    ws
}
