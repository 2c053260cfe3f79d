//! Desk-scale numerical laboratory for single-measurement source and
//! sound-speed recovery in the 2D acoustic wave equation
//! `u_tt = c²(x) Δu`, with `c = 1` outside a smooth bounded domain Ω.
//!
//! The crate is organized around six subsystems:
//!
//! * [`geometry`] — the conformal metric g = c⁻²δ induced by a sound speed:
//!   Christoffel symbols, Hamiltonian geodesic flow with boundary exit times,
//!   and grid-Dijkstra distance fields (metric, exterior/obstacle-aware, and
//!   asymmetric set distances).
//! * [`convexity`] — numerical verification of the geometric hypotheses that
//!   drive uniqueness and stability: strict convexity of level-set foliations,
//!   strong pseudoconvexity of phase families, non-characteristic checks,
//!   observation-time sufficiency, the partial-data cone condition, and
//!   source ellipticity.
//! * [`wave`] — a leapfrog finite-difference solver on an enlarged box
//!   (reflection-free for t ≤ T by finite speed of propagation), boundary
//!   traces, Duhamel source integration, and energy functionals.
//! * [`boundary_ops`] — the exterior Dirichlet-to-Neumann map, Neumann-data
//!   recovery from Dirichlet data, time-reversal back-projection, and the
//!   principal symbol of the time-reversal normal operator.
//! * [`inversion`] — iterative source recovery from boundary data, nonlinear
//!   sound-speed recovery by repeated linearization, and empirical stability
//!   probes over random band-limited source ensembles.
//! * [`harness`] — configuration files, canned scenarios, CSV reports, and
//!   the `TAWF` binary array format behind the `tawlab` CLI.
//!
//! Everything is deterministic: samplers are low-discrepancy or seeded, and
//! parallel reductions are ordered so results are bit-identical between the
//! rayon and sequential execution paths.

pub mod boundary_ops;
pub mod convexity;
pub mod domain;
pub mod error;
pub mod exec;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod inversion;
pub mod math;
pub mod speed;
pub mod wave;

pub use domain::{Domain, DomainShape, TauProfile};
pub use error::{Error, Result};
pub use exec::Execution;
pub use field::Field2;
pub use math::Vec2;
pub use speed::SpeedField;
