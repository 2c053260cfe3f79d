//! Forward machinery for the 2D variable-speed wave equation
//! `u_tt = c²(x) Δu + a(t,x) F(x)`.
//!
//! Free space is realized by an enlarged box: with the box half-width at
//! least `radius(Ω) + c_max·T + 5h`, no signal reaches the frame before T, so
//! the boxed problem is exact for t ≤ T (finite speed of propagation). Time
//! integration is leapfrog (velocity-Verlet form, one acceleration per step)
//! with a 5-point Laplacian; second order in h and dt, exactly reversible,
//! with an exactly conserved staggered discrete energy used as the drift
//! monitor.

mod energy;
mod grid;
mod solver;
mod source;
mod trace;

pub use energy::{energy, staggered_energy, EnergyBreakdown};
pub use grid::Grid;
pub use solver::{
    duhamel, mollify, solve_ivp, solve_source, CutBoundary, CutSide, RunCfg, RunOutput,
    SolveOpts, SolveOutput, Stepper, WaveState,
};
pub use source::{even_extension_check, Source, SourceAmplitude, TimeProfile};
pub use trace::{BoundaryInterp, BoundaryObserver, BoundaryTrace, TraceKind};
