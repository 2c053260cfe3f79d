use super::grid::Grid;
use super::solver::WaveState;
use crate::speed::SpeedField;

/// Energy functionals of a wave state over a node region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    /// E_U = ∫_U (|∇u|² + c⁻²|u_t|²) dVol.
    pub e_total: f64,
    /// Dirichlet seminorm ‖u‖_{H_D} = (∫_U |∇u|²)^{1/2}.
    pub h_d: f64,
    /// ‖u‖ in L²(U; c⁻² dVol).
    pub l2: f64,
}

/// Midpoint/edge quadrature of the energy over `region` (all nodes if None).
/// The gradient part sums forward-difference edges whose endpoints both lie
/// in the region, which makes ‖u‖²_{H_D} = (−c²Δ_h u, u)_{L²(c⁻²)} exact for
/// compactly supported grid functions (summation by parts).
pub fn energy(
    grid: &Grid,
    state: &WaveState,
    c: &SpeedField,
    region: Option<&[bool]>,
) -> EnergyBreakdown {
    let w = grid.npts();
    let h = grid.h();
    let h2 = h * h;
    let in_region = |idx: usize| region.map(|m| m[idx]).unwrap_or(true);
    let mut grad2 = 0.0;
    let mut kin = 0.0;
    let mut l2 = 0.0;
    for j in 0..w {
        for i in 0..w {
            let idx = j * w + i;
            if !in_region(idx) {
                continue;
            }
            let p = grid.pos(i, j);
            let cinv2 = {
                let cv = c.value(p);
                1.0 / (cv * cv)
            };
            kin += cinv2 * state.ut[idx] * state.ut[idx] * h2;
            l2 += cinv2 * state.u[idx] * state.u[idx] * h2;
            // forward-difference edges
            if i + 1 < w && in_region(idx + 1) {
                let du = (state.u[idx + 1] - state.u[idx]) / h;
                grad2 += du * du * h2;
            } else if grid.periodic && i + 1 == w {
                let du = (state.u[j * w] - state.u[idx]) / h;
                grad2 += du * du * h2;
            }
            if j + 1 < w && in_region(idx + w) {
                let du = (state.u[idx + w] - state.u[idx]) / h;
                grad2 += du * du * h2;
            } else if grid.periodic && j + 1 == w {
                let du = (state.u[i] - state.u[idx]) / h;
                grad2 += du * du * h2;
            }
        }
    }
    EnergyBreakdown { e_total: grad2 + kin, h_d: grad2.sqrt(), l2: l2.sqrt() }
}

/// The leapfrog-conserved staggered energy
/// E^{n+1/2} = ½‖(u^{n+1}−u^n)/dt‖²_{c⁻²} + ½ ⟨∇u^{n+1}, ∇u^n⟩,
/// exactly constant (to roundoff) for the homogeneous scheme.
pub fn staggered_energy(grid: &Grid, u_prev: &[f64], u_next: &[f64], csq: &[f64]) -> f64 {
    let w = grid.npts();
    let h = grid.h();
    let h2 = h * h;
    let inv_dt = 1.0 / grid.dt;
    let mut kin = 0.0;
    let mut cross = 0.0;
    for j in 0..w {
        for i in 0..w {
            let idx = j * w + i;
            let v = (u_next[idx] - u_prev[idx]) * inv_dt;
            kin += v * v / csq[idx] * h2;
            if grid.periodic || i + 1 < w {
                let ir = (i + 1) % w;
                let a = (u_next[j * w + ir] - u_next[idx]) / h;
                let b = (u_prev[j * w + ir] - u_prev[idx]) / h;
                cross += a * b * h2;
            }
            if grid.periodic || j + 1 < w {
                let jr = (j + 1) % w;
                let a = (u_next[jr * w + i] - u_next[idx]) / h;
                let b = (u_prev[jr * w + i] - u_prev[idx]) / h;
                cross += a * b * h2;
            }
        }
    }
    0.5 * (kin + cross)
}
