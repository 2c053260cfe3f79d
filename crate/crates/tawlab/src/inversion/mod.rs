//! Inverse solvers and stability experiments.
//!
//! Source recovery iterates the time-reversal normal operator: with measured
//! Dirichlet data d of the forced wave, ∂_t²(trace) equals the measurement
//! operator applied to a(0)·F plus a compact remainder, so
//! F_{k+1} = F_k + B(χ(d_tt − Λ_k)) / a(0,·) masked to K is a Neumann-series
//! style fixed point whose convergence needs exactly the visibility
//! (stability) condition. Speed recovery wraps this linearized step in an
//! outer loop over c² with a Born substitution for the unknown amplitude.

use crate::boundary_ops::{back_project, CutoffProfile};
use crate::convexity::{check_ellipticity, ConditionReport};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::Field2;
use crate::math::{Pcg32, Vec2};
use crate::speed::SpeedField;
use crate::wave::{
    solve_ivp, solve_source, BoundaryTrace, Grid, SolveOpts, Source, SourceAmplitude,
    TimeProfile,
};

/// Per-run record of an inverse solve.
#[derive(Clone, Debug, Default)]
pub struct ReconstructionReport {
    pub iterations: usize,
    /// ‖F_k − F*‖/‖F*‖ per iteration when the truth is known.
    pub rel_error_history: Vec<f64>,
    /// Boundary-data misfit ‖r_k‖/‖d‖ per iteration.
    pub residual_history: Vec<f64>,
    /// Pre-flight hypothesis checks attached for context (warn, not block).
    pub condition_reports: Vec<ConditionReport>,
    /// ‖F‖_{L²(K)} / ‖w_tt‖_{L²([0,T]×∂Ω)} for the final estimate.
    pub stability_ratio: f64,
}

/// 4th-order time differentiation of a boundary trace (central in the
/// interior, one-sided 5-point second-order at the two ends of each column).
pub fn second_time_derivative(trace: &BoundaryTrace) -> Result<BoundaryTrace> {
    let rows = trace.rows();
    if rows < 5 {
        return Err(Error::precondition("need at least 5 time samples"));
    }
    let nb = trace.n_boundary;
    let dt2 = trace.dt * trace.dt;
    let mut out = trace.clone();
    let v = |k: usize, j: usize| trace.values[k * nb + j];
    // Fornberg weights: 4th-order one-sided/offset stencils at the ends when
    // six samples exist, 2nd-order otherwise.
    let edge0: [f64; 6] = [15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0, 61.0 / 12.0, -5.0 / 6.0];
    let edge1: [f64; 6] = [5.0 / 6.0, -5.0 / 4.0, -1.0 / 3.0, 7.0 / 6.0, -1.0 / 2.0, 1.0 / 12.0];
    let long = rows >= 6;
    for j in 0..nb {
        for k in 0..rows {
            let d = if k >= 2 && k + 2 < rows {
                (-v(k - 2, j) + 16.0 * v(k - 1, j) - 30.0 * v(k, j) + 16.0 * v(k + 1, j)
                    - v(k + 2, j))
                    / (12.0 * dt2)
            } else if long {
                // leading edge reads forward, trailing edge reads the same
                // stencils mirrored (f'' is even under reflection)
                let w = if k == 0 || k == rows - 1 { &edge0 } else { &edge1 };
                let mut acc = 0.0;
                for (m, wm) in w.iter().enumerate() {
                    let row = if k < 2 { m } else { rows - 1 - m };
                    acc += wm * v(row, j);
                }
                acc / dt2
            } else if k < 2 {
                (2.0 * v(k, j) - 5.0 * v(k + 1, j) + 4.0 * v(k + 2, j) - v(k + 3, j)) / dt2
            } else {
                (2.0 * v(k, j) - 5.0 * v(k - 1, j) + 4.0 * v(k - 2, j) - v(k - 3, j)) / dt2
            };
            out.values[k * nb + j] = d;
        }
    }
    Ok(out)
}

/// Options for [`recover_source`].
pub struct SourceRecoveryOpts {
    pub iterations: usize,
    pub chi: CutoffProfile,
    /// Relative residual decrease below which iteration stops.
    pub stagnation_tol: f64,
    pub exec: Execution,
    /// Reference truth for error history (testing / twin experiments).
    pub truth: Option<Vec<f64>>,
    /// Attached pre-flight reports (stability, foliation, ...).
    pub preflight: Vec<ConditionReport>,
}

impl SourceRecoveryOpts {
    pub fn new(iterations: usize, t_end: f64) -> Self {
        SourceRecoveryOpts {
            iterations,
            chi: CutoffProfile::for_horizon(t_end),
            stagnation_tol: 1e-3,
            exec: Execution::Parallel,
            truth: None,
            preflight: Vec::new(),
        }
    }
}

/// Linearized source recovery from Dirichlet data of the forced problem.
///
/// `amplitude` is the known a(t,x); its t = 0 slice must be bounded away
/// from zero on K (checked; ellipticity error otherwise). `k_mask` restricts
/// updates to the support constraint K.
pub fn recover_source(
    c: &SpeedField,
    domain: &Domain,
    grid: &Grid,
    amplitude: &SourceAmplitude,
    data: &BoundaryTrace,
    k_mask: &[bool],
    opts: &SourceRecoveryOpts,
) -> Result<(Vec<f64>, ReconstructionReport)> {
    let n = grid.n_nodes();
    assert_eq!(k_mask.len(), n);
    let t_end = data.t_end();
    // a(0,·) on the grid and its ellipticity over K
    let probe = Source { shape: vec![1.0; n], amplitude: amplitude.clone() };
    let a0: Vec<f64> = (0..n).map(|idx| probe.amplitude_at(0.0, idx)).collect();
    let a0_floor = k_mask
        .iter()
        .zip(&a0)
        .filter(|(m, _)| **m)
        .map(|(_, a)| a.abs())
        .fold(f64::INFINITY, f64::min);
    if !(a0_floor > 1e-6) {
        return Err(Error::Ellipticity(format!(
            "amplitude at t = 0 reaches {a0_floor:.3e} on K; the linearized kernel is not invertible there"
        )));
    }

    let d_tt = second_time_derivative(data)?;
    let d_norm = d_tt.norm_l2(domain.perimeter());
    let mut report = ReconstructionReport {
        condition_reports: opts.preflight.clone(),
        ..Default::default()
    };
    let mut f_est = vec![0.0; n];
    let solve_opts = SolveOpts { exec: opts.exec, mollify: false, energy_stride: 0, ..Default::default() };
    let mut last_residual = f64::INFINITY;

    for _iter in 0..opts.iterations {
        // simulate the current estimate and form the data residual
        let sim = solve_source(
            c,
            domain,
            grid,
            &Source { shape: f_est.clone(), amplitude: amplitude.clone() },
            t_end,
            &solve_opts,
        )?;
        let sim_tt = second_time_derivative(&sim.dirichlet)?;
        let mut residual = d_tt.sub(&sim_tt);
        let r_norm = residual.norm_l2(domain.perimeter()) / d_norm.max(1e-300);
        report.residual_history.push(r_norm);
        if let Some(truth) = &opts.truth {
            report.rel_error_history.push(masked_rel_l2(&f_est, truth, k_mask));
        }
        report.iterations += 1;
        if d_norm == 0.0 || r_norm * d_norm < 1e-14 {
            break;
        }
        if r_norm > 10.0 * report.residual_history[0].max(1.0) {
            return Err(Error::Divergence(format!(
                "residual grew to {r_norm:.3e} of the initial misfit"
            )));
        }
        // time-reversal step: F += B(χ r)/a(0) on K
        let chi = opts.chi;
        residual.scale_rows(&|t| chi.value(t));
        let bp = back_project(c, domain, grid, &residual, opts.exec)?;
        for idx in 0..n {
            if k_mask[idx] {
                f_est[idx] += bp[idx] / a0[idx];
            }
        }
        if last_residual.is_finite() && (last_residual - r_norm) < opts.stagnation_tol * last_residual
        {
            break;
        }
        last_residual = r_norm;
    }
    report.stability_ratio = stability_ratio(grid, domain, &f_est, k_mask, &d_tt);
    Ok((f_est, report))
}

fn masked_rel_l2(est: &[f64], truth: &[f64], mask: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..est.len() {
        if mask[i] {
            num += (est[i] - truth[i]) * (est[i] - truth[i]);
            den += truth[i] * truth[i];
        }
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

fn stability_ratio(
    grid: &Grid,
    domain: &Domain,
    f: &[f64],
    mask: &[bool],
    w_tt: &BoundaryTrace,
) -> f64 {
    let h2 = grid.h() * grid.h();
    let f_norm = (f
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(v, _)| v * v)
        .sum::<f64>()
        * h2)
        .sqrt();
    let w_norm = w_tt.norm_l2(domain.perimeter());
    if w_norm == 0.0 {
        f64::NAN
    } else {
        f_norm / w_norm
    }
}

/// Setup for nonlinear sound-speed recovery from one measurement.
pub struct SpeedRecoverySetup<'a> {
    /// Known initial datum with Δf ≠ 0 on K.
    pub f_field: &'a dyn Field2,
    pub c_init: SpeedField,
    /// Measured Dirichlet trace of the true-speed wave.
    pub data: BoundaryTrace,
    /// Support constraint for c̃² − c².
    pub k_mask: Vec<bool>,
    pub k_samples: Vec<Vec2>,
    pub t_end: f64,
}

pub struct SpeedRecoveryOpts {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Lower clamp for the recovered speed.
    pub floor: f64,
    pub exec: Execution,
    /// True squared-speed field for error history (twin experiments).
    pub truth_csq: Option<Vec<f64>>,
}

impl Default for SpeedRecoveryOpts {
    fn default() -> Self {
        SpeedRecoveryOpts {
            outer_iterations: 5,
            inner_iterations: 8,
            floor: 0.2,
            exec: Execution::Parallel,
            truth_csq: None,
        }
    }
}

/// Recovered speed as a grid-sampled field plus the run report.
pub struct SpeedRecoveryOutput {
    pub csq: Vec<f64>,
    pub report: ReconstructionReport,
}

/// Nonlinear speed recovery: outer loop over c², each step solving the
/// linearized problem for F = c̃² − c² with the Born substitution
/// a ≈ Δu_k (Laplacian frames of the current forward solve standing in for
/// the unknown Δũ), then c² ← max(c² + F, floor²) masked to K.
pub fn recover_speed(
    domain: &Domain,
    grid: &Grid,
    setup: &SpeedRecoverySetup,
    opts: &SpeedRecoveryOpts,
) -> Result<SpeedRecoveryOutput> {
    // ellipticity pre-flight: Δf must not vanish on K
    let ell = check_ellipticity(setup.f_field, &setup.k_samples, opts.exec);
    if !ell.passed {
        return Err(Error::Ellipticity(format!(
            "initial datum is harmonic (or near-harmonic) on K: min |Δf| margin {:.3e}{}",
            ell.margin,
            ell.worst()
                .map(|w| format!(" near ({:.3}, {:.3})", w.x.x, w.x.y))
                .unwrap_or_default()
        )));
    }
    let n = grid.n_nodes();
    let f_grid = grid.sample(&|p| setup.f_field.value(p));
    let mut csq: Vec<f64> = {
        let c0 = &setup.c_init;
        grid.sample(&|p| {
            let v = c0.value(p);
            v * v
        })
    };
    let mut report = ReconstructionReport { condition_reports: vec![ell], ..Default::default() };
    let data_norm = setup.data.norm_l2(domain.perimeter());
    // Born amplitude frames: ~48 snapshots regardless of step count keeps
    // the stored Laplacian history at a few tens of MB
    let frame_stride = (grid.steps_for(setup.t_end) / 48).max(1);
    let solve_opts = SolveOpts {
        exec: opts.exec,
        energy_stride: 0,
        snapshot_stride: frame_stride,
        ..Default::default()
    };
    let mut last_misfit = f64::INFINITY;

    for _outer in 0..opts.outer_iterations {
        let c_k = SpeedField::Grid(crate::speed::GridSpeed {
            half_width: grid.half_width,
            n: grid.n,
            values: csq.iter().map(|&v| v.sqrt()).collect(),
        });
        // forward solve with Laplacian frames for the Born amplitude
        let fwd = solve_ivp(&c_k, domain, grid, &f_grid, setup.t_end, &solve_opts)?;
        let frames: Vec<Vec<f64>> = fwd
            .snapshots
            .iter()
            .map(|(_, u)| laplacian_of(grid, u))
            .collect();
        let frame_dt = if fwd.snapshots.len() > 1 {
            fwd.snapshots[1].0 - fwd.snapshots[0].0
        } else {
            grid.dt
        };
        let delta_d = setup.data.sub(&fwd.dirichlet);
        let misfit = delta_d.norm_l2(domain.perimeter()) / data_norm.max(1e-300);
        report.residual_history.push(misfit);
        report.iterations += 1;
        if let Some(truth) = &opts.truth_csq {
            report.rel_error_history.push(masked_rel_l2(&csq, truth, &setup.k_mask));
        }
        if misfit < 1e-12 || (last_misfit.is_finite() && (last_misfit - misfit) < 1e-3 * last_misfit)
        {
            break;
        }
        last_misfit = misfit;
        let amplitude = SourceAmplitude::Frames { frames, frame_dt };
        let mut inner = SourceRecoveryOpts::new(opts.inner_iterations, setup.t_end);
        inner.exec = opts.exec;
        let (f_hat, inner_rep) =
            recover_source(&c_k, domain, grid, &amplitude, &delta_d, &setup.k_mask, &inner)?;
        report.condition_reports.extend(inner_rep.condition_reports);
        let floor2 = opts.floor * opts.floor;
        for idx in 0..n {
            if setup.k_mask[idx] {
                csq[idx] = (csq[idx] + f_hat[idx]).max(floor2);
            }
        }
    }
    report.stability_ratio = 0.0;
    Ok(SpeedRecoveryOutput { csq, report })
}

fn laplacian_of(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let w = grid.npts();
    let h2 = grid.h() * grid.h();
    let mut out = vec![0.0; u.len()];
    for j in 1..w - 1 {
        for i in 1..w - 1 {
            let idx = j * w + i;
            out[idx] = (u[idx - 1] + u[idx + 1] + u[idx - w] + u[idx + w] - 4.0 * u[idx]) / h2;
        }
    }
    out
}

/// Statistics of the stability probe over one band limit.
#[derive(Clone, Debug)]
pub struct ProbeBandStats {
    pub band_limit: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub samples: usize,
}

/// Statistics of the empirical stability probe.
#[derive(Clone, Debug)]
pub struct StabilityProbeReport {
    pub bands: Vec<ProbeBandStats>,
    /// min of the parametrix symbol over SK attached by the caller (NaN when
    /// not evaluated).
    pub min_symbol: f64,
}

/// How the random band-limited ensemble is synthesized over K.
#[derive(Clone, Copy, Debug)]
pub enum ProbeSampler {
    /// Tensor sine modes on the bounding box of K (isotropic content).
    Cartesian,
    /// Angular Fourier modes on a thin annulus: radial bump times
    /// cos/sin(mθ) with m in the upper half of the band. High-m fields hug
    /// the circle tangentially — the whispering modes a trapped geodesic
    /// renders invisible.
    Angular { r0: f64, width: f64 },
}

/// Draw seeded band-limited random sources supported in K, push each through
/// the forward map, and record ‖F‖_{L²(K)}/‖w_tt‖_{L²([0,T]×∂Ω)}. Growth of
/// the ratio with band limit signals failure of the uniform stability
/// constant (invisible singularities).
#[allow(clippy::too_many_arguments)]
pub fn stability_probe(
    c: &SpeedField,
    domain: &Domain,
    grid: &Grid,
    k_mask_smooth: &[f64],
    k_bbox: (Vec2, Vec2),
    sampler: ProbeSampler,
    t_end: f64,
    band_limits: &[usize],
    ensemble: usize,
    seed: u64,
    exec: Execution,
) -> Result<StabilityProbeReport> {
    let mut bands = Vec::new();
    let solve_opts = SolveOpts { exec, energy_stride: 0, mollify: false, ..Default::default() };
    let h2 = grid.h() * grid.h();
    let k_mask: Vec<bool> = k_mask_smooth.iter().map(|&v| v > 0.0).collect();
    for &band in band_limits {
        let mut ratios = Vec::new();
        for member in 0..ensemble {
            let f = match sampler {
                ProbeSampler::Cartesian => {
                    band_limited_sample(grid, k_mask_smooth, k_bbox, band, seed, member as u64)
                }
                ProbeSampler::Angular { r0, width } => {
                    angular_band_sample(grid, r0, width, band, seed, member as u64)
                }
            };
            let f_norm = (f
                .iter()
                .zip(&k_mask)
                .filter(|(_, m)| **m)
                .map(|(v, _)| v * v)
                .sum::<f64>()
                * h2)
                .sqrt();
            if f_norm < 1e-14 {
                continue; // excluded sample (F ≡ 0)
            }
            let src = Source::separable(f, TimeProfile::One);
            let out = solve_source(c, domain, grid, &src, t_end, &solve_opts)?;
            let w_tt = second_time_derivative(&out.dirichlet)?;
            let w_norm = w_tt.norm_l2(domain.perimeter());
            if w_norm > 0.0 {
                ratios.push(f_norm / w_norm);
            }
        }
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let max_ratio = ratios.last().copied().unwrap_or(f64::NAN);
        let median = if ratios.is_empty() {
            f64::NAN
        } else {
            ratios[ratios.len() / 2]
        };
        bands.push(ProbeBandStats {
            band_limit: band,
            max_ratio,
            median_ratio: median,
            samples: ratios.len(),
        });
    }
    Ok(StabilityProbeReport { bands, min_symbol: f64::NAN })
}

/// Random band-limited field on the bounding box of K, windowed by the
/// smooth K-mask. Deterministic in (seed, member, band).
fn band_limited_sample(
    grid: &Grid,
    k_mask_smooth: &[f64],
    (lo, hi): (Vec2, Vec2),
    band: usize,
    seed: u64,
    member: u64,
) -> Vec<f64> {
    let mut rng = Pcg32::new(seed ^ (band as u64).wrapping_mul(0x9e3779b97f4a7c15), member + 1);
    let mut coeffs = Vec::with_capacity(band * band);
    for _ in 0..band * band {
        coeffs.push(rng.next_normal());
    }
    let w = grid.npts();
    let wx = hi.x - lo.x;
    let wy = hi.y - lo.y;
    let mut out = vec![0.0; grid.n_nodes()];
    for j in 0..w {
        for i in 0..w {
            let idx = j * w + i;
            let mask = k_mask_smooth[idx];
            if mask == 0.0 {
                continue;
            }
            let p = grid.pos(i, j);
            let sx = (p.x - lo.x) / wx;
            let sy = (p.y - lo.y) / wy;
            if !(0.0..=1.0).contains(&sx) || !(0.0..=1.0).contains(&sy) {
                continue;
            }
            let mut acc = 0.0;
            for mx in 1..=band {
                for my in 1..=band {
                    let cf = coeffs[(mx - 1) * band + (my - 1)];
                    acc += cf
                        * (std::f64::consts::PI * mx as f64 * sx).sin()
                        * (std::f64::consts::PI * my as f64 * sy).sin();
                }
            }
            out[idx] = acc * mask / band as f64;
        }
    }
    out
}

/// Random angular-mode field on a thin annulus: bump((r−r0)/width) times a
/// combination of cos/sin(mθ) for m in the upper half of the band.
fn angular_band_sample(
    grid: &Grid,
    r0: f64,
    width: f64,
    band: usize,
    seed: u64,
    member: u64,
) -> Vec<f64> {
    let mut rng = Pcg32::new(seed ^ (band as u64).wrapping_mul(0x9e3779b97f4a7c15), member + 1);
    let m_lo = band.div_ceil(2).max(1);
    let mut coeffs = Vec::new();
    for _ in m_lo..=band {
        coeffs.push((rng.next_normal(), rng.next_normal()));
    }
    let w = grid.npts();
    let mut out = vec![0.0; grid.n_nodes()];
    for j in 0..w {
        for i in 0..w {
            let p = grid.pos(i, j);
            let srad = (p.norm() - r0) / width;
            if srad.abs() >= 1.0 {
                continue;
            }
            let wr = (1.0 - srad * srad).powi(3);
            let theta = p.y.atan2(p.x);
            let mut acc = 0.0;
            for (k, &(a, b)) in coeffs.iter().enumerate() {
                let m = (m_lo + k) as f64;
                acc += a * (m * theta).cos() + b * (m * theta).sin();
            }
            out[grid.idx(i, j)] = wr * acc / (coeffs.len() as f64).sqrt();
        }
    }
    out
}

/// Refinement study of Neumann-data recovery: for each resolution, generate
/// data with a forced solve, recover the Neumann trace from the Dirichlet
/// trace alone, and compare with the directly traced normal derivative.
pub fn neumann_consistency_experiment(
    c: &SpeedField,
    domain: &Domain,
    shape_field: &dyn Field2,
    t_end: f64,
    resolutions: &[usize],
    exec: Execution,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for &n in resolutions {
        let grid = Grid::for_scenario(domain, c, t_end, n, 0.5);
        let shape = grid.sample(&|p| shape_field.value(p));
        let src = Source::separable(shape, TimeProfile::One);
        let solved = solve_source(c, domain, &grid, &src, t_end, &SolveOpts { exec, ..Default::default() })?;
        let truth = solved.neumann.expect("neumann trace recorded");
        let recovered =
            crate::boundary_ops::recover_neumann(domain, &grid, &solved.dirichlet, exec)?;
        let rel = recovered.sub(&truth).norm_l2(domain.perimeter())
            / truth.norm_l2(domain.perimeter()).max(1e-300);
        out.push((n, rel));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec2;
    use crate::wave::TraceKind;

    #[test]
    fn second_derivative_of_cosine_trace() {
        let omega = 3.0;
        let dt = 0.02; // ω·dt = 0.06 < 0.1
        let rows = 200;
        let nb = 8;
        let mut tr = BoundaryTrace::zeros(TraceKind::Dirichlet, dt, nb, rows);
        for k in 0..rows {
            let t = k as f64 * dt;
            for (j, v) in tr.row_mut(k).iter_mut().enumerate() {
                *v = (omega * t).cos() * (1.0 + 0.1 * j as f64);
            }
        }
        let dd = second_time_derivative(&tr).unwrap();
        let mut worst = 0.0f64;
        for k in 0..rows {
            let t = k as f64 * dt;
            for (j, v) in dd.row(k).iter().enumerate() {
                let truth = -omega * omega * (omega * t).cos() * (1.0 + 0.1 * j as f64);
                worst = worst.max((v - truth).abs() / (omega * omega));
            }
        }
        assert!(worst < 1e-3, "worst {worst}");
    }

    #[test]
    fn second_derivative_of_constant_is_zero() {
        let mut tr = BoundaryTrace::zeros(TraceKind::Dirichlet, 0.1, 4, 12);
        for v in &mut tr.values {
            *v = 3.7;
        }
        let dd = second_time_derivative(&tr).unwrap();
        assert!(dd.values.iter().all(|v| v.abs() < 1e-9));
        // too few samples is an error
        let short = BoundaryTrace::zeros(TraceKind::Dirichlet, 0.1, 4, 3);
        assert!(second_time_derivative(&short).is_err());
    }

    #[test]
    fn zero_data_recovers_zero_source_in_one_iteration() {
        let dom = Domain::disk(1.0);
        let c = SpeedField::constant(1.0);
        let grid = Grid::for_scenario(&dom, &c, 1.0, 64, 0.5);
        let rows = grid.steps_for(1.0) + 1;
        let data = BoundaryTrace::zeros(TraceKind::Dirichlet, grid.dt, dom.boundary().len(), rows);
        let mask = grid.mask(&|p: Vec2| p.norm() < 0.6);
        let opts = SourceRecoveryOpts::new(3, 1.0);
        let (f, rep) = recover_source(
            &c,
            &dom,
            &grid,
            &SourceAmplitude::Profile(TimeProfile::One),
            &data,
            &mask,
            &opts,
        )
        .unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn vanishing_amplitude_on_k_is_an_ellipticity_error() {
        let dom = Domain::disk(1.0);
        let c = SpeedField::constant(1.0);
        let grid = Grid::for_scenario(&dom, &c, 1.0, 64, 0.5);
        let rows = grid.steps_for(1.0) + 1;
        let data = BoundaryTrace::zeros(TraceKind::Dirichlet, grid.dt, dom.boundary().len(), rows);
        let mask = grid.mask(&|p: Vec2| p.norm() < 0.6);
        let n = grid.n_nodes();
        // amplitude frames that vanish at t = 0 on part of K
        let frames = vec![vec![0.0; n], vec![1.0; n]];
        let amp = SourceAmplitude::Frames { frames, frame_dt: grid.dt };
        let opts = SourceRecoveryOpts::new(2, 1.0);
        assert!(matches!(
            recover_source(&c, &dom, &grid, &amp, &data, &mask, &opts),
            Err(Error::Ellipticity(_))
        ));
    }

    #[test]
    fn probe_is_deterministic_for_fixed_seed() {
        let dom = Domain::disk(1.0);
        let c = SpeedField::constant(1.0);
        let grid = Grid::for_scenario(&dom, &c, 1.0, 64, 0.5);
        let mask = grid.sample(&|p: Vec2| {
            let s2 = p.norm2() / (0.6 * 0.6);
            if s2 >= 1.0 {
                0.0
            } else {
                (1.0 - s2).powi(3)
            }
        });
        let bbox = (vec2(-0.6, -0.6), vec2(0.6, 0.6));
        let run = || {
            stability_probe(&c, &dom, &grid, &mask, bbox, ProbeSampler::Cartesian, 1.0, &[3], 4, 99, Execution::Parallel)
                .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.bands[0].max_ratio.to_bits(), b.bands[0].max_ratio.to_bits());
        assert_eq!(a.bands[0].samples, 4);
    }
}
