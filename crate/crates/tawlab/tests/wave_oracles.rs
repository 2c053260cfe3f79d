//! Solver checks against the exact constant-coefficient spectral integrator
//! and other wave-side oracles.

mod common;

use tawlab::domain::Domain;
use tawlab::exec::Execution;
use tawlab::speed::SpeedField;
use tawlab::wave::{
    duhamel, even_extension_check, solve_ivp, Grid, RunCfg, SolveOpts, Source, SourceAmplitude,
    Stepper, TimeProfile, WaveState,
};

#[test]
fn plane_wave_matches_spectral_oracle() {
    let t_end = 1.0;
    let grid = Grid::periodic(1.0, 256, 1.0, 0.5, t_end);
    let k = std::f64::consts::PI / grid.half_width;
    let f = grid.sample(&|p| (k * p.x).cos() * (2.0 * k * p.y).sin());
    let stepper = Stepper::new(&SpeedField::constant(1.0), &grid, Execution::Parallel);
    let mut state = WaveState::from_initial(&grid, f.clone());
    let cfg = RunCfg { steps: grid.steps_for(t_end), ..Default::default() };
    stepper.run(&mut state, &cfg, None).unwrap();
    let oracle = common::spectral_evolve(&grid, 1.0, &f, t_end);
    let err = common::rel_l2(&state.u, &oracle);
    assert!(err < 1e-2, "plane-wave error {err}");
}

// Forced oracle: with a ≡ 1 the exact solution is the mode-wise
// (1 − cos(ω t))/ω² multiplier applied to the shape.
#[test]
fn duhamel_matches_forced_spectral_oracle() {
    let t_end = 1.0;
    let grid = Grid::periodic(1.0, 128, 1.0, 0.5, t_end);
    let shape = grid.sample(&|p| {
        let s2 = p.norm2() / (0.35 * 0.35);
        if s2 >= 1.0 {
            0.0
        } else {
            (1.0 - s2).powi(3)
        }
    });
    let src = Source::separable(shape.clone(), TimeProfile::One);
    let duh = duhamel(&SpeedField::constant(1.0), &grid, &src, t_end, 32, Execution::Parallel)
        .unwrap();
    let oracle = common::spectral_forced(&grid, 1.0, &shape, t_end);
    let err = common::rel_l2(&duh.u, &oracle);
    assert!(err < 1e-2, "duhamel vs forced oracle {err}");
}

// The amplitude a = Δũ of a linearization, with ũ from an initial-value
// solve (so ũ_t(0) = 0), admits an even time extension: ∂_t a(0) = Δũ_t(0)
// = 0. The one-sided discrete estimator carries an O(dt³·∂⁶ₓũ) floor, so the
// band is set above that floor and the test also confirms the check still
// separates a genuinely uneven amplitude (ũ_t(0) ≠ 0) by orders of
// magnitude.
#[test]
fn linearization_amplitude_is_even_at_zero() {
    let dom = Domain::disk(1.0);
    let c = SpeedField::constant(1.0);
    let grid = Grid::for_scenario(&dom, &c, 0.5, 160, 0.5);
    let sigma = 0.18f64;
    let f = grid.sample(&|p| {
        let taper2 = p.norm2() / (0.9 * 0.9);
        if taper2 >= 1.0 {
            return 0.0;
        }
        (-p.norm2() / (2.0 * sigma * sigma)).exp() * (1.0 - taper2).powi(3)
    });
    let laplacian_frames = |snapshots: &[(f64, Vec<f64>)]| -> Vec<Vec<f64>> {
        let w = grid.npts();
        let h2 = grid.h() * grid.h();
        snapshots
            .iter()
            .map(|(_, u)| {
                let mut out = vec![0.0; u.len()];
                for j in 1..w - 1 {
                    for i in 1..w - 1 {
                        let idx = j * w + i;
                        out[idx] = (u[idx - 1] + u[idx + 1] + u[idx - w] + u[idx + w]
                            - 4.0 * u[idx])
                            / h2;
                    }
                }
                out
            })
            .collect()
    };
    let shape: Vec<f64> = grid
        .mask(&|p| p.norm() < 0.8)
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();

    // even case: zero initial velocity
    let sol = solve_ivp(
        &c,
        &dom,
        &grid,
        &f,
        0.5,
        &SolveOpts { snapshot_stride: 1, ..Default::default() },
    )
    .unwrap();
    let frame_dt = sol.snapshots[1].0 - sol.snapshots[0].0;
    let src = Source {
        shape: shape.clone(),
        amplitude: SourceAmplitude::Frames { frames: laplacian_frames(&sol.snapshots), frame_dt },
    };
    let (ok, worst_even) = even_extension_check(&src, &grid, 2e-2);
    assert!(ok, "evenness estimate {worst_even}");

    // uneven case: give the wave an initial velocity; ∂_t Δu(0) = Δu_t(0) ≠ 0
    let stepper = Stepper::new(&c, &grid, Execution::Parallel);
    let mut state = WaveState::from_initial(&grid, f.clone());
    for (v, fv) in state.ut.iter_mut().zip(&f) {
        *v = 2.0 * fv;
    }
    let mut snaps = vec![(0.0, state.u.clone())];
    for k in 0..8 {
        let cfg = RunCfg { steps: 1, ..Default::default() };
        stepper.run(&mut state, &cfg, None).unwrap();
        snaps.push(((k + 1) as f64 * grid.dt, state.u.clone()));
    }
    let src_bad = Source {
        shape,
        amplitude: SourceAmplitude::Frames { frames: laplacian_frames(&snaps), frame_dt: grid.dt },
    };
    let (ok_bad, worst_odd) = even_extension_check(&src_bad, &grid, 2e-2);
    assert!(!ok_bad, "uneven amplitude must be flagged");
    assert!(
        worst_odd > 20.0 * worst_even,
        "discrimination too weak: even {worst_even}, odd {worst_odd}"
    );
}

// Halving h at fixed cfl reduces the spectral-oracle error by the
// second-order factor (the criterion-1 property, checked here on the
// smallest pair so the unit suite stays fast).
#[test]
fn one_halving_is_second_order()
{
    let t_end = 0.5;
    let mut errs = Vec::new();
    for &n in &[48usize, 96] {
        let grid = Grid::periodic(1.0, n, 1.0, 0.5, t_end);
        let f = common::periodic_test_datum(&grid);
        let stepper = Stepper::new(&SpeedField::constant(1.0), &grid, Execution::Parallel);
        let mut state = WaveState::from_initial(&grid, f.clone());
        let cfg = RunCfg { steps: grid.steps_for(t_end), ..Default::default() };
        stepper.run(&mut state, &cfg, None).unwrap();
        errs.push(common::rel_l2(&state.u, &common::spectral_evolve(&grid, 1.0, &f, t_end)));
    }
    let ratio = errs[0] / errs[1];
    assert!((3.2..=4.8).contains(&ratio), "ratio {ratio} errors {errs:?}");
}
