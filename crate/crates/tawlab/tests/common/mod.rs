#![allow(dead_code)]

//! Shared test oracles, independent of the solver implementation paths they
//! check: an exact spectral integrator for constant-coefficient periodic
//! problems, and closed-form helpers.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use tawlab::wave::Grid;

/// Exact evolution of u_tt = c²Δu on the periodic grid from (f, f_t = 0):
/// û(t,k) = f̂(k)·cos(c|k|t). The FFT integrator is exact for every mode the
/// grid carries; comparisons against it isolate the time-stepper's error.
pub fn spectral_evolve(grid: &Grid, c: f64, f: &[f64], t: f64) -> Vec<f64> {
    spectral_apply(grid, f, |k2| {
        let k = k2.sqrt();
        (c * k * t).cos()
    })
}

/// Exact forced solution with zero initial data and a ≡ 1 source shape F:
/// û(t,k) = F̂(k)·(1 − cos(c|k|t))/(c²|k|²), with the k = 0 mode t²/2·F̂₀.
pub fn spectral_forced(grid: &Grid, c: f64, shape: &[f64], t: f64) -> Vec<f64> {
    spectral_apply(grid, shape, |k2| {
        if k2 == 0.0 {
            0.5 * t * t
        } else {
            let om = c * k2.sqrt();
            (1.0 - (om * t).cos()) / (om * om)
        }
    })
}

/// Apply a radially symmetric spectral multiplier m(|k|²) on the periodic
/// grid (period 2·half_width per axis).
fn spectral_apply(grid: &Grid, f: &[f64], multiplier: impl Fn(f64) -> f64) -> Vec<f64> {
    assert!(grid.periodic, "spectral oracle needs a periodic grid");
    let n = grid.npts();
    assert_eq!(f.len(), n * n);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut data: Vec<Complex<f64>> =
        f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    // rows
    for row in data.chunks_mut(n) {
        fwd.process(row);
    }
    // columns
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fwd.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
    let dk = std::f64::consts::PI / grid.half_width;
    let wavenumber = |idx: usize| -> f64 {
        let m = if idx <= n / 2 { idx as isize } else { idx as isize - n as isize };
        m as f64 * dk
    };
    for jy in 0..n {
        let ky = wavenumber(jy);
        for jx in 0..n {
            let kx = wavenumber(jx);
            data[jy * n + jx] *= multiplier(kx * kx + ky * ky);
        }
    }
    for row in data.chunks_mut(n) {
        inv.process(row);
    }
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        inv.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
    let scale = 1.0 / (n * n) as f64;
    data.iter().map(|z| z.re * scale).collect()
}

/// Smooth periodic test datum: a fixed finite Fourier sum (exactly
/// representable on every grid used, so the oracle is exact).
pub fn periodic_test_datum(grid: &Grid) -> Vec<f64> {
    let l = grid.half_width;
    let k0 = std::f64::consts::PI / l;
    grid.sample(&|p| {
        (k0 * p.x).sin() * (2.0 * k0 * p.y).cos()
            + 0.5 * (3.0 * k0 * (p.x + 0.3 * l)).cos() * (k0 * p.y).sin()
            + 0.25 * (2.0 * k0 * p.x).cos() * (4.0 * k0 * p.y).cos()
    })
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    (num / den.max(1e-300)).sqrt()
}
