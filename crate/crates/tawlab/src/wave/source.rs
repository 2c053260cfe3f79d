use super::grid::Grid;
use crate::exec::{self, Execution};

/// Time part of a separable source a(t,x) = p(t)·(constant in x).
#[derive(Clone, Debug)]
pub enum TimeProfile {
    /// a ≡ 1.
    One,
    /// cos(ω t) — even in t.
    Cosine { omega: f64 },
    /// 1 + t — violates the even-extension requirement; kept for tests and
    /// precondition demonstrations.
    Ramp,
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::One => 1.0,
            TimeProfile::Cosine { omega } => (omega * t).cos(),
            TimeProfile::Ramp => 1.0 + t,
        }
    }
}

/// The amplitude a(t,x) multiplying the spatial factor F(x).
#[derive(Clone, Debug)]
pub enum SourceAmplitude {
    /// Spatially constant profile.
    Profile(TimeProfile),
    /// Sampled frames a(t_k, x) at uniform spacing, linear in t between.
    Frames { frames: Vec<Vec<f64>>, frame_dt: f64 },
}

/// Source term a(t,x)·F(x) with supp F ⊂ Ω̄.
#[derive(Clone, Debug)]
pub struct Source {
    pub shape: Vec<f64>,
    pub amplitude: SourceAmplitude,
}

impl Source {
    pub fn separable(shape: Vec<f64>, profile: TimeProfile) -> Source {
        Source { shape, amplitude: SourceAmplitude::Profile(profile) }
    }

    /// a(t, node) by evaluation/interpolation.
    pub fn amplitude_at(&self, t: f64, node: usize) -> f64 {
        match &self.amplitude {
            SourceAmplitude::Profile(p) => p.eval(t),
            SourceAmplitude::Frames { frames, frame_dt } => {
                let q = (t / frame_dt).max(0.0);
                let k = (q.floor() as usize).min(frames.len() - 1);
                let k1 = (k + 1).min(frames.len() - 1);
                let w = (q - k as f64).clamp(0.0, 1.0);
                (1.0 - w) * frames[k][node] + w * frames[k1][node]
            }
        }
    }

    /// acc += a(t,·)·F(·)
    pub fn add_forcing(&self, t: f64, acc: &mut [f64], width: usize, exec: Execution) {
        match &self.amplitude {
            SourceAmplitude::Profile(p) => {
                let amp = p.eval(t);
                if amp == 0.0 {
                    return;
                }
                let shape = &self.shape;
                exec::for_each_row(exec, acc, width, |r, row| {
                    let base = r * width;
                    for (i, v) in row.iter_mut().enumerate() {
                        *v += amp * shape[base + i];
                    }
                });
            }
            SourceAmplitude::Frames { frames, frame_dt } => {
                let q = (t / frame_dt).max(0.0);
                let k = (q.floor() as usize).min(frames.len() - 1);
                let k1 = (k + 1).min(frames.len() - 1);
                let w = (q - k as f64).clamp(0.0, 1.0);
                let (f0, f1) = (&frames[k], &frames[k1]);
                let shape = &self.shape;
                exec::for_each_row(exec, acc, width, |r, row| {
                    let base = r * width;
                    for (i, v) in row.iter_mut().enumerate() {
                        let a = (1.0 - w) * f0[base + i] + w * f1[base + i];
                        *v += a * shape[base + i];
                    }
                });
            }
        }
    }
}

/// Numerical check of the even-extension obstruction at t = 0: estimates
/// sup_x |∂_t a(0,x)| with a one-sided second-order difference and compares
/// it against `tol` × the amplitude scale. An even C² extension in t exists
/// (to discretization accuracy) iff this passes.
pub fn even_extension_check(source: &Source, grid: &Grid, tol: f64) -> (bool, f64) {
    let dt = grid.dt;
    let n = grid.n_nodes();
    let mut worst = 0.0f64;
    let mut scale = 1e-300f64;
    for node in (0..n).step_by(7) {
        if source.shape[node] == 0.0 {
            continue;
        }
        let a0 = source.amplitude_at(0.0, node);
        let a1 = source.amplitude_at(dt, node);
        let a2 = source.amplitude_at(2.0 * dt, node);
        let da = (-3.0 * a0 + 4.0 * a1 - a2) / (2.0 * dt);
        worst = worst.max(da.abs());
        scale = scale.max(a0.abs().max(a1.abs()));
    }
    if scale < 1e-200 {
        // identically zero amplitude is trivially even
        return (true, 0.0);
    }
    (worst <= tol * scale, worst)
}
