use super::grid::Grid;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::math::{catmull_rom_weights, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    Dirichlet,
    Neumann,
}

/// Time × boundary-sample matrix of trace values on [0,T] × ∂Ω.
#[derive(Clone, Debug)]
pub struct BoundaryTrace {
    pub kind: TraceKind,
    pub dt: f64,
    pub n_boundary: usize,
    /// Row-major: row k holds the boundary values at t = k·dt.
    pub values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn zeros(kind: TraceKind, dt: f64, n_boundary: usize, rows: usize) -> Self {
        BoundaryTrace { kind, dt, n_boundary, values: vec![0.0; rows * n_boundary] }
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.n_boundary
    }

    pub fn t_end(&self) -> f64 {
        (self.rows() - 1) as f64 * self.dt
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_boundary..(k + 1) * self.n_boundary]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.n_boundary..(k + 1) * self.n_boundary]
    }

    /// L²([0,T]×∂Ω) norm with the product measure dt × ds.
    pub fn norm_l2(&self, perimeter: f64) -> f64 {
        let ds = perimeter / self.n_boundary as f64;
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.dt * ds).sqrt()
    }

    pub fn scaled(&self, s: f64) -> BoundaryTrace {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn sub(&self, other: &BoundaryTrace) -> BoundaryTrace {
        assert_eq!(self.values.len(), other.values.len());
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v -= w;
        }
        out
    }

    /// Max |value| in the first row (precondition checks for data that must
    /// vanish at t = 0).
    pub fn max_abs_at_t0(&self) -> f64 {
        self.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Multiply each row by w(t_k).
    pub fn scale_rows(&mut self, w: &dyn Fn(f64) -> f64) {
        let nb = self.n_boundary;
        for k in 0..self.rows() {
            let f = w(k as f64 * self.dt);
            for v in self.row_mut(k) {
                *v *= f;
            }
        }
        let _ = nb;
    }

    /// Reverse the time axis (data for backward problems).
    pub fn time_reversed(&self) -> BoundaryTrace {
        let mut out = self.clone();
        let rows = self.rows();
        for k in 0..rows {
            out.row_mut(k).copy_from_slice(self.row(rows - 1 - k));
        }
        out
    }
}

/// Precomputed 4×4 Catmull-Rom stencil for one off-grid evaluation point.
#[derive(Clone, Debug)]
pub struct BoundaryInterp {
    base: usize,
    stride: usize,
    wx: [f64; 4],
    wy: [f64; 4],
}

impl BoundaryInterp {
    pub fn new(grid: &Grid, p: Vec2) -> Result<Self> {
        let h = grid.h();
        let w = grid.npts();
        let fx = (p.x + grid.half_width) / h;
        let fy = (p.y + grid.half_width) / h;
        let ix = fx.floor() as isize;
        let iy = fy.floor() as isize;
        if ix < 1 || iy < 1 || ix + 2 >= w as isize || iy + 2 >= w as isize {
            return Err(Error::OutOfDomain(p.x, p.y));
        }
        Ok(BoundaryInterp {
            base: (iy as usize - 1) * w + (ix as usize - 1),
            stride: w,
            wx: catmull_rom_weights(fx - ix as f64),
            wy: catmull_rom_weights(fy - iy as f64),
        })
    }

    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (dj, wy) in self.wy.iter().enumerate() {
            let row = self.base + dj * self.stride;
            let mut r = 0.0;
            for (di, wx) in self.wx.iter().enumerate() {
                r += wx * u[row + di];
            }
            acc += wy * r;
        }
        acc
    }
}

/// Records Dirichlet (and optionally Neumann) traces along ∂Ω while a solve
/// runs. The Neumann trace uses a 4th-order one-sided stencil along the
/// outward normal with spacing h, each tap interpolated bicubically.
pub struct BoundaryObserver {
    dirichlet_stencils: Vec<BoundaryInterp>,
    normal_stencils: Option<Vec<[BoundaryInterp; 5]>>,
    h: f64,
    pub dirichlet: BoundaryTrace,
    pub neumann: Option<BoundaryTrace>,
}

impl BoundaryObserver {
    pub fn new(grid: &Grid, domain: &Domain, rows: usize, record_neumann: bool) -> Result<Self> {
        let nb = domain.boundary().len();
        let h = grid.h();
        let mut dir = Vec::with_capacity(nb);
        let mut nrm = if record_neumann { Some(Vec::with_capacity(nb)) } else { None };
        for s in domain.boundary() {
            dir.push(BoundaryInterp::new(grid, s.pos)?);
            if let Some(nv) = nrm.as_mut() {
                let taps = [
                    BoundaryInterp::new(grid, s.pos)?,
                    BoundaryInterp::new(grid, s.pos + s.normal * h)?,
                    BoundaryInterp::new(grid, s.pos + s.normal * (2.0 * h))?,
                    BoundaryInterp::new(grid, s.pos + s.normal * (3.0 * h))?,
                    BoundaryInterp::new(grid, s.pos + s.normal * (4.0 * h))?,
                ];
                nv.push(taps);
            }
        }
        Ok(BoundaryObserver {
            dirichlet_stencils: dir,
            normal_stencils: nrm,
            h,
            dirichlet: BoundaryTrace::zeros(TraceKind::Dirichlet, grid.dt, nb, rows),
            neumann: record_neumann.then(|| BoundaryTrace::zeros(TraceKind::Neumann, grid.dt, nb, rows)),
        })
    }

    pub fn record(&mut self, row: usize, u: &[f64], exec: Execution) {
        let vals = exec::map_slice(exec, &self.dirichlet_stencils, |st| st.eval(u));
        self.dirichlet.row_mut(row).copy_from_slice(&vals);
        if let (Some(stencils), Some(tr)) = (&self.normal_stencils, self.neumann.as_mut()) {
            let h = self.h;
            let vals = exec::map_slice(exec, stencils, |taps| {
                // one-sided 4th order: f'(0) ≈ (−25f0 +48f1 −36f2 +16f3 −3f4)/(12h)
                (-25.0 * taps[0].eval(u) + 48.0 * taps[1].eval(u) - 36.0 * taps[2].eval(u)
                    + 16.0 * taps[3].eval(u)
                    - 3.0 * taps[4].eval(u))
                    / (12.0 * h)
            });
            tr.row_mut(row).copy_from_slice(&vals);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec2;
    use crate::speed::SpeedField;

    #[test]
    fn bicubic_interp_reproduces_smooth_fields() {
        let g = Grid::open(2.0, 128, 1.0, 0.5, 1.0);
        let f = |p: Vec2| (1.3 * p.x).sin() * (0.7 * p.y).cos();
        let u = g.sample(&f);
        for &p in &[vec2(0.33, -0.21), vec2(1.2, 0.8), vec2(-0.05, 0.61)] {
            let st = BoundaryInterp::new(&g, p).unwrap();
            assert!((st.eval(&u) - f(p)).abs() < 2e-5);
        }
    }

    #[test]
    fn neumann_stencil_matches_analytic_normal_derivative() {
        let dom = Domain::disk(1.0);
        let g = Grid::for_scenario(&dom, &SpeedField::constant(1.0), 1.0, 256, 0.5);
        let f = |p: Vec2| (p.x * 1.1).cos() * (p.y * 0.9).sin() + 0.3 * p.x;
        let u = g.sample(&f);
        let mut obs = BoundaryObserver::new(&g, &dom, 1, true).unwrap();
        obs.record(0, &u, Execution::Sequential);
        let tr = obs.neumann.as_ref().unwrap();
        for (k, s) in dom.boundary().iter().enumerate().step_by(17) {
            let eps = 1e-5;
            let dn = (f(s.pos + s.normal * eps) - f(s.pos - s.normal * eps)) / (2.0 * eps);
            assert!(
                (tr.row(0)[k] - dn).abs() < 5e-4,
                "sample {k}: {} vs {dn}",
                tr.row(0)[k]
            );
        }
    }

    #[test]
    fn trace_algebra_and_reversal() {
        let mut tr = BoundaryTrace::zeros(TraceKind::Dirichlet, 0.1, 4, 3);
        for k in 0..3 {
            for v in tr.row_mut(k) {
                *v = k as f64;
            }
        }
        let rev = tr.time_reversed();
        assert_eq!(rev.row(0), &[2.0; 4]);
        assert_eq!(rev.row(2), &[0.0; 4]);
        let d = tr.sub(&tr);
        assert_eq!(d.norm_l2(1.0), 0.0);
        assert_eq!(tr.rows(), 3);
        assert!((tr.t_end() - 0.2).abs() < 1e-15);
    }
}
