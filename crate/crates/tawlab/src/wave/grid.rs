use crate::domain::Domain;
use crate::math::{vec2, Vec2};
use crate::speed::SpeedField;

/// Uniform computational grid on [−half_width, half_width]².
///
/// Open grids carry (n+1)² nodes with the outer frame pinned to zero (the
/// frame is unreachable for t ≤ T by construction). Periodic grids carry n²
/// nodes and wrap, and exist for oracle comparisons against exact
/// constant-coefficient integrators.
#[derive(Clone, Debug)]
pub struct Grid {
    pub n: usize,
    pub half_width: f64,
    pub dt: f64,
    /// dt·c_max/h actually in effect.
    pub cfl: f64,
    pub periodic: bool,
}

impl Grid {
    /// Open grid sized for a scenario: half-width covers the domain plus the
    /// full causal range c_max·T plus a 5-cell pad, and dt divides t_end.
    pub fn for_scenario(domain: &Domain, c: &SpeedField, t_end: f64, n: usize, cfl: f64) -> Grid {
        assert!(cfl > 0.0 && cfl <= 0.5, "cfl must be in (0, 0.5]");
        let r = domain.outer_radius();
        let c_max = c.sup_bound(r + 0.5);
        // L = R + c_max·T + 5h with h = 2L/n
        let l = (r + c_max * t_end) / (1.0 - 10.0 / n as f64) + 1e-9;
        Grid::open(l, n, c_max, cfl, t_end)
    }

    pub fn open(half_width: f64, n: usize, c_max: f64, cfl: f64, t_end: f64) -> Grid {
        assert!(cfl > 0.0 && cfl <= 0.5, "cfl must be in (0, 0.5]");
        assert!(n >= 16);
        let h = 2.0 * half_width / n as f64;
        let dt_target = cfl * h / c_max;
        let steps = (t_end / dt_target).ceil().max(1.0) as usize;
        let dt = t_end / steps as f64;
        Grid { n, half_width, dt, cfl: dt * c_max / h, periodic: false }
    }

    pub fn periodic(half_width: f64, n: usize, c_max: f64, cfl: f64, t_end: f64) -> Grid {
        let mut g = Grid::open(half_width, n, c_max, cfl, t_end);
        g.periodic = true;
        g
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Nodes per axis.
    pub fn npts(&self) -> usize {
        if self.periodic {
            self.n
        } else {
            self.n + 1
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.npts() * self.npts()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.npts() + i
    }

    pub fn pos(&self, i: usize, j: usize) -> Vec2 {
        let h = self.h();
        vec2(-self.half_width + i as f64 * h, -self.half_width + j as f64 * h)
    }

    pub fn steps_for(&self, t_end: f64) -> usize {
        (t_end / self.dt).round().max(0.0) as usize
    }

    /// Evaluate a field on all nodes.
    pub fn sample(&self, f: &dyn Fn(Vec2) -> f64) -> Vec<f64> {
        let w = self.npts();
        let mut out = vec![0.0; w * w];
        for j in 0..w {
            for i in 0..w {
                out[self.idx(i, j)] = f(self.pos(i, j));
            }
        }
        out
    }

    /// Nodes where `pred` holds.
    pub fn mask(&self, pred: &dyn Fn(Vec2) -> bool) -> Vec<bool> {
        let w = self.npts();
        let mut out = vec![false; w * w];
        for j in 0..w {
            for i in 0..w {
                out[self.idx(i, j)] = pred(self.pos(i, j));
            }
        }
        out
    }

    /// Largest |f| over nodes strictly more than `pad` cells outside Ω̄.
    pub fn max_abs_outside(&self, domain: &Domain, f: &[f64], pad_cells: f64) -> f64 {
        let w = self.npts();
        let pad = pad_cells * self.h();
        let mut m: f64 = 0.0;
        for j in 0..w {
            for i in 0..w {
                if domain.signed_boundary_distance(self.pos(i, j)) > pad {
                    m = m.max(f[self.idx(i, j)].abs());
                }
            }
        }
        m
    }

    /// Relative L² difference between two node fields.
    pub fn rel_l2(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in a.iter().zip(b) {
            num += (x - y) * (x - y);
            den += y * y;
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
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_grid_respects_cfl_and_reach() {
        let dom = Domain::disk(1.0);
        let c = SpeedField::constant(1.0);
        let g = Grid::for_scenario(&dom, &c, 4.0, 256, 0.5);
        assert!(g.cfl <= 0.5 + 1e-12);
        let h = g.h();
        assert!(g.half_width >= 1.0 + 4.0 + 5.0 * h - 1e-9);
        // dt divides T exactly
        let steps = g.steps_for(4.0);
        assert!((steps as f64 * g.dt - 4.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "cfl")]
    fn cfl_above_half_is_rejected() {
        let dom = Domain::disk(1.0);
        let c = SpeedField::constant(1.0);
        let _ = Grid::for_scenario(&dom, &c, 1.0, 64, 0.8);
    }
}
