//! Sound-speed fields c(x) and the conformal metric they induce.
//!
//! The metric is g = c⁻² δ (δ Euclidean). All geometric quantities downstream
//! (Christoffel symbols, geodesic flow, distances, curvature of level sets)
//! are derived from `value` and `grad` here. Speeds must be positive and
//! equal to 1 outside the working domain so the exterior problem is the unit
//! wave equation.

use crate::error::{Error, Result};
use crate::math::{catmull_rom_weights, catmull_rom_weights_deriv, smoothstep5, smoothstep5_deriv, vec2, Vec2};

/// A compactly supported speed perturbation: amp·(1 − (|x−c|/radius)²)³.
#[derive(Clone, Debug)]
pub struct SpeedBump {
    pub center: Vec2,
    pub radius: f64,
    pub amp: f64,
}

#[derive(Clone, Debug)]
pub enum SpeedField {
    /// c ≡ value everywhere.
    Constant(f64),
    /// Radial profile with a circular trapped geodesic at r = r_trap:
    /// c(r) = exp(q(r)·s(r)) with q = q₁ + steepness·q₁²,
    /// q₁ = (r² − r_trap²)/(2 r_trap²); s is 1 inside `blend.0`, 0 outside
    /// `blend.1` (quintic taper), or s ≡ 1 when `blend` is `None` (the pure
    /// profile, which does not return to 1). The trapped circle sits at
    /// r_trap for any steepness; steepness > 0 deepens the ray well around
    /// it (a wider cone of tangential directions never escapes).
    Herglotz { r_trap: f64, steepness: f64, blend: Option<(f64, f64)> },
    /// 1 + Σ compact C² bumps. Exactly 1 outside the union of supports.
    Bumps(Vec<SpeedBump>),
    /// Uniform grid samples on [−half_width, half_width]², Catmull-Rom
    /// (bicubic) interpolated, C¹ so Christoffel symbols are well defined.
    Grid(GridSpeed),
}

impl SpeedField {
    pub fn constant(c: f64) -> Self {
        assert!(c > 0.0, "sound speed must be positive");
        SpeedField::Constant(c)
    }

    /// The shipped trapping profile: trapped circle at r = 1, blended back to
    /// c = 1 across [1.4, 1.9].
    pub fn herglotz_trap() -> Self {
        SpeedField::Herglotz { r_trap: 1.0, steepness: 1.5, blend: Some((1.4, 1.9)) }
    }

    pub fn value(&self, x: Vec2) -> f64 {
        match self {
            SpeedField::Constant(c) => *c,
            SpeedField::Herglotz { r_trap, steepness, blend } => {
                let (q, _) = herglotz_exponent(x.norm(), *r_trap, *steepness, *blend);
                q.exp()
            }
            SpeedField::Bumps(bumps) => {
                let mut c = 1.0;
                for b in bumps {
                    c += bump_value(b, x);
                }
                c
            }
            SpeedField::Grid(g) => g.value_clamped(x),
        }
    }

    pub fn grad(&self, x: Vec2) -> Vec2 {
        match self {
            SpeedField::Constant(_) => Vec2::ZERO,
            SpeedField::Herglotz { r_trap, steepness, blend } => {
                let r = x.norm();
                if r < 1e-14 {
                    return Vec2::ZERO;
                }
                let (q, dq) = herglotz_exponent(r, *r_trap, *steepness, *blend);
                x * (q.exp() * dq / r)
            }
            SpeedField::Bumps(bumps) => {
                let mut g = Vec2::ZERO;
                for b in bumps {
                    g += bump_grad(b, x);
                }
                g
            }
            SpeedField::Grid(g) => g.grad_clamped(x),
        }
    }

    /// Checked evaluation; grid-sampled fields reject points outside their
    /// sampled support.
    pub fn try_value(&self, x: Vec2) -> Result<f64> {
        if let SpeedField::Grid(g) = self {
            if !g.in_support(x) {
                return Err(Error::OutOfDomain(x.x, x.y));
            }
        }
        Ok(self.value(x))
    }

    /// Christoffel symbols Γ\[i\]\[j\]\[k\] = Γ^i_{jk} of g = c⁻²δ at x:
    /// Γ^i_{jk} = −(δ^i_j ∂_k c + δ^i_k ∂_j c − δ_{jk} ∂_i c)/c.
    pub fn christoffel(&self, x: Vec2) -> Result<[[[f64; 2]; 2]; 2]> {
        if let SpeedField::Grid(g) = self {
            if !g.in_support(x) {
                return Err(Error::OutOfDomain(x.x, x.y));
            }
        }
        let c = self.value(x);
        let dc = self.grad(x);
        let w = [dc.x / c, dc.y / c];
        let mut gam = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut v = 0.0;
                    if i == j {
                        v -= w[k];
                    }
                    if i == k {
                        v -= w[j];
                    }
                    if j == k {
                        v += w[i];
                    }
                    gam[i][j][k] = v;
                }
            }
        }
        Ok(gam)
    }

    /// Upper bound on c over a box of the given half-width (dense sampling
    /// with a small safety factor). Used for CFL limits and box sizing.
    pub fn sup_bound(&self, half_width: f64) -> f64 {
        match self {
            SpeedField::Constant(c) => *c,
            _ => {
                let n = 400;
                let mut m: f64 = 0.0;
                for j in 0..=n {
                    for i in 0..=n {
                        let p = vec2(
                            -half_width + 2.0 * half_width * i as f64 / n as f64,
                            -half_width + 2.0 * half_width * j as f64 / n as f64,
                        );
                        m = m.max(self.value(p));
                    }
                }
                m * 1.005
            }
        }
    }

    /// Verifies c = 1 on a ring of the given radius (the field invariant for
    /// speeds used with the free-space solver).
    pub fn is_unit_outside(&self, ring_radius: f64) -> bool {
        (0..720).all(|k| {
            let th = k as f64 * std::f64::consts::PI / 360.0;
            (self.value(Vec2::from_angle(th) * ring_radius) - 1.0).abs() < 1e-8
        })
    }

    /// Sample onto a uniform grid (for testing the grid-sampled kind against
    /// analytic profiles).
    pub fn sample_to_grid(&self, half_width: f64, n: usize) -> SpeedField {
        let h = 2.0 * half_width / n as f64;
        let mut values = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                values.push(self.value(vec2(-half_width + i as f64 * h, -half_width + j as f64 * h)));
            }
        }
        SpeedField::Grid(GridSpeed { half_width, n, values })
    }
}

fn herglotz_exponent(r: f64, r_trap: f64, steepness: f64, blend: Option<(f64, f64)>) -> (f64, f64) {
    let q1 = (r * r - r_trap * r_trap) / (2.0 * r_trap * r_trap);
    let dq1 = r / (r_trap * r_trap);
    let q = q1 + steepness * q1 * q1;
    let dq = dq1 * (1.0 + 2.0 * steepness * q1);
    match blend {
        None => (q, dq),
        Some((a, b)) => {
            let t = (r - a) / (b - a);
            let s = 1.0 - smoothstep5(t);
            let ds = -smoothstep5_deriv(t) / (b - a);
            (q * s, dq * s + q * ds)
        }
    }
}

fn bump_value(b: &SpeedBump, x: Vec2) -> f64 {
    let s2 = (x - b.center).norm2() / (b.radius * b.radius);
    if s2 >= 1.0 {
        0.0
    } else {
        let w = 1.0 - s2;
        b.amp * w * w * w
    }
}

fn bump_grad(b: &SpeedBump, x: Vec2) -> Vec2 {
    let d = x - b.center;
    let r2 = b.radius * b.radius;
    let s2 = d.norm2() / r2;
    if s2 >= 1.0 {
        Vec2::ZERO
    } else {
        let w = 1.0 - s2;
        d * (-6.0 * b.amp * w * w / r2)
    }
}

/// Uniform grid of speed samples with C¹ bicubic interpolation.
#[derive(Clone, Debug)]
pub struct GridSpeed {
    pub half_width: f64,
    pub n: usize,
    /// (n+1)² node values, row-major, y-major.
    pub values: Vec<f64>,
}

impl GridSpeed {
    fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn in_support(&self, x: Vec2) -> bool {
        let m = self.half_width - 1.5 * self.h();
        x.x.abs() <= m && x.y.abs() <= m
    }

    fn locate(&self, x: Vec2) -> (usize, usize, f64, f64) {
        let h = self.h();
        let fx = (x.x + self.half_width) / h;
        let fy = (x.y + self.half_width) / h;
        let ix = (fx.floor() as isize).clamp(1, self.n as isize - 2) as usize;
        let iy = (fy.floor() as isize).clamp(1, self.n as isize - 2) as usize;
        (ix, iy, fx - ix as f64, fy - iy as f64)
    }

    fn value_clamped(&self, x: Vec2) -> f64 {
        let (ix, iy, tx, ty) = self.locate(x);
        let wx = catmull_rom_weights(tx.clamp(0.0, 1.0));
        let wy = catmull_rom_weights(ty.clamp(0.0, 1.0));
        self.tensor(ix, iy, &wx, &wy)
    }

    fn grad_clamped(&self, x: Vec2) -> Vec2 {
        let (ix, iy, tx, ty) = self.locate(x);
        let tx = tx.clamp(0.0, 1.0);
        let ty = ty.clamp(0.0, 1.0);
        let wx = catmull_rom_weights(tx);
        let wy = catmull_rom_weights(ty);
        let dwx = catmull_rom_weights_deriv(tx);
        let dwy = catmull_rom_weights_deriv(ty);
        let h = self.h();
        vec2(
            self.tensor(ix, iy, &dwx, &wy) / h,
            self.tensor(ix, iy, &wx, &dwy) / h,
        )
    }

    fn tensor(&self, ix: usize, iy: usize, wx: &[f64; 4], wy: &[f64; 4]) -> f64 {
        let stride = self.n + 1;
        let mut acc = 0.0;
        for (dj, wyj) in wy.iter().enumerate() {
            let row = (iy + dj - 1) * stride;
            let mut r = 0.0;
            for (di, wxi) in wx.iter().enumerate() {
                r += wxi * self.values[row + ix + di - 1];
            }
            acc += wyj * r;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_speed_has_zero_symbols() {
        let c = SpeedField::constant(1.0);
        let gam = c.christoffel(vec2(0.37, -1.2)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(gam[i][j][k], 0.0);
                }
            }
        }
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let c = SpeedField::Bumps(vec![SpeedBump { center: vec2(0.2, 0.1), radius: 0.9, amp: 0.4 }]);
        for &p in &[vec2(0.3, 0.2), vec2(-0.1, 0.5), vec2(0.6, -0.2)] {
            let gam = c.christoffel(p).unwrap();
            for i in 0..2 {
                assert!((gam[i][0][1] - gam[i][1][0]).abs() < 1e-15);
            }
        }
    }

    // Closed-form check for c = exp(|x|²/2) at x = (1,0): with w = ∇c/c = x,
    // Γ¹₁₁ = −1, Γ¹₂₂ = 1, Γ²₁₂ = −1, rest zero.
    #[test]
    fn christoffel_matches_closed_form_for_exponential_speed() {
        // exp(|x|²/2) is the pure trapping profile with r_trap = 1.
        let c = SpeedField::Herglotz { r_trap: 1.0, steepness: 0.0, blend: None };
        let gam = c.christoffel(vec2(1.0, 0.0)).unwrap();
        assert!((gam[0][0][0] + 1.0).abs() < 1e-12);
        assert!((gam[0][1][1] - 1.0).abs() < 1e-12);
        assert!((gam[1][0][1] + 1.0).abs() < 1e-12);
        assert!(gam[1][0][0].abs() < 1e-12);
        assert!(gam[1][1][1].abs() < 1e-12);
        assert!(gam[0][0][1].abs() < 1e-12);
    }

    // The finite-difference oracle: Γ^i_jk = ½ g^{il}(∂_j g_lk + ∂_k g_jl − ∂_l g_jk)
    // with g_ij = c⁻²δ_ij differentiated numerically.
    fn christoffel_fd(c: &SpeedField, x: Vec2) -> [[[f64; 2]; 2]; 2] {
        let h = 1e-5;
        let g_at = |p: Vec2| {
            let cv = c.value(p);
            1.0 / (cv * cv)
        };
        let dg = [
            (g_at(vec2(x.x + h, x.y)) - g_at(vec2(x.x - h, x.y))) / (2.0 * h),
            (g_at(vec2(x.x, x.y + h)) - g_at(vec2(x.x, x.y - h))) / (2.0 * h),
        ];
        let ginv = c.value(x).powi(2);
        let mut gam = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    // g_lk = γ δ_lk with γ = c⁻²; only l = i contributes.
                    let mut v = 0.0;
                    if i == k {
                        v += dg[j];
                    }
                    if i == j {
                        v += dg[k];
                    }
                    if j == k {
                        v -= dg[i];
                    }
                    gam[i][j][k] = 0.5 * ginv * v;
                }
            }
        }
        gam
    }

    #[test]
    fn christoffel_matches_fd_oracle_for_analytic_speeds() {
        let speeds = vec![
            SpeedField::Herglotz { r_trap: 1.0, steepness: 0.0, blend: None },
            SpeedField::herglotz_trap(),
            SpeedField::Bumps(vec![SpeedBump { center: vec2(-0.2, 0.3), radius: 1.1, amp: 0.25 }]),
        ];
        for c in &speeds {
            for &p in &[vec2(1.0, 0.0), vec2(0.4, 0.7), vec2(-0.5, -0.3), vec2(1.45, 0.2)] {
                let a = c.christoffel(p).unwrap();
                let b = christoffel_fd(c, p);
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            assert!(
                                (a[i][j][k] - b[i][j][k]).abs() < 1e-6,
                                "Γ^{i}_{j}{k} mismatch at {p:?}: {} vs {}",
                                a[i][j][k],
                                b[i][j][k]
                            );
                        }
                    }
                }
            }
        }
    }

    // For a radial speed, reflecting x² ↦ −x² flips the sign of exactly the
    // symbols with an odd number of '2' indices.
    #[test]
    fn christoffel_reflection_symmetry_for_radial_speed() {
        let c = SpeedField::herglotz_trap();
        let p = vec2(0.8, 0.0);
        let gam = c.christoffel(p).unwrap();
        // On the x¹-axis of a radial field, ∂₂c = 0; symbols with an odd
        // count of index 2 vanish.
        assert!(gam[0][0][1].abs() < 1e-12);
        assert!(gam[1][0][0].abs() < 1e-12);
        assert!(gam[1][1][1].abs() < 1e-12);
    }

    #[test]
    fn blended_profile_is_unit_outside() {
        let c = SpeedField::herglotz_trap();
        assert!(c.is_unit_outside(1.95));
        assert!(c.is_unit_outside(2.5));
        // the pure profile is not
        let pure = SpeedField::Herglotz { r_trap: 1.0, steepness: 0.0, blend: None };
        assert!(!pure.is_unit_outside(2.0));
    }

    #[test]
    fn grid_sampled_matches_analytic_profile() {
        let analytic = SpeedField::herglotz_trap();
        let grid = analytic.sample_to_grid(2.5, 800);
        for &p in &[vec2(0.5, 0.2), vec2(1.0, 0.0), vec2(-1.4, 0.7), vec2(0.0, 1.7)] {
            assert!((grid.value(p) - analytic.value(p)).abs() < 2e-5);
            let ga = analytic.grad(p);
            let gg = grid.grad(p);
            assert!(
                (ga - gg).norm() < 5e-3 * (1.0 + ga.norm()),
                "grad mismatch at {p:?}: {ga:?} vs {gg:?}"
            );
        }
    }

    #[test]
    fn grid_sampled_rejects_out_of_support() {
        let grid = SpeedField::constant(1.0).sample_to_grid(1.0, 32);
        assert!(matches!(grid.try_value(vec2(3.0, 0.0)), Err(Error::OutOfDomain(_, _))));
        assert!(grid.christoffel(vec2(0.0, 2.0)).is_err());
        assert!(grid.try_value(vec2(0.5, 0.5)).is_ok());
    }
}
