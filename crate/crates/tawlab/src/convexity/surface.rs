use crate::error::{Error, Result};
use crate::field::Field2;
use crate::math::{vec2, Vec2};
use crate::speed::SpeedField;

/// Second fundamental form (a scalar in 2D) of the level curve of σ through
/// x, in the metric g = c⁻²δ, with respect to the orientation normal
/// N = orientation·∇σ/|∇σ| (pointing toward the interior side Σ^int).
///
/// Computed as II = g(∇_T T, N) with T the g-unit tangent field
/// T = orientation·c·perp(∇σ/|∇σ|); the covariant derivative uses the
/// conformal Christoffel symbols, all derivatives analytic through the field
/// traits. Strict convexity of the curve viewed from Σ^int is II > 0.
pub fn second_fundamental_form(
    c: &SpeedField,
    sigma: &dyn Field2,
    x: Vec2,
    orientation: f64,
) -> Result<f64> {
    let w = sigma.grad(x);
    let wn = w.norm();
    if wn < 1e-10 {
        return Err(Error::precondition(format!(
            "level set of sigma is degenerate at ({}, {}): |grad| = {wn:.3e}",
            x.x, x.y
        )));
    }
    let or = orientation.signum();
    let n_e = w * (or / wn); // Euclidean unit normal toward Σ^int
    let cv = c.value(x);
    let dc = c.grad(x);
    let hess = sigma.hessian(x);

    // T(x) = or · c(x) · perp(ŵ(x)); differentiate the product analytically.
    // ∂_j ŵ = (H_j − ŵ (ŵ·H_j)) / |w|, H_j the j-th Hessian column.
    let w_hat = w / wn;
    let t_hat = w_hat.perp();
    let t_vec = t_hat * (or * cv);

    let hcol = |j: usize| -> Vec2 {
        vec2(hess.m[0][j], hess.m[1][j])
    };
    let mut dt = [[0.0f64; 2]; 2]; // dt[i][j] = ∂_j T^i
    for j in 0..2 {
        let hj = hcol(j);
        let dw_hat = (hj - w_hat * w_hat.dot(hj)) / wn;
        let dt_hat = dw_hat.perp();
        let dc_j = if j == 0 { dc.x } else { dc.y };
        let col = (t_hat * dc_j + dt_hat * cv) * or;
        dt[0][j] = col.x;
        dt[1][j] = col.y;
    }

    // (∇_T T)^i = T^j ∂_j T^i + Γ^i_{jk} T^j T^k
    let gam = c.christoffel(x)?;
    let tv = [t_vec.x, t_vec.y];
    let mut cov = [0.0f64; 2];
    for i in 0..2 {
        let mut acc = 0.0;
        for j in 0..2 {
            acc += tv[j] * dt[i][j];
            for k in 0..2 {
                acc += gam[i][j][k] * tv[j] * tv[k];
            }
        }
        cov[i] = acc;
    }
    // II = g(∇_T T, N) with N = c·N_e the g-unit normal: c⁻²·⟨cov, c·N_e⟩
    Ok((cov[0] * n_e.x + cov[1] * n_e.y) / cv)
}

/// Sample the level curve {σ = level} inside [lo, hi] by scanning the edges
/// of an m×m lattice for sign changes, refined by bisection along each edge.
pub fn sample_level_set(
    sigma: &dyn Field2,
    level: f64,
    lo: Vec2,
    hi: Vec2,
    m: usize,
) -> Vec<Vec2> {
    let dx = (hi.x - lo.x) / m as f64;
    let dy = (hi.y - lo.y) / m as f64;
    let val = |i: usize, j: usize| {
        sigma.value(vec2(lo.x + i as f64 * dx, lo.y + j as f64 * dy)) - level
    };
    let mut pts = Vec::new();
    let mut refine = |a: Vec2, b: Vec2, fa: f64, _fb: f64| {
        let mut lo_p = a;
        let mut hi_p = b;
        let mut f_lo = fa;
        for _ in 0..40 {
            let mid = (lo_p + hi_p) * 0.5;
            let fm = sigma.value(mid) - level;
            if (fm > 0.0) == (f_lo > 0.0) {
                lo_p = mid;
                f_lo = fm;
            } else {
                hi_p = mid;
            }
        }
        pts.push((lo_p + hi_p) * 0.5);
    };
    for j in 0..=m {
        for i in 0..=m {
            let f00 = val(i, j);
            if i < m {
                let f10 = val(i + 1, j);
                if (f00 > 0.0) != (f10 > 0.0) {
                    let a = vec2(lo.x + i as f64 * dx, lo.y + j as f64 * dy);
                    let b = vec2(lo.x + (i + 1) as f64 * dx, lo.y + j as f64 * dy);
                    refine(a, b, f00, f10);
                }
            }
            if j < m {
                let f01 = val(i, j + 1);
                if (f00 > 0.0) != (f01 > 0.0) {
                    let a = vec2(lo.x + i as f64 * dx, lo.y + j as f64 * dy);
                    let b = vec2(lo.x + i as f64 * dx, lo.y + (j + 1) as f64 * dy);
                    refine(a, b, f00, f01);
                }
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RadialDist;

    // Circle of radius ρ in the Euclidean metric: II = 1/ρ with the inward
    // orientation (interior side).
    #[test]
    fn circle_curvature_is_inverse_radius() {
        let c = SpeedField::constant(1.0);
        let sigma = RadialDist { center: Vec2::ZERO };
        for &rho in &[0.2, 0.5, 1.0, 2.0, 5.0] {
            for k in 0..8 {
                let x = Vec2::from_angle(0.77 * k as f64) * rho;
                let ii = second_fundamental_form(&c, &sigma, x, -1.0).unwrap();
                assert!((ii - 1.0 / rho).abs() < 1e-4 / rho, "rho {rho}: {ii}");
            }
        }
    }

    #[test]
    fn straight_line_is_flat() {
        let c = SpeedField::constant(1.0);
        let sigma = |p: Vec2| p.x + 0.3 * p.y; // straight level lines
        for k in 0..5 {
            let x = vec2(0.1 * k as f64, -0.2 + 0.15 * k as f64);
            let ii = second_fundamental_form(&c, &sigma, x, 1.0).unwrap();
            assert!(ii.abs() < 1e-6, "got {ii}");
        }
    }

    // Herglotz profile: the circle r = 1 is a geodesic of g, so its second
    // fundamental form vanishes there.
    #[test]
    fn trapped_circle_is_geodesic_hence_flat() {
        let c = SpeedField::Herglotz { r_trap: 1.0, steepness: 0.0, blend: None };
        let sigma = RadialDist { center: Vec2::ZERO };
        for k in 0..8 {
            let x = Vec2::from_angle(0.5 + 0.7 * k as f64);
            let ii = second_fundamental_form(&c, &sigma, x, -1.0).unwrap();
            assert!(ii.abs() < 1e-4, "got {ii}");
        }
        // while nearby circles curve with opposite signs on the two sides
        let inner = second_fundamental_form(&c, &sigma, vec2(0.8, 0.0), -1.0).unwrap();
        let outer = second_fundamental_form(&c, &sigma, vec2(1.25, 0.0), -1.0).unwrap();
        assert!(inner > 1e-3, "inner {inner}");
        assert!(outer < -1e-3, "outer {outer}");
    }

    #[test]
    fn orientation_flip_negates_curvature() {
        let c = SpeedField::herglotz_trap();
        let sigma = RadialDist { center: vec2(0.1, -0.2) };
        let x = vec2(0.9, 0.4);
        let a = second_fundamental_form(&c, &sigma, x, 1.0).unwrap();
        let b = second_fundamental_form(&c, &sigma, x, -1.0).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn degenerate_gradient_is_rejected() {
        let c = SpeedField::constant(1.0);
        let sigma = RadialDist { center: Vec2::ZERO };
        assert!(second_fundamental_form(&c, &sigma, Vec2::ZERO, 1.0).is_err());
    }

    #[test]
    fn level_set_sampler_finds_the_circle() {
        let sigma = RadialDist { center: Vec2::ZERO };
        let pts = sample_level_set(&sigma, 0.7, vec2(-1.0, -1.0), vec2(1.0, 1.0), 64);
        assert!(pts.len() > 100);
        for p in &pts {
            assert!((p.norm() - 0.7).abs() < 1e-9);
        }
    }
}
