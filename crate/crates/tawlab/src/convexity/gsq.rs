use crate::error::Result;
use crate::field::Field2;
use crate::geometry::PhasePoint;
use crate::math::Vec2;
use crate::speed::SpeedField;

fn comp(v: Vec2, i: usize) -> f64 {
    if i == 0 {
        v.x
    } else {
        v.y
    }
}

/// Second derivative of a spatial function along the unit-speed geodesic
/// flow: G²f = f_{ij} v^i v^j − Γ^i_{jk} v^j v^k f_i, with v the velocity
/// vector identified with the phase covector by the metric.
///
/// Along the geodesic γ through p this equals d²/dσ² f(γ(σ)).
pub fn geodesic_second_derivative(
    c: &SpeedField,
    f: &dyn Field2,
    p: &PhasePoint,
) -> Result<f64> {
    let v = p.velocity(c);
    let hess = f.hessian(p.x);
    let grad = f.grad(p.x);
    let gam = c.christoffel(p.x)?;
    let mut val = hess.quad(v);
    for i in 0..2 {
        let mut q = 0.0;
        for j in 0..2 {
            for k in 0..2 {
                q += gam[i][j][k] * comp(v, j) * comp(v, k);
            }
        }
        val -= q * comp(grad, i);
    }
    Ok(val)
}
