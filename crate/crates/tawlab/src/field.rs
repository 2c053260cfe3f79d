//! Twice-differentiable scalar fields on the plane.
//!
//! Condition checkers consume fields through the [`Field2`] trait so that the
//! same code path handles analytic phases, composite level-set functions, and
//! grid-sampled data. Implementors should override `grad`/`hessian` with
//! analytic expressions where available; the defaults fall back to central
//! finite differences.

use crate::math::{vec2, Mat2, Vec2};

pub trait Field2: Sync {
    fn value(&self, x: Vec2) -> f64;

    fn grad(&self, x: Vec2) -> Vec2 {
        let h = fd_step(x);
        vec2(
            (self.value(vec2(x.x + h, x.y)) - self.value(vec2(x.x - h, x.y))) / (2.0 * h),
            (self.value(vec2(x.x, x.y + h)) - self.value(vec2(x.x, x.y - h))) / (2.0 * h),
        )
    }

    fn hessian(&self, x: Vec2) -> Mat2 {
        let h = fd_step(x).sqrt() * 3e-3; // ~1e-4 at unit scale
        let v = |dx: f64, dy: f64| self.value(vec2(x.x + dx, x.y + dy));
        let c = v(0.0, 0.0);
        let xx = (v(h, 0.0) - 2.0 * c + v(-h, 0.0)) / (h * h);
        let yy = (v(0.0, h) - 2.0 * c + v(0.0, -h)) / (h * h);
        let xy = (v(h, h) - v(h, -h) - v(-h, h) + v(-h, -h)) / (4.0 * h * h);
        Mat2::symmetric(xx, xy, yy)
    }

    fn laplacian(&self, x: Vec2) -> f64 {
        self.hessian(x).trace()
    }
}

fn fd_step(x: Vec2) -> f64 {
    6e-6 * (1.0 + x.norm())
}

/// Blanket impl so tests can pass plain closures as fields (derivatives via
/// finite differences).
impl<F> Field2 for F
where
    F: Fn(Vec2) -> f64 + Sync,
{
    fn value(&self, x: Vec2) -> f64 {
        self(x)
    }
}

/// f(x) = constant.
pub struct ConstField(pub f64);

impl Field2 for ConstField {
    fn value(&self, _x: Vec2) -> f64 {
        self.0
    }
    fn grad(&self, _x: Vec2) -> Vec2 {
        Vec2::ZERO
    }
    fn hessian(&self, _x: Vec2) -> Mat2 {
        Mat2::ZERO
    }
}

/// f(x) = coeff · |x − center|² / 2.
pub struct HalfSquareDist {
    pub center: Vec2,
    pub coeff: f64,
}

impl Field2 for HalfSquareDist {
    fn value(&self, x: Vec2) -> f64 {
        0.5 * self.coeff * (x - self.center).norm2()
    }
    fn grad(&self, x: Vec2) -> Vec2 {
        (x - self.center) * self.coeff
    }
    fn hessian(&self, _x: Vec2) -> Mat2 {
        Mat2::identity().scale(self.coeff)
    }
}

/// f(x) = |x − center| (the Euclidean radial coordinate around `center`).
pub struct RadialDist {
    pub center: Vec2,
}

impl Field2 for RadialDist {
    fn value(&self, x: Vec2) -> f64 {
        (x - self.center).norm()
    }
    fn grad(&self, x: Vec2) -> Vec2 {
        (x - self.center).normalized()
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        let d = x - self.center;
        let r = d.norm();
        if r < 1e-12 {
            return Mat2::ZERO;
        }
        let u = d / r;
        // (I − u uᵀ)/r
        Mat2::identity().add(Mat2::outer(u, u).scale(-1.0)).scale(1.0 / r)
    }
}

/// Linear field f(x) = a·x + b.
pub struct LinearField {
    pub a: Vec2,
    pub b: f64,
}

impl Field2 for LinearField {
    fn value(&self, x: Vec2) -> f64 {
        self.a.dot(x) + self.b
    }
    fn grad(&self, _x: Vec2) -> Vec2 {
        self.a
    }
    fn hessian(&self, _x: Vec2) -> Mat2 {
        Mat2::ZERO
    }
}

/// Compactly supported C² bump: amp · (1 − (|x−c|/radius)²)³ inside the disk
/// of `radius`, exactly zero outside.
#[derive(Clone, Debug)]
pub struct BumpField {
    pub center: Vec2,
    pub radius: f64,
    pub amp: f64,
}

impl BumpField {
    pub fn new(center: Vec2, radius: f64, amp: f64) -> Self {
        assert!(radius > 0.0);
        BumpField { center, radius, amp }
    }
}

impl Field2 for BumpField {
    fn value(&self, x: Vec2) -> f64 {
        let s2 = (x - self.center).norm2() / (self.radius * self.radius);
        if s2 >= 1.0 {
            0.0
        } else {
            let w = 1.0 - s2;
            self.amp * w * w * w
        }
    }

    fn grad(&self, x: Vec2) -> Vec2 {
        let d = x - self.center;
        let r2 = self.radius * self.radius;
        let s2 = d.norm2() / r2;
        if s2 >= 1.0 {
            Vec2::ZERO
        } else {
            let w = 1.0 - s2;
            d * (-6.0 * self.amp * w * w / r2)
        }
    }

    fn hessian(&self, x: Vec2) -> Mat2 {
        let d = x - self.center;
        let r2 = self.radius * self.radius;
        let s2 = d.norm2() / r2;
        if s2 >= 1.0 {
            return Mat2::ZERO;
        }
        let w = 1.0 - s2;
        // ∇f = −6A w² d / r², so
        // Hess = −6A/r² ( w² I − (4 w / r²) d dᵀ )
        let a = -6.0 * self.amp / r2;
        Mat2::identity()
            .scale(a * w * w)
            .add(Mat2::outer(d, d).scale(-4.0 * a * w / r2))
    }
}

/// Sum of fields (used to assemble speed perturbations and test data).
pub struct SumField {
    pub terms: Vec<Box<dyn Field2 + Send>>,
    pub offset: f64,
}

impl Field2 for SumField {
    fn value(&self, x: Vec2) -> f64 {
        self.offset + self.terms.iter().map(|t| t.value(x)).sum::<f64>()
    }
    fn grad(&self, x: Vec2) -> Vec2 {
        let mut g = Vec2::ZERO;
        for t in &self.terms {
            g += t.grad(x);
        }
        g
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        let mut h = Mat2::ZERO;
        for t in &self.terms {
            h = h.add(t.hessian(x));
        }
        h
    }
}
