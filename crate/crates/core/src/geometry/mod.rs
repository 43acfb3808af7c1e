//! Plane geometry for generalized von Koch curves and snowflakes.
//!
//! Similitudes are stored in factored form (scale, rotation, optional
//! reflection about the x-axis, translation) and applied in that order.

mod export;
mod index;
mod koch;
mod osculation;
mod polygon;
mod tree;

pub use export::{polygon_svg, polyline_svg, vertices_csv};
pub use index::{distance_to_polyline, SpatialIndex};
pub use koch::{
    is_self_avoiding, koch_ifs, prefractal_curve, sector_region, snowflake, snowflake_area,
    KochParams, SelfAvoidance, SelfSimilarSystem, DEFAULT_LEVEL_CAP,
};
pub use osculation::{osculation_check, OsculationReport};
pub use polygon::{
    point_in_polygon, point_segment_distance, segments_intersect, winding_number_point, BBox,
    Polygon, Polyline,
};
pub use tree::{CurveTree, Nearest};

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A similitude of the plane: `p ↦ scale · R(rotation) · F(p) + translation`,
/// where `F` reflects about the x-axis when `reflect` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similitude {
    pub scale: f64,
    pub rotation: f64,
    pub reflect: bool,
    pub translation: Vec2,
}

impl Similitude {
    pub const IDENTITY: Similitude = Similitude {
        scale: 1.0,
        rotation: 0.0,
        reflect: false,
        translation: Vec2::ZERO,
    };

    /// `T_{(a,b)}`
    pub fn translation(a: f64, b: f64) -> Self {
        Self {
            translation: Vec2::new(a, b),
            ..Self::IDENTITY
        }
    }

    /// `R_θ`
    pub fn rotation(theta: f64) -> Self {
        Self {
            rotation: theta,
            ..Self::IDENTITY
        }
    }

    /// `S_λ`
    pub fn homothety(lambda: f64) -> Self {
        Self {
            scale: lambda,
            ..Self::IDENTITY
        }
    }

    pub fn reflection() -> Self {
        Self {
            reflect: true,
            ..Self::IDENTITY
        }
    }

    /// Linear part as a row-major 2x2 matrix.
    pub fn matrix(&self) -> [f64; 4] {
        let (s, c) = self.rotation.sin_cos();
        let k = self.scale;
        if self.reflect {
            // R · diag(1, -1)
            [k * c, k * s, k * s, -k * c]
        } else {
            [k * c, -k * s, k * s, k * c]
        }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        let m = self.matrix();
        Vec2::new(
            m[0] * p.x + m[1] * p.y + self.translation.x,
            m[2] * p.x + m[3] * p.y + self.translation.y,
        )
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Similitude) -> Similitude {
        let rotation = if self.reflect {
            self.rotation - other.rotation
        } else {
            self.rotation + other.rotation
        };
        Similitude {
            scale: self.scale * other.scale,
            rotation,
            reflect: self.reflect ^ other.reflect,
            translation: self.apply(other.translation),
        }
    }

    pub fn inverse(&self) -> Similitude {
        let rotation = if self.reflect {
            self.rotation
        } else {
            -self.rotation
        };
        let lin = Similitude {
            scale: 1.0 / self.scale,
            rotation,
            reflect: self.reflect,
            translation: Vec2::ZERO,
        };
        let t = lin.apply(self.translation);
        Similitude {
            translation: -t,
            ..lin
        }
    }

    /// The unique orientation-preserving similitude taking `(0,0) ↦ a` and `(1,0) ↦ b`.
    pub fn mapping_unit_segment(a: Vec2, b: Vec2) -> Similitude {
        let d = b - a;
        Similitude {
            scale: d.norm(),
            rotation: d.y.atan2(d.x),
            reflect: false,
            translation: a,
        }
    }

    pub(crate) fn affine(&self) -> Affine {
        Affine {
            m: self.matrix(),
            t: self.translation,
        }
    }
}

/// Expanded affine form used in hot loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Affine {
    pub m: [f64; 4],
    pub t: Vec2,
}

impl Affine {
    #[inline]
    pub fn apply(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0] * p.x + self.m[1] * p.y + self.t.x,
            self.m[2] * p.x + self.m[3] * p.y + self.t.y,
        )
    }
}

/// Applies `map` to `p`.
pub fn apply_similitude(map: &Similitude, p: Vec2) -> Vec2 {
    map.apply(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        a.dist(b) <= tol
    }

    #[test]
    fn homothety_and_rotation() {
        let p = Vec2::new(1.0, 0.0);
        assert!(close(Similitude::homothety(1.0 / 3.0).apply(p), Vec2::new(1.0 / 3.0, 0.0), 1e-15));
        assert!(close(Similitude::rotation(PI / 2.0).apply(p), Vec2::new(0.0, 1.0), 1e-15));
    }

    #[test]
    fn hand_composed_psi1() {
        // T_{(1/3,0)} ∘ R_{π/3} ∘ S_{1/3}
        let m = Similitude::translation(1.0 / 3.0, 0.0)
            .compose(&Similitude::rotation(PI / 3.0))
            .compose(&Similitude::homothety(1.0 / 3.0));
        let q = m.apply(Vec2::new(1.0, 0.0));
        assert!(close(q, Vec2::new(0.5, 3f64.sqrt() / 6.0), 1e-15));
    }

    #[test]
    fn reflection_composition() {
        let f = Similitude::reflection();
        let r = Similitude::rotation(0.7);
        let p = Vec2::new(0.3, -1.2);
        let composed = f.compose(&r);
        assert!(close(composed.apply(p), f.apply(r.apply(p)), 1e-14));
        let composed = r.compose(&f);
        assert!(close(composed.apply(p), r.apply(f.apply(p)), 1e-14));
    }

    proptest! {
        #[test]
        fn similitude_scales_distances(
            scale in 0.01f64..10.0, rot in -7.0f64..7.0, refl in any::<bool>(),
            tx in -5.0f64..5.0, ty in -5.0f64..5.0,
            px in -3.0f64..3.0, py in -3.0f64..3.0, qx in -3.0f64..3.0, qy in -3.0f64..3.0,
        ) {
            let m = Similitude { scale, rotation: rot, reflect: refl, translation: Vec2::new(tx, ty) };
            let p = Vec2::new(px, py);
            let q = Vec2::new(qx, qy);
            let d0 = p.dist(q);
            let d1 = m.apply(p).dist(m.apply(q));
            prop_assert!((d1 - scale * d0).abs() <= 1e-12 * (1.0 + scale * d0));
        }

        #[test]
        fn compose_and_inverse_agree_with_pointwise(
            s1 in 0.1f64..3.0, r1 in -4.0f64..4.0, f1 in any::<bool>(),
            s2 in 0.1f64..3.0, r2 in -4.0f64..4.0, f2 in any::<bool>(),
            px in -2.0f64..2.0, py in -2.0f64..2.0,
        ) {
            let a = Similitude { scale: s1, rotation: r1, reflect: f1, translation: Vec2::new(0.3, -0.2) };
            let b = Similitude { scale: s2, rotation: r2, reflect: f2, translation: Vec2::new(-1.1, 0.5) };
            let p = Vec2::new(px, py);
            prop_assert!(close(a.compose(&b).apply(p), a.apply(b.apply(p)), 1e-12));
            prop_assert!(close(a.inverse().apply(a.apply(p)), p, 1e-12));
        }
    }
}
