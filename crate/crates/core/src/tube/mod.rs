//! Inner tube volumes `V(ε) = |{x ∈ Ω : d(x, ∂Ω) < ε}|` of snowflake and
//! polygon drums, tube tables and their antiderivatives.

mod grid;
mod montecarlo;
mod table;

pub use table::{antiderivative, tube_table, GridSpec, TubeSample, TubeTable};

use crate::error::{Error, Result};
use crate::geometry::{
    is_self_avoiding, point_in_polygon, snowflake, snowflake_area, BBox, CurveTree, KochParams,
    Nearest, Polygon, Similitude, SpatialIndex, Vec2, DEFAULT_LEVEL_CAP,
};

/// Nearest-boundary queries with side information.
pub(crate) trait DistanceField: Sync {
    fn nearest_within(&self, p: Vec2, cap: f64) -> Option<Nearest>;
    fn nearest(&self, p: Vec2) -> Nearest;
}

impl DistanceField for CurveTree {
    fn nearest_within(&self, p: Vec2, cap: f64) -> Option<Nearest> {
        CurveTree::nearest_within(self, p, cap)
    }
    fn nearest(&self, p: Vec2) -> Nearest {
        CurveTree::nearest(self, p)
    }
}

struct PolygonField<'a> {
    poly: &'a Polygon,
    index: SpatialIndex,
}

impl DistanceField for PolygonField<'_> {
    fn nearest_within(&self, p: Vec2, cap: f64) -> Option<Nearest> {
        let n = self.nearest(p);
        (n.dist < cap).then_some(n)
    }
    fn nearest(&self, p: Vec2) -> Nearest {
        Nearest {
            dist: self.index.nearest(p).1,
            inside: point_in_polygon(p, self.poly),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DrumShape {
    /// The (n, r)-snowflake attractor placed by an orientation-preserving similitude.
    Snowflake { params: KochParams, world: Similitude },
    /// A fixed simple polygon.
    Polygon(Polygon),
}

/// A relative fractal drum `(∂Ω, Ω)` in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeFractalDrum {
    pub shape: DrumShape,
    pub ambient_dim: u32,
}

impl RelativeFractalDrum {
    /// The unit snowflake; requires the sufficient self-avoidance criterion.
    pub fn snowflake(params: &KochParams) -> Result<Self> {
        let sa = is_self_avoiding(params);
        if !sa.passes {
            return Err(Error::NotSelfAvoiding {
                r: params.r,
                threshold: sa.threshold,
            });
        }
        Ok(Self {
            shape: DrumShape::Snowflake {
                params: params.clone(),
                world: Similitude::IDENTITY,
            },
            ambient_dim: 2,
        })
    }

    pub fn polygon(poly: Polygon) -> Result<Self> {
        if poly.segment_count() < 3 {
            return Err(Error::InvalidParams("polygon drum needs at least 3 edges".into()));
        }
        Ok(Self {
            shape: DrumShape::Polygon(poly),
            ambient_dim: 2,
        })
    }

    /// The drum scaled by `lambda` about the origin.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParams(format!("scale factor {lambda} must be positive")));
        }
        let h = Similitude::homothety(lambda);
        let shape = match &self.shape {
            DrumShape::Snowflake { params, world } => DrumShape::Snowflake {
                params: params.clone(),
                world: h.compose(world),
            },
            DrumShape::Polygon(p) => DrumShape::Polygon(p.transformed(|v| h.apply(v))),
        };
        Ok(Self {
            shape,
            ambient_dim: self.ambient_dim,
        })
    }

    /// Area of `Ω` (the limit area for snowflakes).
    pub fn area(&self) -> f64 {
        match &self.shape {
            DrumShape::Snowflake { params, world } => world.scale.powi(2) * snowflake_area(params, None),
            DrumShape::Polygon(p) => p.area(),
        }
    }

    /// A box containing `Ω̄`.
    pub fn bbox(&self) -> BBox {
        match &self.shape {
            DrumShape::Snowflake { params, world } => {
                let level = 3;
                let poly = snowflake(params, level).expect("low-level snowflake closes");
                let b = BBox::of_points(poly.vertices.iter().map(|v| world.apply(*v)).collect::<Vec<_>>().iter())
                    .unwrap();
                let pad = CurveTree::snowflake(params, level, world).hausdorff_bound();
                BBox {
                    min: b.min - Vec2::new(pad, pad),
                    max: b.max + Vec2::new(pad, pad),
                }
            }
            DrumShape::Polygon(p) => p.bbox(),
        }
    }

    pub fn diameter(&self) -> f64 {
        self.bbox().diagonal()
    }

    /// The polygonal boundary at prefractal level `level` (ignored for polygons).
    pub fn boundary(&self, level: u32) -> Result<Polygon> {
        match &self.shape {
            DrumShape::Snowflake { params, world } => {
                Ok(snowflake(params, level)?.transformed(|v| world.apply(v)))
            }
            DrumShape::Polygon(p) => Ok(p.clone()),
        }
    }

    /// Dimension hint `D` for the leading power law `V ~ C ε^{2−D}`.
    pub fn dimension_hint(&self) -> f64 {
        match &self.shape {
            DrumShape::Snowflake { params, .. } => {
                crate::moran::similarity_dimension(&crate::sfe::koch_operator(params))
            }
            DrumShape::Polygon(_) => 1.0,
        }
    }

    pub(crate) fn with_field<T>(&self, level: u32, f: impl FnOnce(&dyn DistanceField, f64) -> T) -> T {
        match &self.shape {
            DrumShape::Snowflake { params, world } => {
                let tree = CurveTree::snowflake(params, level, world);
                let h = tree.hausdorff_bound();
                f(&tree, h)
            }
            DrumShape::Polygon(p) => {
                let field = PolygonField {
                    poly: p,
                    index: SpatialIndex::from_polygon(p).expect("polygon has edges"),
                };
                f(&field, 0.0)
            }
        }
    }
}

/// Rule choosing the prefractal level from `ε`: the smallest level with
/// `scale · max(ℓ, r)^level ≤ fraction · ε`, capped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPolicy {
    pub fraction: f64,
    pub cap: u32,
    /// Overrides the rule when set.
    pub fixed: Option<u32>,
}

impl Default for LevelPolicy {
    fn default() -> Self {
        Self {
            fraction: 0.01,
            cap: DEFAULT_LEVEL_CAP,
            fixed: None,
        }
    }
}

impl LevelPolicy {
    pub fn level_for(&self, drum: &RelativeFractalDrum, eps: f64) -> u32 {
        if let Some(l) = self.fixed {
            return l.min(self.cap);
        }
        match &drum.shape {
            DrumShape::Snowflake { params, world } => {
                let lam = params.max_ratio();
                let target = self.fraction * eps / world.scale;
                if target <= 0.0 {
                    return self.cap;
                }
                let m = (target.ln() / lam.ln()).ceil().max(0.0);
                (m as u32).min(self.cap)
            }
            DrumShape::Polygon(_) => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellSize {
    Absolute(f64),
    /// `h = factor · ε`.
    RelativeToEps(f64),
    /// `h = min(factor · ε, max)`.
    RelativeCapped { factor: f64, max: f64 },
}

/// How the grid estimator turns the boundary band into an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridError {
    /// `h ×` (estimated length of the level set `d = ε`): every band cell
    /// counted as wholly misclassified.
    #[default]
    Bound,
    /// `3 h² √(band cells)`: band-cell errors treated as independent with
    /// zero mean. Matches the scatter over grid rotations with margin.
    Statistical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Grid { h: CellSize },
    MonteCarlo { samples: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub method: Method,
    pub level_policy: LevelPolicy,
    pub grid_error: GridError,
    pub seed: u64,
    /// Rotation of the grid against the drum, in radians. A generic angle
    /// keeps straight boundary pieces from aligning with grid rows.
    pub grid_angle: f64,
}

impl EstimatorConfig {
    pub fn grid(h: f64) -> Self {
        Self {
            method: Method::Grid { h: CellSize::Absolute(h) },
            level_policy: LevelPolicy::default(),
            grid_error: GridError::Bound,
            seed: 0,
            grid_angle: DEFAULT_GRID_ANGLE,
        }
    }

    pub fn grid_relative(factor: f64) -> Self {
        Self {
            method: Method::Grid {
                h: CellSize::RelativeToEps(factor),
            },
            ..Self::grid(1.0)
        }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self {
            method: Method::MonteCarlo { samples },
            seed,
            ..Self::grid(1.0)
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.method {
            Method::Grid { h: CellSize::Absolute(h) } | Method::Grid { h: CellSize::RelativeToEps(h) } => {
                h > 0.0 && h.is_finite()
            }
            Method::Grid {
                h: CellSize::RelativeCapped { factor, max },
            } => factor > 0.0 && factor.is_finite() && max > 0.0 && max.is_finite(),
            Method::MonteCarlo { samples } => samples > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("estimator resolution must be positive".into()))
        }
    }
}

/// Default grid rotation (an arbitrary angle unrelated to `π/n`).
pub const DEFAULT_GRID_ANGLE: f64 = 0.271_828;

/// `V(ε)` for the drum.
pub fn tube_volume(drum: &RelativeFractalDrum, eps: f64, cfg: &EstimatorConfig) -> Result<TubeSample> {
    if eps < 0.0 || eps.is_nan() {
        return Err(Error::NegativeEpsilon(eps));
    }
    cfg.validate()?;
    if eps == 0.0 {
        return Ok(TubeSample {
            eps,
            volume: 0.0,
            err: 0.0,
        });
    }
    let level = cfg.level_policy.level_for(drum, eps);
    let area = drum.area();
    let bbox = drum.bbox();
    match cfg.method {
        Method::Grid { h } => {
            let h = match h {
                CellSize::Absolute(h) => h,
                CellSize::RelativeToEps(f) => f * eps,
                CellSize::RelativeCapped { factor, max } => (factor * eps).min(max),
            };
            drum.with_field(level, |field, hausdorff| {
                grid::grid_volume(field, &bbox, area, eps, h, cfg.grid_angle, hausdorff, cfg.grid_error)
            })
        }
        Method::MonteCarlo { samples } => drum.with_field(level, |field, hausdorff| {
            montecarlo::mc_volume(field, &bbox, area, eps, samples, cfg.seed, hausdorff)
        }),
    }
}

/// Inner tube area of a convex polygon: `P ε − ε² Σ cot(αᵢ/2)`, valid for
/// `ε` up to the inradius.
pub fn polygon_inner_tube_exact(poly: &Polygon, eps: f64) -> Result<f64> {
    if eps < 0.0 {
        return Err(Error::NegativeEpsilon(eps));
    }
    if !poly.is_convex() {
        return Err(Error::NotConvex);
    }
    let cot_sum: f64 = poly
        .interior_angles()
        .iter()
        .map(|a| 1.0 / (0.5 * a).tan())
        .sum();
    let p = poly.perimeter();
    let limit = polygon_erosion_limit(poly);
    if eps > limit * (1.0 + 1e-12) {
        return Err(Error::InradiusExceeded { eps, inradius: limit });
    }
    Ok(p * eps - eps * eps * cot_sum)
}

/// The first `ε` at which an edge of the inner offset collapses; for
/// tangential polygons (regular ones included) this is the inradius.
pub fn polygon_erosion_limit(poly: &Polygon) -> f64 {
    // An edge of length L between interior angles a, b shrinks at rate
    // cot(a/2) + cot(b/2) and vanishes at L / (cot(a/2) + cot(b/2)).
    let angles = poly.interior_angles();
    let m = angles.len();
    poly.segments()
        .enumerate()
        .map(|(i, (a, b))| {
            let rate = 1.0 / (0.5 * angles[i]).tan() + 1.0 / (0.5 * angles[(i + 1) % m]).tan();
            a.dist(b) / rate
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Polygon {
        Polygon::regular(3, 1.0).unwrap()
    }

    #[test]
    fn exact_formula_examples() {
        let t = triangle();
        let r_in = 3f64.sqrt() / 6.0;
        assert!((polygon_erosion_limit(&t) - r_in).abs() < 1e-15);
        let full = polygon_inner_tube_exact(&t, r_in).unwrap();
        assert!((full - 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert_eq!(polygon_inner_tube_exact(&t, 0.0).unwrap(), 0.0);
        let v = polygon_inner_tube_exact(&t, 0.1).unwrap();
        assert!((v - (0.3 - 3.0 * 3f64.sqrt() * 0.01)).abs() < 1e-15);
        let sq = Polygon::regular(4, 1.0).unwrap();
        assert!((polygon_inner_tube_exact(&sq, 0.1).unwrap() - 0.36).abs() < 1e-15);
        assert!(matches!(
            polygon_inner_tube_exact(&t, 0.3),
            Err(Error::InradiusExceeded { .. })
        ));
    }

    #[test]
    fn level_policy() {
        let k = KochParams::new(3, 1.0 / 3.0).unwrap();
        let drum = RelativeFractalDrum::snowflake(&k).unwrap();
        let p = LevelPolicy::default();
        // 3^-m ≤ 1e-3 ⇒ m = 7
        assert_eq!(p.level_for(&drum, 0.1), 7);
        assert_eq!(p.level_for(&drum, 1e-12), 16);
        let big = drum.scaled(3.0).unwrap();
        assert_eq!(p.level_for(&big, 0.3), 7);
    }

    #[test]
    fn uncertified_snowflake_rejected() {
        let k = KochParams::new(6, 0.3).unwrap();
        assert!(matches!(
            RelativeFractalDrum::snowflake(&k),
            Err(Error::NotSelfAvoiding { .. })
        ));
    }

    #[test]
    fn negative_eps_rejected() {
        let drum = RelativeFractalDrum::polygon(triangle()).unwrap();
        assert!(matches!(
            tube_volume(&drum, -1.0, &EstimatorConfig::grid(0.01)),
            Err(Error::NegativeEpsilon(_))
        ));
        assert_eq!(tube_volume(&drum, 0.0, &EstimatorConfig::grid(0.01)).unwrap().volume, 0.0);
    }
}
