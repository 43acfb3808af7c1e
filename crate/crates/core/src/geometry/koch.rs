use std::f64::consts::PI;

use num_rational::Ratio;

use super::{Polygon, Polyline, Similitude, Vec2};
use crate::error::{Error, Result};

/// Default maximum prefractal level accepted by the constructors.
pub const DEFAULT_LEVEL_CAP: u32 = 16;

/// Parameters of an (n, r)-von Koch curve.
#[derive(Debug, Clone, PartialEq)]
pub struct KochParams {
    pub n: u32,
    pub r: f64,
    /// Side ratio `(1 - r) / 2` of the two outer pieces.
    pub ell: f64,
    /// Central angle `2π/n` of the regular n-gon.
    pub theta_n: f64,
    /// Interior angle `π - 2π/n` of the regular n-gon.
    pub alpha_n: f64,
    /// Exact value of `r` when it was supplied as a rational.
    pub r_exact: Option<Ratio<i64>>,
}

impl KochParams {
    pub fn new(n: u32, r: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!("n must be at least 3, got {n}")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParams(format!("r must lie in (0, 1), got {r}")));
        }
        let theta_n = 2.0 * PI / n as f64;
        Ok(Self {
            n,
            r,
            ell: 0.5 * (1.0 - r),
            theta_n,
            alpha_n: PI - theta_n,
            r_exact: None,
        })
    }

    pub fn from_rational(n: u32, r: Ratio<i64>) -> Result<Self> {
        let rf = *r.numer() as f64 / *r.denom() as f64;
        let mut p = Self::new(n, rf)?;
        p.r_exact = Some(r);
        let l = p.ell_exact().unwrap();
        p.ell = *l.numer() as f64 / *l.denom() as f64;
        Ok(p)
    }

    /// Exact `ℓ = (1 - r)/2` when `r` is rational.
    pub fn ell_exact(&self) -> Option<Ratio<i64>> {
        self.r_exact
            .map(|r| (Ratio::from_integer(1) - r) / Ratio::from_integer(2))
    }

    /// True when `ℓ = r` (exactly for rational input, to 1e-14 otherwise).
    pub fn ratios_coincide(&self) -> bool {
        match (self.r_exact, self.ell_exact()) {
            (Some(r), Some(l)) => r == l,
            _ => (self.ell - self.r).abs() <= 1e-14 * self.r,
        }
    }

    pub fn max_ratio(&self) -> f64 {
        self.ell.max(self.r)
    }

    /// Vertices of the unit-side regular n-gon, clockwise, starting at
    /// `(0,0), (1,0)` so that the first edge carries the base curve.
    pub fn ngon_vertices(&self) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.n as usize + 1);
        let mut p = Vec2::ZERO;
        for k in 0..self.n {
            out.push(p);
            p = p + Vec2::new(1.0, 0.0).rotate(-(k as f64) * self.theta_n);
        }
        out.push(Vec2::ZERO);
        out
    }

    /// Center of the unit n-gon.
    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5, -0.5 / (PI / self.n as f64).tan())
    }

    /// Distance from the center to each edge midpoint of the unit n-gon.
    pub fn inradius(&self) -> f64 {
        0.5 / (PI / self.n as f64).tan()
    }

    /// Isometries placing the base curve on each n-gon edge with its bulge outward.
    pub fn edge_maps(&self) -> Vec<Similitude> {
        let v = self.ngon_vertices();
        (0..self.n as usize)
            .map(|k| Similitude::mapping_unit_segment(v[k], v[k + 1]))
            .collect()
    }
}

/// A self-similar system: maps plus the multiset of their ratios.
#[derive(Debug, Clone)]
pub struct SelfSimilarSystem {
    /// Ordered as `φ_L, φ_R, ψ_1, …, ψ_{n-1}`.
    pub maps: Vec<Similitude>,
    /// `(multiplicity, ratio)` pairs with distinct ratios.
    pub ratios: Vec<(u32, f64)>,
}

impl SelfSimilarSystem {
    /// Map indices in the order the pieces appear along the curve from
    /// `(0,0)` to `(1,0)`.
    pub fn traversal_order(&self) -> Vec<usize> {
        let m = self.maps.len();
        let mut order = vec![0];
        order.extend(2..m);
        order.push(1);
        order
    }
}

/// Builds `φ_L, φ_R, ψ_1, …, ψ_{n-1}` for the (n, r)-von Koch curve.
pub fn koch_ifs(params: &KochParams) -> SelfSimilarSystem {
    let ell = params.ell;
    let r = params.r;
    let phi_l = Similitude::homothety(ell);
    let phi_r = Similitude::translation(ell + r, 0.0).compose(&Similitude::homothety(ell));
    let mut maps = vec![phi_l, phi_r];
    let mut prev = Similitude::translation(ell, 0.0)
        .compose(&Similitude::rotation(params.alpha_n))
        .compose(&Similitude::homothety(r));
    maps.push(prev);
    for k in 2..params.n {
        let start = prev.apply(Vec2::new(1.0, 0.0));
        let psi = Similitude::translation(start.x, start.y)
            .compose(&Similitude::rotation(
                params.alpha_n - (k - 1) as f64 * params.theta_n,
            ))
            .compose(&Similitude::homothety(r));
        maps.push(psi);
        prev = psi;
    }
    let ratios = if params.ratios_coincide() {
        vec![(params.n + 1, r)]
    } else {
        vec![(2, ell), (params.n - 1, r)]
    };
    SelfSimilarSystem { maps, ratios }
}

fn check_level(level: u32, cap: u32) -> Result<()> {
    if level > cap {
        Err(Error::LevelTooHigh { level, cap })
    } else {
        Ok(())
    }
}

/// Level-`level` prefractal of the base curve from `(0,0)` to `(1,0)`.
pub fn prefractal_curve(params: &KochParams, level: u32) -> Result<Polyline> {
    prefractal_curve_capped(params, level, DEFAULT_LEVEL_CAP)
}

pub(crate) fn prefractal_curve_capped(params: &KochParams, level: u32, cap: u32) -> Result<Polyline> {
    check_level(level, cap)?;
    let sys = koch_ifs(params);
    let order = sys.traversal_order();
    let mut verts = vec![Vec2::ZERO, Vec2::new(1.0, 0.0)];
    for _ in 0..level {
        let mut next = Vec::with_capacity((verts.len() - 1) * order.len() + 1);
        next.push(Vec2::ZERO);
        for &i in &order {
            let a = sys.maps[i].affine();
            next.extend(verts[1..].iter().map(|&p| a.apply(p)));
        }
        verts = next;
    }
    Ok(Polyline::new(verts))
}

/// Level-`level` prefractal snowflake: n copies of the curve on the edges
/// of the unit regular n-gon, bulges outward, vertices in clockwise order.
pub fn snowflake(params: &KochParams, level: u32) -> Result<Polygon> {
    let curve = prefractal_curve(params, level)?;
    let mut verts = Vec::with_capacity(curve.segment_count() * params.n as usize + 1);
    verts.push(Vec2::ZERO);
    for e in params.edge_maps() {
        let a = e.affine();
        verts.extend(curve.vertices[1..].iter().map(|&p| a.apply(p)));
    }
    let gap = verts[0].dist(*verts.last().unwrap());
    if gap > 1e-12 {
        return Err(Error::Closure { gap });
    }
    // snap the rounding residue so first == last exactly
    *verts.last_mut().unwrap() = verts[0];
    Polygon::new(verts)
}

/// Area enclosed by the level-`level` snowflake (`None` for the limit).
///
/// Each refinement adds one regular n-gon of side `r·L` per segment of
/// length `L`; the sum of squared segment lengths obeys
/// `S_{k+1} = (2ℓ² + (n-1)r²) S_k`. Bumps are disjoint only for
/// self-avoiding parameters.
pub fn snowflake_area(params: &KochParams, level: Option<u32>) -> f64 {
    let n = params.n as f64;
    let ngon = |side: f64| n * side * side / (4.0 * (PI / n).tan());
    let q = 2.0 * params.ell * params.ell + (n - 1.0) * params.r * params.r;
    let bump = n * ngon(params.r);
    let series = match level {
        None => bump / (1.0 - q),
        Some(m) => bump * (1.0 - q.powi(m as i32)) / (1.0 - q),
    };
    ngon(1.0) + series
}

/// The sector region `U`: bounded by the two n-gon radii through `(0,0)`
/// and `(1,0)` and the level-`level` base curve.
pub fn sector_region(params: &KochParams, level: u32) -> Result<Polygon> {
    let curve = prefractal_curve(params, level)?;
    let mut ring = curve.vertices.clone();
    // curve runs (0,0) -> (1,0); close through the center (clockwise ring)
    ring.push(params.center());
    Polygon::from_ring(ring)
}

/// Result of the sufficient self-avoidance criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfAvoidance {
    /// `r < threshold`; a `false` value does not prove self-intersection.
    pub passes: bool,
    pub threshold: f64,
}

/// Sufficient (not necessary) condition for the curve to be simple.
pub fn is_self_avoiding(params: &KochParams) -> SelfAvoidance {
    let a = PI / params.n as f64;
    let threshold = if params.n % 2 == 0 {
        a.sin().powi(2) / (a.cos().powi(2) + 1.0)
    } else {
        1.0 - a.cos()
    };
    SelfAvoidance {
        passes: params.r < threshold,
        threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::segments_intersect;

    fn p(n: u32, r: f64) -> KochParams {
        KochParams::new(n, r).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(KochParams::new(2, 0.3).is_err());
        assert!(KochParams::new(3, 1.0).is_err());
        assert!(KochParams::new(3, 0.0).is_err());
        let k = p(6, 0.1);
        assert!((k.theta_n + k.alpha_n - PI).abs() < 1e-15);
        assert!(k.ell > 0.0 && k.ell < 0.5);
    }

    #[test]
    fn ifs_ratio_multisets() {
        let s = koch_ifs(&p(3, 1.0 / 3.0));
        assert_eq!(s.maps.len(), 4);
        assert_eq!(s.ratios, vec![(4, 1.0 / 3.0)]);
        assert!(s.maps.iter().all(|m| (m.scale - 1.0 / 3.0).abs() < 1e-15));
        let exact = KochParams::from_rational(3, Ratio::new(1, 3)).unwrap();
        assert_eq!(exact.ell, 1.0 / 3.0);
        assert_eq!(koch_ifs(&exact).ratios, vec![(4, 1.0 / 3.0)]);

        let s = koch_ifs(&p(4, 0.25));
        assert_eq!(s.maps.len(), 5);
        assert_eq!(s.ratios, vec![(2, 0.375), (3, 0.25)]);

        let s = koch_ifs(&p(5, 0.2));
        assert_eq!(s.maps.len(), 6);
        assert_eq!(s.ratios.len(), 2);
        assert!((s.ratios[0].1 - 0.4).abs() < 1e-15 && s.ratios[0].0 == 2);
        assert!((s.ratios[1].1 - 0.2).abs() < 1e-15 && s.ratios[1].0 == 4);
    }

    #[test]
    fn ifs_pieces_chain_end_to_end() {
        for (n, r) in [(3, 1.0 / 3.0), (4, 0.25), (5, 0.2), (6, 0.1), (7, 0.05)] {
            let s = koch_ifs(&p(n, r));
            let order = s.traversal_order();
            let mut at = Vec2::ZERO;
            for &i in &order {
                let a = s.maps[i].apply(Vec2::ZERO);
                assert!(a.dist(at) < 1e-14, "n={n}: piece {i} starts at {a:?}, expected {at:?}");
                at = s.maps[i].apply(Vec2::new(1.0, 0.0));
            }
            assert!(at.dist(Vec2::new(1.0, 0.0)) < 1e-14);
        }
    }

    #[test]
    fn level_one_koch_curve() {
        let c = prefractal_curve(&p(3, 1.0 / 3.0), 1).unwrap();
        let h = 3f64.sqrt() / 6.0;
        let expect = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0 / 3.0, 0.0),
            Vec2::new(0.5, h),
            Vec2::new(2.0 / 3.0, 0.0),
            Vec2::new(1.0, 0.0),
        ];
        assert_eq!(c.vertices.len(), 5);
        for (a, b) in c.vertices.iter().zip(expect) {
            assert!(a.dist(b) < 1e-15, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn segment_counts_and_endpoints() {
        for (n, r) in [(3, 1.0 / 3.0), (4, 0.25), (5, 0.2)] {
            let k = p(n, r);
            for m in 0..=4u32 {
                let c = prefractal_curve(&k, m).unwrap();
                assert_eq!(c.segment_count(), ((n + 1) as usize).pow(m));
                assert_eq!(c.vertices[0], Vec2::ZERO);
                assert!(c.vertices.last().unwrap().dist(Vec2::new(1.0, 0.0)) < 1e-14);
            }
        }
        assert_eq!(prefractal_curve(&p(3, 1.0 / 3.0), 3).unwrap().segment_count(), 64);
    }

    #[test]
    fn refinement_keeps_vertices() {
        let k = p(4, 0.25);
        let coarse = prefractal_curve(&k, 2).unwrap();
        let fine = prefractal_curve(&k, 3).unwrap();
        // every level-m vertex reappears at stride (n+1)
        for (i, v) in coarse.vertices.iter().enumerate() {
            assert!(fine.vertices[i * 5].dist(*v) < 1e-14);
        }
    }

    #[test]
    fn level_cap_enforced() {
        assert_eq!(
            prefractal_curve(&p(3, 1.0 / 3.0), 17),
            Err(Error::LevelTooHigh { level: 17, cap: 16 })
        );
    }

    #[test]
    fn snowflake_closure_area_and_counts() {
        let k = p(3, 1.0 / 3.0);
        let s0 = snowflake(&k, 0).unwrap();
        assert!((s0.area() - 3f64.sqrt() / 4.0).abs() < 1e-15);
        let s1 = snowflake(&p(4, 0.25), 1).unwrap();
        assert_eq!(s1.segment_count(), 20);
        for (n, r) in [(3, 1.0 / 3.0), (4, 0.25), (5, 0.2), (6, 0.1)] {
            let k = p(n, r);
            for m in 0..=4 {
                let s = snowflake(&k, m).unwrap();
                assert_eq!(s.vertices[0], *s.vertices.last().unwrap());
                assert!(s.signed_area() < 0.0, "clockwise orientation");
                assert!((s.area() - snowflake_area(&k, Some(m))).abs() < 1e-12);
            }
        }
        assert!((snowflake_area(&k, None) - 2.0 * 3f64.sqrt() / 5.0).abs() < 1e-15);
    }

    #[test]
    fn bulges_point_outward() {
        let k = p(3, 1.0 / 3.0);
        let s1 = snowflake(&k, 1).unwrap();
        // the bump apex of the first edge lies above the x-axis, outside the triangle
        assert!(s1.vertices[2].y > 0.28);
        assert!(!crate::geometry::point_in_polygon(Vec2::new(0.5, 0.2), &snowflake(&k, 0).unwrap()));
        assert!(crate::geometry::point_in_polygon(Vec2::new(0.5, 0.2), &s1));
    }

    #[test]
    fn self_avoidance_thresholds() {
        // the pentaflake (5, 1/5) is not covered by the sufficient criterion
        assert!(!is_self_avoiding(&p(5, 0.2)).passes);
        let a = is_self_avoiding(&p(3, 1.0 / 3.0));
        assert!(a.passes);
        assert!((a.threshold - 0.5).abs() < 1e-15);
        assert!(!is_self_avoiding(&p(6, 0.3)).passes);
        let b = is_self_avoiding(&p(6, 0.1));
        assert!(b.passes);
        assert!((b.threshold - 1.0 / 7.0).abs() < 1e-15);
    }

    fn brute_simple(poly: &Polygon) -> bool {
        let segs: Vec<_> = poly.segments().collect();
        let m = segs.len();
        for i in 0..m {
            for j in (i + 2)..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                if segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn self_avoiding_snowflakes_are_simple() {
        for (n, r, max_level) in [(3, 1.0 / 3.0, 5), (4, 0.25, 4), (5, 0.15, 4), (6, 0.1, 3), (3, 0.45, 4)] {
            let k = p(n, r);
            assert!(is_self_avoiding(&k).passes);
            for m in 0..=max_level {
                assert!(brute_simple(&snowflake(&k, m).unwrap()), "({n},{r}) level {m}");
            }
        }
    }

    #[test]
    fn large_ratio_hexaflake_intersects() {
        let k = p(6, 0.3);
        assert!(!brute_simple(&snowflake(&k, 2).unwrap()));
    }

    #[test]
    fn sector_region_area() {
        let k = p(3, 1.0 / 3.0);
        let u = sector_region(&k, 3).unwrap();
        let s = snowflake(&k, 3).unwrap();
        assert!((u.area() * 3.0 - s.area()).abs() < 1e-12);
    }
}
