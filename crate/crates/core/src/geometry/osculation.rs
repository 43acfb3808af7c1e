use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    is_self_avoiding, koch_ifs, point_in_polygon, prefractal_curve, sector_region, KochParams,
    Polyline, SpatialIndex, Vec2,
};
use crate::error::{Error, Result};

/// Tolerance for `d(y, K) = d(y, φ_i(K))`.
pub const OSCULATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OsculationReport {
    pub level: u32,
    pub samples_per_map: usize,
    /// Largest `|d(y,K) - d(y,φ_i(K))|` seen for each map, in IFS order.
    pub max_violation_per_map: Vec<f64>,
    pub max_violation: f64,
    pub passes: bool,
}

/// Samples points in each image `φ_i(U)` of the sector region and checks
/// that the distance to the level-`level` curve is attained on the piece
/// `φ_i(K)`.
///
/// `U` is built at level `level - 1` so that `φ_i(U)` is bounded by pieces
/// of the level-`level` curve.
pub fn osculation_check(params: &KochParams, level: u32, samples: usize, seed: u64) -> Result<OsculationReport> {
    let avoid = is_self_avoiding(params);
    if !avoid.passes {
        return Err(Error::NotSelfAvoiding {
            r: params.r,
            threshold: avoid.threshold,
        });
    }
    let level = level.max(1);
    let sys = koch_ifs(params);
    let mut report = OsculationReport {
        level,
        samples_per_map: samples,
        max_violation_per_map: vec![0.0; sys.maps.len()],
        max_violation: 0.0,
        passes: true,
    };
    if samples == 0 {
        return Ok(report);
    }
    let curve = prefractal_curve(params, level)?;
    let index = SpatialIndex::from_polyline(&curve)?;
    let region = sector_region(params, level - 1)?;
    let block = (params.n as usize + 1).pow(level - 1);
    let order = sys.traversal_order();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, map) in sys.maps.iter().enumerate() {
        let pos = order.iter().position(|&j| j == i).unwrap();
        let piece = Polyline::new(curve.vertices[pos * block..=(pos + 1) * block].to_vec());
        let image = region.transformed(|p| map.apply(p));
        let bb = image.bbox();
        let cap = 1000 * samples as u64 + 10_000;
        let mut attempts = 0u64;
        let mut drawn = 0;
        while drawn < samples {
            attempts += 1;
            if attempts > cap {
                return Err(Error::RejectionSampling(cap));
            }
            let y = Vec2::new(rng.gen_range(bb.min.x..bb.max.x), rng.gen_range(bb.min.y..bb.max.y));
            if !point_in_polygon(y, &image) {
                continue;
            }
            drawn += 1;
            let v = (index.nearest(y).1 - piece.distance_brute(y)).abs();
            let slot = &mut report.max_violation_per_map[i];
            *slot = slot.max(v);
        }
    }
    report.max_violation = report.max_violation_per_map.iter().cloned().fold(0.0, f64::max);
    report.passes = report.max_violation <= OSCULATION_TOL;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_samples_pass_trivially() {
        let k = KochParams::new(3, 1.0 / 3.0).unwrap();
        let rep = osculation_check(&k, 4, 0, 1).unwrap();
        assert!(rep.passes);
        assert_eq!(rep.max_violation, 0.0);
    }

    #[test]
    fn rejects_non_avoiding() {
        let k = KochParams::new(6, 0.3).unwrap();
        assert!(matches!(osculation_check(&k, 3, 10, 1), Err(Error::NotSelfAvoiding { .. })));
    }

    #[test]
    fn single_point_near_left_piece() {
        let k = KochParams::new(3, 1.0 / 3.0).unwrap();
        let curve = prefractal_curve(&k, 4).unwrap();
        let y = Vec2::new(0.1, 0.01);
        // the point lies in φ_L(U): below the left third of the curve, above the radius
        let region = sector_region(&k, 3).unwrap();
        let sys = koch_ifs(&k);
        let image = region.transformed(|p| sys.maps[0].apply(p));
        assert!(!point_in_polygon(y, &image), "y sits outside the interior side");
        let y = Vec2::new(0.1, -0.01);
        assert!(point_in_polygon(y, &image));
        let left = Polyline::new(curve.vertices[..=64].to_vec());
        assert!((curve.distance_brute(y) - left.distance_brute(y)).abs() < 1e-15);
    }

    #[test]
    fn koch_curve_osculates() {
        let k = KochParams::new(3, 1.0 / 3.0).unwrap();
        let rep = osculation_check(&k, 5, 2000, 42).unwrap();
        assert!(rep.passes, "{rep:?}");
        let k = KochParams::new(5, 0.15).unwrap();
        let rep = osculation_check(&k, 3, 1000, 42).unwrap();
        assert!(rep.passes, "{rep:?}");
    }
}
