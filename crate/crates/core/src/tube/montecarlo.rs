use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DistanceField, TubeSample};
use crate::error::{Error, Result};
use crate::geometry::{BBox, Vec2};

const CHUNK: u64 = 4096;

/// Uniform points in `Ω` by rejection from the bounding box; `V` is the
/// area times the hit fraction. Each chunk of samples has its own stream so
/// the result does not depend on scheduling.
pub(super) fn mc_volume(
    field: &dyn DistanceField,
    bbox: &BBox,
    area: f64,
    eps: f64,
    samples: u64,
    seed: u64,
    hausdorff: f64,
) -> Result<TubeSample> {
    let chunks = samples.div_ceil(CHUNK);
    let attempts_cap = 1000 * CHUNK + 10_000;
    let hits: Vec<Result<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let want = CHUNK.min(samples - c * CHUNK);
            let (mut got, mut hit, mut tries) = (0u64, 0u64, 0u64);
            while got < want {
                tries += 1;
                if tries > attempts_cap {
                    return Err(Error::RejectionSampling(tries));
                }
                let p = Vec2::new(
                    rng.gen_range(bbox.min.x..bbox.max.x),
                    rng.gen_range(bbox.min.y..bbox.max.y),
                );
                let n = match field.nearest_within(p, eps) {
                    Some(n) => n,
                    None => field.nearest(p),
                };
                if !n.inside {
                    continue;
                }
                got += 1;
                hit += (n.dist < eps) as u64;
            }
            Ok(hit)
        })
        .collect();
    let mut total = 0u64;
    for h in hits {
        total += h?;
    }
    let p = total as f64 / samples as f64;
    let volume = area * p;
    // 3σ binomial band, floored at one sample's worth so p ∈ {0, 1} is not exact
    let sigma = (p * (1.0 - p) / samples as f64).sqrt().max(1.0 / samples as f64);
    let trunc = hausdorff * 2.0 * volume / eps;
    Ok(TubeSample {
        eps,
        volume,
        err: 3.0 * area * sigma + trunc,
    })
}
