//! Grid quadrature of the eroded region `{x ∈ Ω : d(x) ≥ ε}`.
//!
//! Cell centers of a (rotated) uniform grid are classified through a
//! quadtree: a block whose center is at distance `d` from the boundary has
//! all its cell centers within `ρ` (half the diagonal of the center set), so
//! `d − ρ ≥ ε` or `d + ρ < ε` settles the whole block. Counts are integers,
//! which keeps the result independent of the evaluation order.

use rayon::prelude::*;

use super::{DistanceField, GridError, TubeSample};
use crate::error::Result;
use crate::geometry::{BBox, Vec2};

struct Grid<'a> {
    field: &'a dyn DistanceField,
    origin: Vec2,
    ex: Vec2,
    ey: Vec2,
    h: f64,
    nx: i64,
    ny: i64,
    eps: f64,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    eroded: u64,
    band: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            eroded: self.eroded + o.eroded,
            band: self.band + o.band,
        }
    }
}

impl Grid<'_> {
    fn point(&self, gx: f64, gy: f64) -> Vec2 {
        self.origin + self.ex * (gx * self.h) + self.ey * (gy * self.h)
    }

    /// Block of cells `[i0, i0+size) × [j0, j0+size)`; `side` is the known
    /// side of every center in the block, if any.
    fn block(&self, i0: i64, j0: i64, size: i64, side: Option<bool>) -> Counts {
        let nx = size.min(self.nx - i0);
        let ny = size.min(self.ny - j0);
        if nx <= 0 || ny <= 0 || side == Some(false) {
            return Counts::default();
        }
        let c = self.point(i0 as f64 + 0.5 * nx as f64, j0 as f64 + 0.5 * ny as f64);
        let rho = 0.5 * self.h * (((nx - 1) as f64).hypot((ny - 1) as f64));
        let half = 0.5 * self.h;
        let cap = self.eps + rho + half;
        let near = match self.field.nearest_within(c, cap) {
            Some(n) => n,
            None => match side {
                Some(inside) => crate::geometry::Nearest {
                    dist: f64::INFINITY,
                    inside,
                },
                None => self.field.nearest(c),
            },
        };
        let d = near.dist;
        let uniform = d > rho;
        let side = side.or(uniform.then_some(near.inside));
        if nx == 1 && ny == 1 {
            if !near.inside {
                return Counts::default();
            }
            return Counts {
                eroded: (d >= self.eps) as u64,
                band: ((d - self.eps).abs() <= half) as u64,
            };
        }
        if d + rho < self.eps - half {
            return Counts::default();
        }
        if uniform && d - rho >= self.eps + half {
            return if near.inside {
                Counts {
                    eroded: (nx * ny) as u64,
                    band: 0,
                }
            } else {
                Counts::default()
            };
        }
        let k = size / 2;
        self.block(i0, j0, k, side)
            + self.block(i0 + k, j0, k, side)
            + self.block(i0, j0 + k, k, side)
            + self.block(i0 + k, j0 + k, k, side)
    }

}

pub(super) fn grid_volume(
    field: &dyn DistanceField,
    bbox: &BBox,
    area: f64,
    eps: f64,
    h: f64,
    angle: f64,
    hausdorff: f64,
    model: GridError,
) -> Result<TubeSample> {
    let ex = Vec2::new(angle.cos(), angle.sin());
    let ey = Vec2::new(-ex.y, ex.x);
    let corners = [
        bbox.min,
        Vec2::new(bbox.max.x, bbox.min.y),
        bbox.max,
        Vec2::new(bbox.min.x, bbox.max.y),
    ];
    let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in corners {
        let (u, v) = (p.dot(ex), p.dot(ey));
        u0 = u0.min(u);
        u1 = u1.max(u);
        v0 = v0.min(v);
        v1 = v1.max(v);
    }
    let origin = ex * (u0 - h) + ey * (v0 - h);
    let nx = ((u1 - u0) / h).ceil() as i64 + 2;
    let ny = ((v1 - v0) / h).ceil() as i64 + 2;
    let grid = Grid {
        field,
        origin,
        ex,
        ey,
        h,
        nx,
        ny,
        eps,
    };
    // power-of-two tiles, at least a few hundred of them for load balance
    let mut tile = 1i64;
    while tile * 32 < nx.max(ny) {
        tile *= 2;
    }
    let tiles: Vec<(i64, i64)> = (0..(ny + tile - 1) / tile)
        .flat_map(|tj| (0..(nx + tile - 1) / tile).map(move |ti| (ti * tile, tj * tile)))
        .collect();
    let counts: Vec<Counts> = tiles
        .par_iter()
        .map(|&(i0, j0)| grid.block(i0, j0, tile, None))
        .collect();
    let total = counts.into_iter().fold(Counts::default(), |a, b| a + b);
    let cell = h * h;
    let raw = area - total.eroded as f64 * cell;
    let volume = raw.clamp(0.0, area);
    // band cells approximate a strip of width h along the level set d = ε
    let length = total.band as f64 * h;
    let grid_err = match model {
        GridError::Bound => total.band as f64 * cell,
        GridError::Statistical => 3.0 * cell * (total.band as f64).sqrt(),
    };
    let err = grid_err + hausdorff * length + (volume - raw).abs();
    Ok(TubeSample { eps, volume, err })
}
