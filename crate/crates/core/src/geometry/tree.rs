//! Nearest-point queries against a prefractal without materializing it.
//!
//! The level-m prefractal is the union of the leaf segments `φ_w([0,1]×{0})`
//! over all words `w` of length m. Each subtree `φ_w(K)` lies inside
//! `φ_w(B)` for a box `B` with `φ_i(B) ⊂ B`, which gives a lower bound for
//! branch-and-bound. Queries run in the local frame of each node.

use super::polygon::BBox;
use super::{koch_ifs, Affine, KochParams, Similitude, Vec2};

/// Nearest boundary point summary: distance and side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub dist: f64,
    /// True when the query point lies on the interior (right-hand) side.
    pub inside: bool,
}

#[derive(Debug, Clone)]
pub struct CurveTree {
    /// World-to-local maps of the top-level curve copies.
    roots: Vec<Affine>,
    root_scale: f64,
    child_inv: Vec<Affine>,
    child_scale: Vec<f64>,
    bbox: BBox,
    level: u32,
    max_ratio: f64,
}

#[derive(Clone, Copy)]
struct Child {
    lb: f64,
    y: Vec2,
    s: f64,
}

struct Search {
    best: f64,
    line: f64,
    inside: bool,
    cap: f64,
    tol_abs: f64,
}

impl Search {
    #[inline]
    fn offer(&mut self, d: f64, line: f64, inside: bool) {
        let tol = self.tol_abs + 1e-12 * d;
        if d < self.best - tol {
            self.best = d;
            self.line = line;
            self.inside = inside;
        } else if d <= self.best + tol {
            // Equidistant candidates meet at a shared vertex; the one farther
            // from its own supporting line carries the correct side.
            if line > self.line {
                self.line = line;
                self.inside = inside;
            }
            self.best = self.best.min(d);
        }
    }

    #[inline]
    fn prune(&self, lb: f64) -> bool {
        lb >= self.cap || lb > self.best + self.tol_abs + 1e-12 * self.best
    }
}

/// Smallest axis box containing the unit segment and invariant under the maps.
fn invariant_box(maps: &[Similitude]) -> BBox {
    let mut b = BBox {
        min: Vec2::ZERO,
        max: Vec2::new(1.0, 0.0),
    };
    for _ in 0..2000 {
        let mut nb = BBox {
            min: Vec2::ZERO,
            max: Vec2::new(1.0, 0.0),
        };
        let corners = [
            b.min,
            Vec2::new(b.max.x, b.min.y),
            b.max,
            Vec2::new(b.min.x, b.max.y),
        ];
        for m in maps {
            for c in corners {
                nb.include(m.apply(c));
            }
        }
        let change = (nb.min - b.min).norm() + (nb.max - b.max).norm();
        b = nb;
        if change < 1e-16 {
            break;
        }
    }
    let pad = 1e-12;
    BBox {
        min: b.min - Vec2::new(pad, pad),
        max: b.max + Vec2::new(pad, pad),
    }
}

impl CurveTree {
    /// The level-`level` snowflake, placed in the world by `world`
    /// (orientation-preserving).
    pub fn snowflake(params: &KochParams, level: u32, world: &Similitude) -> Self {
        let placements: Vec<Similitude> = params
            .edge_maps()
            .iter()
            .map(|e| world.compose(e))
            .collect();
        Self::with_placements(params, level, &placements)
    }

    /// A single level-`level` curve placed by `world`.
    pub fn curve(params: &KochParams, level: u32, world: &Similitude) -> Self {
        Self::with_placements(params, level, std::slice::from_ref(world))
    }

    fn with_placements(params: &KochParams, level: u32, placements: &[Similitude]) -> Self {
        assert!(placements.iter().all(|p| !p.reflect), "placements must preserve orientation");
        let sys = koch_ifs(params);
        let order = sys.traversal_order();
        let maps: Vec<Similitude> = order.iter().map(|&i| sys.maps[i]).collect();
        let bbox = invariant_box(&maps);
        Self {
            roots: placements.iter().map(|p| p.inverse().affine()).collect(),
            root_scale: placements[0].scale,
            child_inv: maps.iter().map(|m| m.inverse().affine()).collect(),
            child_scale: maps.iter().map(|m| m.scale).collect(),
            bbox,
            level,
            max_ratio: params.max_ratio(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Upper bound on the Hausdorff distance between this prefractal and
    /// the attractor.
    pub fn hausdorff_bound(&self) -> f64 {
        self.root_scale * self.max_ratio.powi(self.level as i32) * self.bbox.diagonal()
    }

    /// Nearest distance and side, exact for the prefractal.
    pub fn nearest(&self, p: Vec2) -> Nearest {
        self.nearest_within(p, f64::INFINITY)
            .expect("unbounded search always finds a segment")
    }

    /// Like [`nearest`](Self::nearest) but only reports distances below `cap`.
    pub fn nearest_within(&self, p: Vec2, cap: f64) -> Option<Nearest> {
        let mut st = Search {
            best: f64::INFINITY,
            line: -1.0,
            inside: false,
            cap,
            tol_abs: 1e-15 * self.root_scale,
        };
        let mut scratch = Vec::with_capacity((self.level as usize + 1) * self.child_inv.len().max(self.roots.len()));
        for a in &self.roots {
            let y = a.apply(p);
            scratch.push(Child {
                lb: self.root_scale * self.bbox.distance(y),
                y,
                s: self.root_scale,
            });
        }
        let tops = scratch.len();
        scratch.sort_unstable_by(|a, b| a.lb.total_cmp(&b.lb));
        for i in 0..tops {
            let c = scratch[i];
            if st.prune(c.lb) {
                break;
            }
            self.visit(c.y, c.s, 0, &mut st, &mut scratch);
        }
        (st.best < cap).then_some(Nearest {
            dist: st.best,
            inside: st.inside,
        })
    }

    fn visit(&self, y: Vec2, s: f64, depth: u32, st: &mut Search, scratch: &mut Vec<Child>) {
        if depth == self.level {
            let t = y.x.clamp(0.0, 1.0);
            let d = s * (y.x - t).hypot(y.y);
            st.offer(d, s * y.y.abs(), y.y < 0.0);
            return;
        }
        let base = scratch.len();
        for (a, &k) in self.child_inv.iter().zip(&self.child_scale) {
            let yc = a.apply(y);
            let sc = s * k;
            scratch.push(Child {
                lb: sc * self.bbox.distance(yc),
                y: yc,
                s: sc,
            });
        }
        scratch[base..].sort_unstable_by(|a, b| a.lb.total_cmp(&b.lb));
        for i in base..base + self.child_inv.len() {
            let c = scratch[i];
            if st.prune(c.lb) {
                break;
            }
            self.visit(c.y, c.s, depth + 1, st, scratch);
        }
        scratch.truncate(base);
    }
}
