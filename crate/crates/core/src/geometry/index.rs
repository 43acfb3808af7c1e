use super::polygon::{point_segment_distance, BBox};
use super::{Polygon, Polyline, Vec2};
use crate::error::{Error, Result};

/// Uniform grid bucketing of segments for nearest-segment queries.
///
/// Every segment is listed in every cell its bounding box overlaps.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    segments: Vec<(Vec2, Vec2)>,
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl SpatialIndex {
    pub fn from_polyline(poly: &Polyline) -> Result<Self> {
        Self::build(poly.segments().collect(), None)
    }

    pub fn from_polygon(poly: &Polygon) -> Result<Self> {
        Self::build(poly.segments().collect(), None)
    }

    /// Builds an index with an explicit cell size (or a heuristic one).
    pub fn build(segments: Vec<(Vec2, Vec2)>, cell: Option<f64>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyPolyline);
        }
        let bbox = BBox::of_points(segments.iter().flat_map(|(a, b)| [a, b])).unwrap();
        let extent = bbox.width().max(bbox.height()).max(1e-300);
        let cell = cell.unwrap_or_else(|| {
            let mean_len: f64 =
                segments.iter().map(|(a, b)| a.dist(*b)).sum::<f64>() / segments.len() as f64;
            // about one segment per cell along the curve, but at most 2048 cells per side
            mean_len.max(extent / 2048.0)
        });
        let nx = ((bbox.width() / cell).floor() as usize + 1).max(1);
        let ny = ((bbox.height() / cell).floor() as usize + 1).max(1);
        let origin = bbox.min;

        let cell_range = |a: Vec2, b: Vec2| {
            let cx = |x: f64| (((x - origin.x) / cell).floor().max(0.0) as usize).min(nx - 1);
            let cy = |y: f64| (((y - origin.y) / cell).floor().max(0.0) as usize).min(ny - 1);
            (cx(a.x.min(b.x)), cx(a.x.max(b.x)), cy(a.y.min(b.y)), cy(a.y.max(b.y)))
        };

        let mut counts = vec![0u32; nx * ny + 1];
        for &(a, b) in &segments {
            let (x0, x1, y0, y1) = cell_range(a, b);
            for j in y0..=y1 {
                for i in x0..=x1 {
                    counts[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; *offsets.last().unwrap() as usize];
        for (s, &(a, b)) in segments.iter().enumerate() {
            let (x0, x1, y0, y1) = cell_range(a, b);
            for j in y0..=y1 {
                for i in x0..=x1 {
                    let c = j * nx + i;
                    items[fill[c] as usize] = s as u32;
                    fill[c] += 1;
                }
            }
        }
        Ok(Self {
            segments,
            origin,
            cell,
            nx,
            ny,
            offsets,
            items,
        })
    }

    pub fn segments(&self) -> &[(Vec2, Vec2)] {
        &self.segments
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn bucket(&self, i: usize, j: usize) -> &[u32] {
        let c = j * self.nx + i;
        &self.items[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }

    /// Index of a nearest segment and its distance. Uses the same
    /// point-to-segment arithmetic as a brute-force scan.
    pub fn nearest(&self, p: Vec2) -> (usize, f64) {
        let ci = (((p.x - self.origin.x) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let cj = (((p.y - self.origin.y) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        let mut best = (usize::MAX, f64::INFINITY);
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            let i0 = ci as isize - ring as isize;
            let i1 = ci as isize + ring as isize;
            let j0 = cj as isize - ring as isize;
            let j1 = cj as isize + ring as isize;
            for j in j0..=j1 {
                if j < 0 || j >= self.ny as isize {
                    continue;
                }
                let on_edge_row = j == j0 || j == j1;
                let mut i = i0;
                while i <= i1 {
                    if i >= 0 && i < self.nx as isize {
                        for &s in self.bucket(i as usize, j as usize) {
                            let (a, b) = self.segments[s as usize];
                            let d = point_segment_distance(p, a, b);
                            if d < best.1 || (d == best.1 && (s as usize) < best.0) {
                                best = (s as usize, d);
                            }
                        }
                    }
                    i += if on_edge_row || i == i1 { 1 } else { i1 - i0 };
                }
            }
            // every unvisited cell is at least `ring` cells away from the
            // (clamped) query cell
            if best.1 <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

/// Exact Euclidean distance from `p` to the polyline, via the index.
pub fn distance_to_polyline(p: Vec2, index: &SpatialIndex) -> f64 {
    index.nearest(p).1
}

impl Polyline {
    /// Distance using a prebuilt index over this polyline.
    pub fn distance_indexed(&self, p: Vec2, index: &SpatialIndex) -> Result<f64> {
        if self.segment_count() == 0 {
            return Err(Error::EmptyPolyline);
        }
        Ok(distance_to_polyline(p, index))
    }

    pub fn distance_brute(&self, p: Vec2) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}
