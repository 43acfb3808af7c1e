use super::Vec2;
use crate::error::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Vec2,
    pub max: Vec2,
}

impl BBox {
    pub fn of_points<'a>(pts: impl IntoIterator<Item = &'a Vec2>) -> Option<BBox> {
        let mut it = pts.into_iter();
        let first = *it.next()?;
        let mut b = BBox {
            min: first,
            max: first,
        };
        for p in it {
            b.include(*p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Vec2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Euclidean distance from `p` to the box (zero inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }
}

/// An open polygonal chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Vec2>,
}

impl Polyline {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        Self { vertices }
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn bbox(&self) -> Option<BBox> {
        BBox::of_points(&self.vertices)
    }
}

/// A closed polygon; the vertex list repeats the first vertex at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    /// Wraps an already-closed vertex list, checking closure within 1e-12.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::InvalidParams(
                "polygon needs at least three distinct vertices".into(),
            ));
        }
        let gap = vertices[0].dist(*vertices.last().unwrap());
        if gap > 1e-12 {
            return Err(Error::Closure { gap });
        }
        Ok(Self { vertices })
    }

    /// Closes an open vertex ring by repeating its first vertex.
    pub fn from_ring(mut ring: Vec<Vec2>) -> Result<Self> {
        if let Some(&first) = ring.first() {
            ring.push(first);
        }
        Self::new(ring)
    }

    pub fn regular(n: usize, side: f64) -> Result<Self> {
        let theta = std::f64::consts::TAU / n as f64;
        let mut ring = Vec::with_capacity(n);
        let mut p = Vec2::ZERO;
        for k in 0..n {
            ring.push(p);
            p = p + Vec2::new(side, 0.0).rotate(k as f64 * theta);
        }
        Self::from_ring(ring)
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Shoelace signed area; positive for counter-clockwise vertex order.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.segments().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.vertices).expect("polygon is nonempty")
    }

    pub fn centroid(&self) -> Vec2 {
        let a = self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.segments() {
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Vec2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Interior angles in radians, in vertex order.
    pub fn interior_angles(&self) -> Vec<f64> {
        let ring = &self.vertices[..self.vertices.len() - 1];
        let n = ring.len();
        let ccw = self.signed_area() > 0.0;
        (0..n)
            .map(|i| {
                let prev = ring[(i + n - 1) % n];
                let cur = ring[i];
                let next = ring[(i + 1) % n];
                let e1 = cur - prev;
                let e2 = next - cur;
                let turn = e1.cross(e2).atan2(e1.dot(e2));
                let turn = if ccw { turn } else { -turn };
                std::f64::consts::PI - turn
            })
            .collect()
    }

    pub fn is_convex(&self) -> bool {
        self.interior_angles().iter().all(|&a| a > 0.0 && a < std::f64::consts::PI + 1e-12)
    }

    /// Brute-force check that no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let segs: Vec<_> = self.segments().collect();
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

    pub fn transformed(&self, f: impl Fn(Vec2) -> Vec2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
        }
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
#[inline]
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Even-odd crossing test. Points within ~1e-12 of the boundary may be
/// reported either way.
pub fn point_in_polygon(p: Vec2, poly: &Polygon) -> bool {
    let mut inside = false;
    for (a, b) in poly.segments() {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Winding number of the closed polygon around `p`, by summed signed angles.
pub fn winding_number_point(p: Vec2, poly: &Polygon) -> i64 {
    let total: f64 = poly
        .segments()
        .map(|(a, b)| {
            let u = a - p;
            let v = b - p;
            u.cross(v).atan2(u.dot(v))
        })
        .sum();
    (total / std::f64::consts::TAU).round() as i64
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let scale = (p2 - p1).norm().max((q2 - q1).norm());
    let eps = 1e-13 * scale * scale;
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let sgn = |d: f64| if d > eps { 1 } else if d < -eps { -1 } else { 0 };
    let (s1, s2, s3, s4) = (sgn(d1), sgn(d2), sgn(d3), sgn(d4));
    if s1 * s2 < 0 && s3 * s4 < 0 {
        return true;
    }
    (s1 == 0 && on_segment(q1, q2, p1))
        || (s2 == 0 && on_segment(q1, q2, p2))
        || (s3 == 0 && on_segment(p1, p2, q1))
        || (s4 == 0 && on_segment(p1, p2, q2))
}
