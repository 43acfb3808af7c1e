use super::{BBox, Polygon, Polyline, Vec2};
use crate::io::fmt17;

fn svg_document(points: &[Vec2], closed: bool) -> String {
    let bb = BBox::of_points(points).unwrap_or(BBox {
        min: Vec2::ZERO,
        max: Vec2::new(1.0, 1.0),
    });
    let extent = bb.width().max(bb.height()).max(1e-300);
    let pad = 0.02 * extent;
    // y is flipped so that +y points up in the rendered image
    let (x0, y0) = (bb.min.x - pad, -bb.max.y - pad);
    let (w, h) = (bb.width() + 2.0 * pad, bb.height() + 2.0 * pad);
    let mut d = String::with_capacity(points.len() * 48);
    for (i, p) in points.iter().enumerate() {
        d.push(if i == 0 { 'M' } else { 'L' });
        d.push_str(&fmt17(p.x));
        d.push(' ');
        d.push_str(&fmt17(-p.y));
        d.push(' ');
    }
    if closed {
        d.push('Z');
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"1000\" height=\"{}\">\n\
         <path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\" stroke-linejoin=\"round\"/>\n</svg>\n",
        fmt17(x0),
        fmt17(y0),
        fmt17(w),
        fmt17(h),
        (1000.0 * h / w).round().max(1.0) as i64,
        d.trim_end(),
        fmt17(extent * 1e-3),
    )
}

/// SVG document containing one open `path` for the polyline.
pub fn polyline_svg(poly: &Polyline) -> String {
    svg_document(&poly.vertices, false)
}

/// SVG document containing one closed `path` for the polygon.
pub fn polygon_svg(poly: &Polygon) -> String {
    // the repeated closing vertex is expressed by `Z`
    svg_document(&poly.vertices[..poly.vertices.len() - 1], true)
}

/// CSV with header `x,y`, one vertex per row.
pub fn vertices_csv(vertices: &[Vec2]) -> String {
    let mut out = String::with_capacity(vertices.len() * 50 + 4);
    out.push_str("x,y\n");
    for p in vertices {
        out.push_str(&fmt17(p.x));
        out.push(',');
        out.push_str(&fmt17(p.y));
        out.push('\n');
    }
    out
}
