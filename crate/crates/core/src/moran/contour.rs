//! Argument-principle root counting and recursive quadrisection.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{residue_zeta_l, sort_roots, ComplexRoot, Moran, RootMethod, Window};
use crate::error::{Error, Result};
use crate::quad::adaptive_gk;
use crate::sfe::ScalingOperator;

const BOUNDARY_GUARD: f64 = 1e-8;
const NUDGES: u32 = 3;
const MAX_DEPTH: u32 = 40;

/// `∮ f′/f ds` and `∮ s f′/f ds` along the segment `z0 → z1`.
fn edge_integrals(m: &Moran, z0: Complex64, z1: Complex64) -> [Complex64; 2] {
    let dz = z1 - z0;
    let f = |t: f64| {
        let s = z0 + dz * t;
        let (f, df) = m.eval(s);
        let g = df / f * dz;
        [g, g * s]
    };
    let scale = 1.0 + z0.norm().max(z1.norm());
    adaptive_gk(&f, 0.0, 1.0, [1e-10, 1e-10 * scale], 60)
}

fn contour_integrals(m: &Moran, w: &Window) -> [Complex64; 2] {
    let c = w.corners();
    let mut acc = [Complex64::new(0.0, 0.0); 2];
    for i in 0..4 {
        let e = edge_integrals(m, c[i], c[(i + 1) % 4]);
        acc[0] += e[0];
        acc[1] += e[1];
    }
    acc
}

fn count_from(integral: Complex64) -> Result<i64> {
    let value = integral.im / (2.0 * PI);
    let n = value.round();
    if (value - n).abs() > 0.25 || integral.re.abs() > 0.25 * 2.0 * PI {
        return Err(Error::NonIntegerWinding { value });
    }
    Ok(n as i64)
}

fn point_segment(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let t = (((z - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Whether some root lies within `guard` of the segment `a → b`. Samples
/// the segment and runs Newton from every sample whose Newton step is short
/// enough for a root to be close.
fn root_near_segment(m: &Moran, a: Complex64, b: Complex64, guard: f64) -> bool {
    let len = (b - a).norm();
    let spacing = (len / 8.0).min(0.05);
    let n = (len / spacing).ceil() as usize;
    for i in 0..=n {
        let z = a + (b - a) * (i as f64 / n as f64);
        let (f, df) = m.eval(z);
        if f.norm() == 0.0 {
            return true;
        }
        if (f / df).norm() > 2.0 * spacing + guard {
            continue;
        }
        if let Some(root) = m.newton(z, 60) {
            if point_segment(root, a, b) < guard {
                return true;
            }
        }
    }
    false
}

fn root_near_boundary(m: &Moran, w: &Window, guard: f64) -> bool {
    let c = w.corners();
    (0..4).any(|i| root_near_segment(m, c[i], c[(i + 1) % 4], guard))
}

/// Returns `window`, or a slightly enlarged copy, with no root within the
/// boundary guard.
fn settle_window(m: &Moran, window: &Window) -> Result<Window> {
    let size = window.width().max(window.height());
    let mut w = *window;
    for attempt in 0..=NUDGES {
        if !root_near_boundary(m, &w, BOUNDARY_GUARD) {
            return Ok(w);
        }
        if attempt == NUDGES {
            break;
        }
        let k = (attempt + 1) as f64 * 1e-4 * size.max(1.0);
        w = Window {
            re_min: window.re_min - 1.3 * k,
            re_max: window.re_max + 1.7 * k,
            im_min: window.im_min - 1.1 * k,
            im_max: window.im_max + 1.9 * k,
        };
    }
    Err(Error::BoundaryRoot { attempts: NUDGES })
}

/// Number of zeros of `1 − Σ aᵢ λᵢ^s` inside `window`, counted with
/// multiplicity. The window is enlarged by a relative 1e-4 (up to three
/// times) when a zero sits within 1e-8 of its boundary.
pub fn winding_number(op: &ScalingOperator, window: &Window) -> Result<i64> {
    let m = Moran::new(op);
    let w = settle_window(&m, window)?;
    count_from(contour_integrals(&m, &w)[0])
}

struct Solver<'a> {
    m: &'a Moran,
    op: &'a ScalingOperator,
    tol: f64,
}

impl Solver<'_> {
    fn split_position(&self, lo: f64, hi: f64, line: impl Fn(f64) -> (Complex64, Complex64)) -> f64 {
        let guard = (1e-4 * (hi - lo)).max(BOUNDARY_GUARD);
        for frac in [0.5, 0.5123, 0.4871, 0.5377, 0.4619, 0.5731, 0.4263] {
            let x = lo + frac * (hi - lo);
            let (a, b) = line(x);
            if !root_near_segment(self.m, a, b, guard) {
                return x;
            }
        }
        lo + 0.5 * (hi - lo)
    }

    fn solve(&self, w: Window, count: i64, moment: Complex64, depth: u32) -> Result<Vec<ComplexRoot>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if depth > MAX_DEPTH {
            return Err(Error::SubdivisionDepth(MAX_DEPTH));
        }
        let centroid = moment / (2.0 * PI * Complex64::i()) / count as f64;
        if count == 1 {
            return Ok(vec![self.simple_root(&w, centroid)]);
        }
        let size = w.width().max(w.height());
        if size <= 1e-7 * (1.0 + centroid.norm()) {
            return Ok(vec![ComplexRoot {
                omega: centroid,
                order: count as u32,
                residue_zeta_l: None,
                method: RootMethod::Newton,
            }]);
        }
        let xm = self.split_position(w.re_min, w.re_max, |x| {
            (Complex64::new(x, w.im_min), Complex64::new(x, w.im_max))
        });
        let ym = self.split_position(w.im_min, w.im_max, |y| {
            (Complex64::new(w.re_min, y), Complex64::new(w.re_max, y))
        });
        let kids = [
            Window { re_max: xm, im_max: ym, ..w },
            Window { re_min: xm, im_max: ym, ..w },
            Window { re_min: xm, im_min: ym, ..w },
            Window { re_max: xm, im_min: ym, ..w },
        ];
        let sub: Vec<(Window, i64, Complex64)> = kids
            .par_iter()
            .map(|k| {
                let [g, sg] = contour_integrals(self.m, k);
                count_from(g).map(|c| (*k, c, sg))
            })
            .collect::<Result<_>>()?;
        let total: i64 = sub.iter().map(|s| s.1).sum();
        if total != count {
            return Err(Error::NonIntegerWinding {
                value: total as f64,
            });
        }
        let parts: Vec<Vec<ComplexRoot>> = sub
            .into_par_iter()
            .map(|(k, c, sg)| self.solve(k, c, sg, depth + 1))
            .collect::<Result<_>>()?;
        Ok(parts.into_iter().flatten().collect())
    }

    fn simple_root(&self, w: &Window, centroid: Complex64) -> ComplexRoot {
        let mut omega = centroid;
        if let Some(z) = self.m.newton(centroid, 60) {
            let slack = 1e-6 * w.width().max(w.height());
            let inside = z.re >= w.re_min - slack
                && z.re <= w.re_max + slack
                && z.im >= w.im_min - slack
                && z.im <= w.im_max + slack;
            if inside {
                omega = z;
            }
        }
        if self.m.f(omega).norm() > self.tol {
            // Newton did not land in the box; polish the centroid gently
            let mut z = omega;
            for _ in 0..100 {
                let (f, df) = self.m.eval(z);
                if f.norm() <= self.tol {
                    break;
                }
                z -= f / df * 0.5;
            }
            omega = z;
        }
        ComplexRoot {
            omega,
            order: 1,
            residue_zeta_l: residue_zeta_l(self.op, omega).ok(),
            method: RootMethod::Newton,
        }
    }
}

/// All zeros of `1 − Σ aᵢ λᵢ^s` in `window` by recursive quadrisection on
/// winding numbers; single-zero boxes are located by the contour centroid
/// `(1/2πi)∮ s f′/f ds` and polished by Newton until `|f| ≤ tol`.
pub fn roots_in_window(op: &ScalingOperator, window: &Window, tol: f64) -> Result<Vec<ComplexRoot>> {
    let m = Moran::new(op);
    let w = settle_window(&m, window)?;
    let [g, sg] = contour_integrals(&m, &w);
    let count = count_from(g)?;
    let solver = Solver { m: &m, op, tol };
    let mut roots = solver.solve(w, count, sg, 0)?;
    sort_roots(&mut roots);
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moran::similarity_dimension;

    fn koch3() -> ScalingOperator {
        ScalingOperator::new(vec![(4, 1.0 / 3.0)]).unwrap()
    }

    #[test]
    fn winding_examples() {
        let op = koch3();
        assert_eq!(winding_number(&op, &Window::new(1.0, 1.5, -1.0, 1.0).unwrap()).unwrap(), 1);
        assert_eq!(winding_number(&op, &Window::new(1.3, 3.0, -10.0, 10.0).unwrap()).unwrap(), 0);
        assert_eq!(winding_number(&op, &Window::new(1.0, 1.5, -6.0, 6.0).unwrap()).unwrap(), 3);
    }

    #[test]
    fn lattice_roots_by_contour() {
        let op = koch3();
        let roots = roots_in_window(&op, &Window::new(0.5, 2.0, -20.0, 20.0).unwrap(), 1e-10).unwrap();
        assert_eq!(roots.len(), 7);
        let d = 4f64.ln() / 3f64.ln();
        let p = 2.0 * PI / 3f64.ln();
        for (k, r) in (-3..=3).zip(&roots) {
            assert!((r.omega - Complex64::new(d, k as f64 * p)).norm() < 1e-8, "{r:?}");
            assert_eq!(r.order, 1);
        }
    }

    #[test]
    fn non_lattice_count_matches_winding() {
        let op = ScalingOperator::new(vec![(2, 0.375), (3, 0.25)]).unwrap();
        let w = Window::new(0.0, 1.5, 0.0, 30.0).unwrap();
        let roots = roots_in_window(&op, &w, 1e-10).unwrap();
        let n = winding_number(&op, &w).unwrap();
        assert_eq!(roots.iter().map(|r| r.order as i64).sum::<i64>(), n);
        assert!(n > 0);
        let m = Moran::new(&op);
        let d = similarity_dimension(&op);
        for r in &roots {
            assert!(m.f(r.omega).norm() <= 1e-10);
            assert!(r.omega.re <= d + 1e-10);
        }
        let thin = roots_in_window(&op, &Window::new(0.0, 2.0, -0.1, 0.1).unwrap(), 1e-10).unwrap();
        assert_eq!(thin.len(), 1);
        assert!((thin[0].omega.re - d).abs() < 1e-12);
    }

    #[test]
    fn long_edge_near_roots_terminates() {
        // the left edge passes close to a zero; the edge integral must stop
        // at the roundoff floor instead of refining forever
        let op = ScalingOperator::new(vec![(2, 0.375), (3, 0.25)]).unwrap();
        let w = Window::new(0.15216686944775848, 0.47384164052496136, -21.442364295127536, 30.750083312880914).unwrap();
        let t = std::time::Instant::now();
        assert_eq!(winding_number(&op, &w).unwrap(), 2);
        assert_eq!(roots_in_window(&op, &w, 1e-10).unwrap().len(), 2);
        assert!(t.elapsed().as_secs_f64() < 5.0);
    }

    #[test]
    fn empty_right_of_d() {
        let op = ScalingOperator::new(vec![(2, 0.4), (4, 0.2)]).unwrap();
        let d = similarity_dimension(&op);
        let w = Window::new(d + 0.01, d + 2.0, -30.0, 30.0).unwrap();
        assert!(roots_in_window(&op, &w, 1e-10).unwrap().is_empty());
    }

    #[test]
    fn root_on_boundary_is_nudged() {
        // D sits exactly on the left edge
        let op = koch3();
        let d = 4f64.ln() / 3f64.ln();
        let w = Window::new(d, 2.0, -1.0, 1.0).unwrap();
        let n = winding_number(&op, &w).unwrap();
        assert_eq!(n, 1);
    }
}
