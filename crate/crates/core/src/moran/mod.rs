//! The Moran equation `1 = Σ aᵢ λᵢ^s`: real and complex roots, the scaling
//! zeta function `ζ_L(s) = 1/(1 − Σ aᵢ λᵢ^s)`, lattice classification and
//! residues.

mod contour;
mod lattice;
mod poly;

pub use contour::{roots_in_window, winding_number};
pub use lattice::{lattice_classify, lattice_roots, LatticeInfo};
pub use poly::aberth_roots;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sfe::ScalingOperator;

/// Pole guard for direct evaluation of `ζ_L`.
pub const POLE_GUARD: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootMethod {
    Newton,
    LatticeClosedForm,
}

impl RootMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RootMethod::Newton => "newton",
            RootMethod::LatticeClosedForm => "lattice-closed-form",
        }
    }
}

/// A complex dimension of `L`, i.e. a zero of `1 − Σ aᵢ λᵢ^s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRoot {
    pub omega: Complex64,
    pub order: u32,
    /// `Res(ζ_L; ω)`; absent for multiple roots.
    pub residue_zeta_l: Option<Complex64>,
    pub method: RootMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let w = Self {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        let finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !finite || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidParams(format!("degenerate window {w:?}")));
        }
        Ok(w)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    /// Corners in counter-clockwise order starting bottom-left.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

/// `f(s) = 1 − Σ aᵢ λᵢ^s` with cached logarithms.
#[derive(Debug, Clone)]
pub(crate) struct Moran {
    a: Vec<f64>,
    ln: Vec<f64>,
}

impl Moran {
    pub fn new(op: &ScalingOperator) -> Self {
        Self {
            a: op.terms.iter().map(|&(a, _)| a as f64).collect(),
            ln: op.terms.iter().map(|&(_, l)| l.ln()).collect(),
        }
    }

    /// `(f(s), f′(s))` with `f′(s) = Σ aᵢ ln(1/λᵢ) λᵢ^s`.
    #[inline]
    pub fn eval(&self, s: Complex64) -> (Complex64, Complex64) {
        let mut f = Complex64::new(1.0, 0.0);
        let mut df = Complex64::new(0.0, 0.0);
        for (&a, &l) in self.a.iter().zip(&self.ln) {
            let p = (s * l).exp() * a;
            f -= p;
            df -= p * l;
        }
        (f, df)
    }

    pub fn f(&self, s: Complex64) -> Complex64 {
        self.eval(s).0
    }

    /// Real-axis `Σ aᵢ λᵢ^s` and its derivative.
    fn sum_real(&self, s: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for (&a, &l) in self.a.iter().zip(&self.ln) {
            let p = a * (s * l).exp();
            g += p;
            dg += p * l;
        }
        (g, dg)
    }

    /// Newton from `z`; returns the limit if the iteration settles.
    pub fn newton(&self, mut z: Complex64, max_iter: usize) -> Option<Complex64> {
        for _ in 0..max_iter {
            let (f, df) = self.eval(z);
            if df.norm() == 0.0 {
                return None;
            }
            let step = f / df;
            z -= step;
            if !z.is_finite() {
                return None;
            }
            if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                return Some(z);
            }
        }
        let (f, _) = self.eval(z);
        (f.norm() < 1e-12).then_some(z)
    }
}

/// The unique real root `D` of `Σ aᵢ λᵢ^D = 1`.
pub fn similarity_dimension(op: &ScalingOperator) -> f64 {
    let m = Moran::new(op);
    let g = |s: f64| m.sum_real(s).0 - 1.0;
    let (mut lo, mut hi) = (-64.0, 64.0);
    // Σ aᵢ λᵢ^s is strictly decreasing; widen only for extreme operators.
    while g(lo) < 0.0 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut d = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (v, dv) = m.sum_real(d);
        let next = d - (v - 1.0) / dv;
        if !(next >= lo && next <= hi) {
            break;
        }
        d = next;
    }
    d
}

/// `ζ_L(s) = 1/(1 − Σ aᵢ λᵢ^s)`.
pub fn zeta_l(op: &ScalingOperator, s: Complex64) -> Result<Complex64> {
    let f = Moran::new(op).f(s);
    if f.norm() <= POLE_GUARD {
        return Err(Error::NearPole {
            re: s.re,
            im: s.im,
            magnitude: f.norm(),
        });
    }
    Ok(f.inv())
}

/// `Res(ζ_L; ω) = 1/f′(ω)` at a simple zero `ω` of `f`.
pub fn residue_zeta_l(op: &ScalingOperator, omega: Complex64) -> Result<Complex64> {
    let (_, df) = Moran::new(op).eval(omega);
    if df.norm() < 1e-12 {
        return Err(Error::NotSimple {
            re: omega.re,
            im: omega.im,
            derivative: df.norm(),
        });
    }
    Ok(df.inv())
}

/// Complex dimensions in `window`: closed form for lattice operators,
/// contour subdivision otherwise.
pub fn complex_dimensions(
    op: &ScalingOperator,
    window: &Window,
    info: &LatticeInfo,
) -> Result<Vec<ComplexRoot>> {
    if info.is_lattice {
        lattice_roots(op, info, window)
    } else {
        roots_in_window(op, window, 1e-10)
    }
}

/// Sort by imaginary part, then real part.
pub(crate) fn sort_roots(roots: &mut [ComplexRoot]) {
    roots.sort_by(|a, b| {
        a.omega
            .im
            .total_cmp(&b.omega.im)
            .then(a.omega.re.total_cmp(&b.omega.re))
    });
}

#[derive(Serialize)]
struct RootJson {
    re: f64,
    im: f64,
    order: u32,
    residue_re: Option<f64>,
    residue_im: Option<f64>,
    method: RootMethod,
}

/// Roots as a JSON array value, sorted by Im then Re.
pub fn roots_to_json(roots: &[ComplexRoot]) -> serde_json::Value {
    let mut sorted = roots.to_vec();
    sort_roots(&mut sorted);
    let rows: Vec<RootJson> = sorted
        .iter()
        .map(|r| RootJson {
            re: r.omega.re,
            im: r.omega.im,
            order: r.order,
            residue_re: r.residue_zeta_l.map(|z| z.re),
            residue_im: r.residue_zeta_l.map(|z| z.im),
            method: r.method,
        })
        .collect();
    serde_json::to_value(rows).expect("roots serialize")
}

/// Parses the array written by [`roots_to_json`].
pub fn roots_from_json(v: &serde_json::Value) -> Result<Vec<ComplexRoot>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse("roots JSON must be an array".into()))?;
    let num = |o: &serde_json::Value, k: &str| -> Result<Option<f64>> {
        match o.get(k) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(x) => x
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::Parse(format!("field {k} is not a number"))),
        }
    };
    arr.iter()
        .map(|o| {
            let re = num(o, "re")?.ok_or_else(|| Error::Parse("missing re".into()))?;
            let im = num(o, "im")?.ok_or_else(|| Error::Parse("missing im".into()))?;
            let order = o
                .get("order")
                .and_then(|x| x.as_u64())
                .ok_or_else(|| Error::Parse("missing order".into()))? as u32;
            let residue = match (num(o, "residue_re")?, num(o, "residue_im")?) {
                (Some(a), Some(b)) => Some(Complex64::new(a, b)),
                _ => None,
            };
            let method = match o.get("method").and_then(|m| m.as_str()) {
                Some("lattice-closed-form") => RootMethod::LatticeClosedForm,
                Some("newton") => RootMethod::Newton,
                other => return Err(Error::Parse(format!("unknown root method {other:?}"))),
            };
            Ok(ComplexRoot {
                omega: Complex64::new(re, im),
                order,
                residue_zeta_l: residue,
                method,
            })
        })
        .collect()
}
