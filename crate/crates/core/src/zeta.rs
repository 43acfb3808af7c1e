//! Truncated Mellin transforms of sampled tube functions and the tube zeta
//! function, evaluated directly (right of `D`) or through the functional
//! equation `ζ̃ = ζ_L · (E + ζ̃_R)`.
//!
//! Between table samples the integrand is the table's own interpolant
//! (piecewise power law, or piecewise linear where values are not positive),
//! and each panel is integrated in closed form. Below the first sample the
//! function is replaced by a fitted power law `c t^γ`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::KochParams;
use crate::io::fmt17;
use crate::moran::{residue_zeta_l, similarity_dimension, ComplexRoot, Moran};
use crate::quad::gauss_legendre;
use crate::sfe::{ResidualTable, ScalingOperator};
use crate::tube::{TubeSample, TubeTable};

/// Distance (estimated by `|f/f′|`) below which `s` counts as a pole.
pub const POLE_RADIUS: f64 = 1e-8;
const HEAD_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaConfig {
    pub delta: f64,
    /// Gauss–Legendre nodes per log-decade panel for [`mellin_fn`].
    pub quad_points: usize,
    /// Leading exponent `γ` of the tube function at 0 (`2 − D`).
    pub singular_exponent_hint: f64,
    /// The direct path needs `Re s > D + margin`.
    pub margin: f64,
}

impl ZetaConfig {
    pub fn new(delta: f64, dimension: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParams(format!("delta must be positive, got {delta}")));
        }
        Ok(Self {
            delta,
            quad_points: 32,
            singular_exponent_hint: 2.0 - dimension,
            margin: 0.05,
        })
    }

    /// `δ = 0.1 ×` inradius and `γ = 2 − D` for a snowflake.
    pub fn for_snowflake(params: &KochParams, op: &ScalingOperator) -> Self {
        Self::new(0.1 * params.inradius(), similarity_dimension(op)).unwrap()
    }

    pub fn dimension(&self) -> f64 {
        2.0 - self.singular_exponent_hint
    }

    fn validate(&self) -> Result<()> {
        if self.quad_points < 16 {
            return Err(Error::InvalidParams(format!("quad_points must be ≥ 16, got {}", self.quad_points)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZetaPath {
    Direct,
    Continued,
}

impl ZetaPath {
    pub fn as_str(self) -> &'static str {
        match self {
            ZetaPath::Direct => "direct",
            ZetaPath::Continued => "continued",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEval {
    pub s: Complex64,
    pub value: Complex64,
    pub path: ZetaPath,
    pub err: f64,
    pub delta: f64,
}

/// A value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub err: f64,
}

impl Estimate {
    const ZERO: Estimate = Estimate {
        value: Complex64::new(0.0, 0.0),
        err: 0.0,
    };

    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            err: self.err + o.err,
        }
    }

    fn scale(self, c: Complex64) -> Estimate {
        Estimate {
            value: self.value * c,
            err: self.err * c.norm(),
        }
    }
}

/// `(e^z − 1)/z`, accurate near 0.
fn phi(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        Complex64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `∫_a^b t^{z−1} dt`.
fn power_integral(a: f64, b: f64, z: Complex64) -> Complex64 {
    let l = (b / a).ln();
    Complex64::new(a, 0.0).powc(z) * l * phi(z * l)
}

/// `∫ t^{z−1} f(t) dt` over one interpolation panel, with error.
fn panel(a: &TubeSample, b: &TubeSample, z: Complex64) -> Estimate {
    let (ta, tb) = (a.eps, b.eps);
    let weight = power_integral(ta, tb, Complex64::new(z.re, 0.0)).re;
    let tm = (ta * tb).sqrt();
    let bb = (b.volume - a.volume) / (tb - ta);
    let linear_mid = a.volume + bb * (tm - ta);
    let (value, gap) = if a.volume > 0.0 && b.volume > 0.0 {
        let p = (b.volume / a.volume).ln() / (tb / ta).ln();
        let v = a.volume * ta.powf(-p) * power_integral(ta, tb, z + p);
        (v, (a.volume * (tm / ta).powf(p) - linear_mid).abs())
    } else {
        let aa = a.volume - bb * ta;
        (aa * power_integral(ta, tb, z) + bb * power_integral(ta, tb, z + 1.0), 0.0)
    };
    Estimate {
        value,
        err: weight * (a.err.max(b.err) + gap),
    }
}

/// Power law `c t^γ` fitted by least squares to the first samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadModel {
    pub c: f64,
    pub gamma: f64,
    /// Relative uncertainty: rms misfit and first-sample error.
    pub rel_err: f64,
}

pub fn fit_head(samples: &[TubeSample], gamma: f64) -> HeadModel {
    let pts = &samples[..samples.len().min(HEAD_SAMPLES)];
    let num: f64 = pts.iter().map(|s| s.volume * s.eps.powf(gamma)).sum();
    let den: f64 = pts.iter().map(|s| s.eps.powf(2.0 * gamma)).sum();
    let c = num / den;
    let mut rel = 0.0f64;
    for s in pts {
        let m = c * s.eps.powf(gamma);
        if m != 0.0 {
            rel = rel.max(((s.volume - m).abs() + s.err) / m.abs());
        } else if s.volume != 0.0 || s.err != 0.0 {
            rel = f64::INFINITY;
        }
    }
    HeadModel { c, gamma, rel_err: rel }
}

fn sample_at(samples: &[TubeSample], t: f64) -> Option<TubeSample> {
    let table = TubeTable {
        samples: samples.to_vec(),
        grid: None,
    };
    table.interpolate(t).map(|(v, e)| TubeSample { eps: t, volume: v, err: e })
}

fn range_error(samples: &[TubeSample], t: f64, ratio: f64) -> Error {
    Error::OutOfTableRange {
        ratio,
        arg: t,
        lo: samples[0].eps,
        hi: samples[samples.len() - 1].eps,
    }
}

/// `∫_α^β t^{s−1} f(t) dt` for a sampled `f`. With `alpha = 0` the part
/// below the first sample uses a power law `c t^γ` fitted to the first few
/// samples and integrated in closed form.
pub fn mellin_truncated(samples: &[TubeSample], s: Complex64, alpha: f64, beta: f64, gamma: f64) -> Result<Estimate> {
    if samples.is_empty() {
        return Err(Error::EmptyRange("empty sample table".into()));
    }
    if !(alpha >= 0.0 && alpha < beta) {
        return Err(Error::InvalidParams(format!("need 0 ≤ alpha < beta, got [{alpha}, {beta}]")));
    }
    let t0 = samples[0].eps;
    let mut total = Estimate::ZERO;
    let mut lo = alpha;
    if alpha < t0 * (1.0 - 1e-12) {
        if alpha > 0.0 {
            return Err(range_error(samples, alpha, 1.0));
        }
        let w = s + gamma;
        if w.re <= 0.0 {
            return Err(Error::Divergent {
                re: s.re,
                im: s.im,
                reason: format!("Re(s) + {gamma} ≤ 0 at the origin"),
            });
        }
        let head = fit_head(samples, gamma);
        let top = beta.min(t0);
        let v = head.c * Complex64::new(top, 0.0).powc(w) / w;
        total = Estimate {
            value: v,
            err: v.norm() * head.rel_err,
        };
        lo = t0;
        if beta <= t0 {
            return Ok(total);
        }
    }
    let a = sample_at(samples, lo).ok_or_else(|| range_error(samples, lo, 1.0))?;
    let b = sample_at(samples, beta).ok_or_else(|| range_error(samples, beta, 1.0))?;
    let mut nodes = vec![a];
    nodes.extend(samples.iter().filter(|x| x.eps > a.eps && x.eps < b.eps).copied());
    nodes.push(b);
    for w in nodes.windows(2) {
        if w[1].eps > w[0].eps {
            total = total.add(panel(&w[0], &w[1], s));
        }
    }
    Ok(total)
}

/// `∫_α^β t^{s−1} f(t) dt` for an evaluable `f` with `0 < α`, by
/// Gauss–Legendre on log-decade panels, subdivided further in proportion to
/// the oscillation `|Im s|`.
pub fn mellin_fn(f: impl Fn(f64) -> f64, s: Complex64, alpha: f64, beta: f64, cfg: &ZetaConfig) -> Result<Complex64> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha < beta) {
        return Err(Error::InvalidParams(format!("need 0 < alpha < beta, got [{alpha}, {beta}]")));
    }
    let (x, w) = gauss_legendre(cfg.quad_points);
    let (la, lb) = (alpha.ln(), beta.ln());
    let decades = (lb - la) / std::f64::consts::LN_10;
    // a few oscillations per panel keep the rule at full accuracy
    let per_decade = 1.0f64.max((s.im.abs() * std::f64::consts::LN_10 / (cfg.quad_points as f64 / 4.0)).ceil());
    let panels = ((decades * per_decade).ceil() as usize).max(1);
    let h = (lb - la) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let a = la + p as f64 * h;
        for (&xi, &wi) in x.iter().zip(&w) {
            let u = a + 0.5 * h * (xi + 1.0);
            let t = u.exp();
            acc += (s * u).exp() * f(t) * (0.5 * h * wi);
        }
    }
    Ok(acc)
}

fn ambient(table_dim: u32) -> f64 {
    table_dim as f64
}

/// `ζ̃(s; δ) = ∫_0^δ t^{s−N−1} V(t) dt` by quadrature; requires `Re s > D + margin`.
pub fn tube_zeta_direct(table: &TubeTable, s: Complex64, cfg: &ZetaConfig) -> Result<ZetaEval> {
    tube_zeta_direct_n(table, s, cfg, 2)
}

fn tube_zeta_direct_n(table: &TubeTable, s: Complex64, cfg: &ZetaConfig, n: u32) -> Result<ZetaEval> {
    cfg.validate()?;
    let bound = cfg.dimension() + cfg.margin;
    if s.re <= bound {
        return Err(Error::DirectPathInvalid { re: s.re, bound });
    }
    let e = mellin_truncated(&table.samples, s - ambient(n), 0.0, cfg.delta, cfg.singular_exponent_hint)?;
    Ok(ZetaEval {
        s,
        value: e.value,
        path: ZetaPath::Direct,
        err: e.err,
        delta: cfg.delta,
    })
}

/// `∫_{δ₁}^{δ₂} t^{s−3} V(t) dt`; entire in `s`.
pub fn partial_tube_zeta(table: &TubeTable, s: Complex64, delta1: f64, delta2: f64) -> Result<Estimate> {
    if !(delta1 > 0.0 && delta1 < delta2) {
        return Err(Error::InvalidParams(format!("need 0 < δ₁ < δ₂, got [{delta1}, {delta2}]")));
    }
    mellin_truncated(&table.samples, s - 2.0, delta1, delta2, 0.0)
}

/// `E(s; δ) = Σ aᵢ λᵢ^s ∫_δ^{δ/λᵢ} t^{s−N−1} V(t) dt`.
pub fn entire_e(op: &ScalingOperator, table: &TubeTable, s: Complex64, cfg: &ZetaConfig) -> Result<Estimate> {
    let n = ambient(op.ambient_dim);
    let mut total = Estimate::ZERO;
    for &(a, lam) in &op.terms {
        let hi = cfg.delta / lam;
        if !table.contains(hi) || !table.contains(cfg.delta) {
            let arg = if table.contains(cfg.delta) { hi } else { cfg.delta };
            return Err(range_error(&table.samples, arg, lam));
        }
        let part = mellin_truncated(&table.samples, s - n, cfg.delta, hi, 0.0)?;
        total = total.add(part.scale(a as f64 * Complex64::new(lam, 0.0).powc(s)));
    }
    Ok(total)
}

/// `ζ̃_R(s; δ) = ∫_0^δ t^{s−N−1} R(t) dt` for the whole-drum residual,
/// extended below the table by `c t²`.
pub fn zeta_r(res: &ResidualTable, s: Complex64, cfg: &ZetaConfig) -> Result<Estimate> {
    if s.re <= 0.0 {
        return Err(Error::Divergent {
            re: s.re,
            im: s.im,
            reason: "the residual transform needs Re(s) > 0".into(),
        });
    }
    let samples = res.as_samples();
    if samples.iter().all(|x| x.volume == 0.0 && x.err == 0.0) {
        return Ok(Estimate::ZERO);
    }
    mellin_truncated(&samples, s - 2.0, 0.0, cfg.delta, 2.0)
}

fn pole_check(op: &ScalingOperator, s: Complex64) -> Result<Complex64> {
    let (f, df) = Moran::new(op).eval(s);
    if f.norm() <= POLE_RADIUS * df.norm() || f.norm() == 0.0 {
        return Err(Error::NearPole {
            re: s.re,
            im: s.im,
            magnitude: f.norm(),
        });
    }
    Ok(f.inv())
}

/// `ζ̃(s; δ) = ζ_L(s) (E(s; δ) + ζ̃_R(s; δ))`, valid for `Re s > 0` away
/// from the zeros of the Moran denominator (use [`residue_at`] there).
pub fn tube_zeta_continued(
    op: &ScalingOperator,
    table: &TubeTable,
    res: &ResidualTable,
    s: Complex64,
    cfg: &ZetaConfig,
) -> Result<ZetaEval> {
    cfg.validate()?;
    let zl = pole_check(op, s)?;
    let inner = entire_e(op, table, s, cfg)?.add(zeta_r(res, s, cfg)?);
    let e = inner.scale(zl);
    Ok(ZetaEval {
        s,
        value: e.value,
        path: ZetaPath::Continued,
        err: e.err,
        delta: cfg.delta,
    })
}

/// Direct path where valid, continued path otherwise.
pub fn tube_zeta(
    op: &ScalingOperator,
    table: &TubeTable,
    res: &ResidualTable,
    s: Complex64,
    cfg: &ZetaConfig,
) -> Result<ZetaEval> {
    if s.re > cfg.dimension() + cfg.margin {
        tube_zeta_direct_n(table, s, cfg, op.ambient_dim)
    } else {
        tube_zeta_continued(op, table, res, s, cfg)
    }
}

/// `a_ω = Res(ζ̃; ω)` at a simple complex dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueTerm {
    pub omega: Complex64,
    pub a_omega: Complex64,
    pub err: f64,
    /// `|E(ω) + ζ̃_R(ω)|` and its error.
    pub inner_abs: f64,
    pub inner_err: f64,
    /// Whether `|E + ζ̃_R|` exceeds three times its error.
    pub confirmed: bool,
    pub truncation_t: f64,
    pub delta: f64,
}

pub fn residue_at(
    op: &ScalingOperator,
    table: &TubeTable,
    res: &ResidualTable,
    root: &ComplexRoot,
    cfg: &ZetaConfig,
) -> Result<ResidueTerm> {
    cfg.validate()?;
    let omega = root.omega;
    if root.order != 1 {
        return Err(Error::NotSimple {
            re: omega.re,
            im: omega.im,
            derivative: 0.0,
        });
    }
    let rl = residue_zeta_l(op, omega)?;
    let inner = entire_e(op, table, omega, cfg)?.add(zeta_r(res, omega, cfg)?);
    let a = inner.scale(rl);
    Ok(ResidueTerm {
        omega,
        a_omega: a.value,
        err: a.err,
        inner_abs: inner.value.norm(),
        inner_err: inner.err,
        confirmed: inner.value.norm() > 3.0 * inner.err,
        truncation_t: 0.0,
        delta: cfg.delta,
    })
}

/// Residues at every simple root, evaluated concurrently; `truncation_t` is
/// set to the largest `|Im ω|` included.
pub fn residues(
    op: &ScalingOperator,
    table: &TubeTable,
    res: &ResidualTable,
    roots: &[ComplexRoot],
    cfg: &ZetaConfig,
) -> Result<Vec<ResidueTerm>> {
    let mut terms: Vec<ResidueTerm> = roots
        .par_iter()
        .map(|r| residue_at(op, table, res, r, cfg))
        .collect::<Result<_>>()?;
    let t = roots.iter().map(|r| r.omega.im.abs()).fold(0.0, f64::max);
    for term in &mut terms {
        term.truncation_t = t;
    }
    Ok(terms)
}

/// Numerical inverse Mellin transform
/// `(1/2π) ∫_{−T}^{T} x^{−(c+iτ)} F(c+iτ) dτ` by the trapezoid rule on
/// `points` nodes. Returns the real part and the magnitude of the
/// contribution from `|τ| ∈ [0.9T, T]` as a truncation indicator.
pub fn mellin_inverse_numeric(
    transform: impl Fn(Complex64) -> Complex64 + Sync,
    x: f64,
    c: f64,
    t_max: f64,
    points: usize,
) -> (f64, f64) {
    let points = points.max(3);
    let h = 2.0 * t_max / (points - 1) as f64;
    let lx = x.ln();
    let terms: Vec<(f64, Complex64)> = (0..points)
        .into_par_iter()
        .map(|i| {
            let tau = -t_max + i as f64 * h;
            let s = Complex64::new(c, tau);
            let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
            (tau, (-s * lx).exp() * transform(s) * (w * h))
        })
        .collect();
    let total: Complex64 = terms.iter().map(|t| t.1).sum();
    let tail: Complex64 = terms.iter().filter(|t| t.0.abs() >= 0.9 * t_max).map(|t| t.1).sum();
    let scale = 1.0 / (2.0 * std::f64::consts::PI);
    (total.re * scale, tail.norm() * scale)
}

/// Zeta values on a rectangular grid of `s`, row-major in `Im s`. Points
/// that cannot be evaluated (poles, divergence) are skipped.
pub fn zeta_grid(
    op: &ScalingOperator,
    table: &TubeTable,
    res: &ResidualTable,
    re: (f64, f64, usize),
    im: (f64, f64, usize),
    cfg: &ZetaConfig,
) -> Vec<ZetaEval> {
    let axis = |(a, b, n): (f64, f64, usize)| -> Vec<f64> {
        if n <= 1 {
            vec![a]
        } else {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let pts: Vec<Complex64> = axis(im)
        .into_iter()
        .flat_map(|y| axis(re).into_iter().map(move |x| Complex64::new(x, y)))
        .collect();
    pts.par_iter()
        .filter_map(|&s| tube_zeta(op, table, res, s, cfg).ok())
        .collect()
}

pub fn zeta_grid_csv(evals: &[ZetaEval]) -> String {
    let mut out = String::from("re,im,val_re,val_im,path,err\n");
    for e in evals {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt17(e.s.re),
            fmt17(e.s.im),
            fmt17(e.value.re),
            fmt17(e.value.im),
            e.path.as_str(),
            fmt17(e.err)
        )
        .unwrap();
    }
    out
}
