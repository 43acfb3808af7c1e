//! Lattice (arithmetic) classification: every ratio an integer power of a
//! common base `x`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::poly::{aberth_roots, relative_residual};
use super::{residue_zeta_l, sort_roots, ComplexRoot, Moran, RootMethod, Window};
use crate::error::{Error, Result};
use crate::sfe::ScalingOperator;

/// Largest exponent `pᵢ` accepted for a lattice base.
pub const MAX_EXPONENT: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeInfo {
    pub is_lattice: bool,
    pub base: Option<f64>,
    /// `pᵢ` with `λᵢ = x^{pᵢ}`, parallel to the operator terms.
    pub exponents: Vec<u32>,
    pub oscillatory_period: Option<f64>,
    pub tolerance_used: f64,
    pub max_denominator: u64,
    /// "exact", "rational" (ratios recovered as fractions) or "log-ratio".
    pub route: String,
}

impl LatticeInfo {
    fn non_lattice(tol: f64, max_den: u64, route: &str) -> Self {
        Self {
            is_lattice: false,
            base: None,
            exponents: Vec::new(),
            oscillatory_period: None,
            tolerance_used: tol,
            max_denominator: max_den,
            route: route.into(),
        }
    }

    fn lattice(base: f64, exponents: Vec<u32>, tol: f64, max_den: u64, route: &str) -> Self {
        Self {
            is_lattice: true,
            base: Some(base),
            exponents,
            oscillatory_period: Some(2.0 * PI / (1.0 / base).ln()),
            tolerance_used: tol,
            max_denominator: max_den,
            route: route.into(),
        }
    }
}

/// Continued-fraction convergents `p/q` of `x` with `q ≤ max_den`.
fn convergents(x: f64, max_den: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > max_den as i128 {
            break;
        }
        out.push((p2 as i64, q2 as u64));
        let frac = y - a;
        if frac.abs() < 1e-300 {
            break;
        }
        y = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    out
}

/// The first convergent within `tol` of `x`.
fn rationalize(x: f64, tol: f64, max_den: u64) -> Option<(i64, u64)> {
    convergents(x, max_den)
        .into_iter()
        .find(|&(p, q)| (x - p as f64 / q as f64).abs() <= tol)
}

fn factor(mut n: u64, into: &mut BTreeMap<u64, i64>, sign: i64) {
    let mut p = 2u64;
    while p * p <= n && p <= 1_000_000 {
        while n % p == 0 {
            *into.entry(p).or_default() += sign;
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        // a prime, or an unfactored cofactor treated as an atom
        *into.entry(n).or_default() += sign;
    }
}

/// Common-base search on exact fractions via prime exponent vectors.
fn exact_lattice(ratios: &[Ratio<i64>]) -> Option<(f64, Vec<u32>)> {
    let mut prims: Vec<BTreeMap<u64, i64>> = Vec::new();
    let mut mult: Vec<i64> = Vec::new();
    for q in ratios {
        let (num, den) = (*q.numer(), *q.denom());
        if num <= 0 || den <= 0 {
            return None;
        }
        let mut v = BTreeMap::new();
        factor(num as u64, &mut v, 1);
        factor(den as u64, &mut v, -1);
        v.retain(|_, e| *e != 0);
        let g = v.values().fold(0i64, |g, &e| g.gcd(&e));
        if g == 0 {
            return None;
        }
        // orient so the primitive vector describes a base below one
        let log: f64 = v.iter().map(|(&p, &e)| e as f64 * (p as f64).ln()).sum();
        let g = if log < 0.0 { g } else { -g };
        v.values_mut().for_each(|e| *e /= g);
        prims.push(v);
        mult.push(g.abs());
    }
    if prims.windows(2).any(|w| w[0] != w[1]) {
        return None;
    }
    let gg = mult.iter().fold(0i64, |g, &m| g.gcd(&m));
    let exps: Vec<u64> = mult.iter().map(|&m| (m / gg) as u64).collect();
    if exps.iter().any(|&e| e > MAX_EXPONENT) {
        return None;
    }
    let ln_base: f64 = prims[0]
        .iter()
        .map(|(&p, &e)| e as f64 * (p as f64).ln())
        .sum::<f64>()
        * gg as f64;
    Some((ln_base.exp(), exps.into_iter().map(|e| e as u32).collect()))
}

/// Common base from rational approximations of `ln λᵢ / ln λ₁` with small
/// denominators.
fn log_ratio_lattice(ratios: &[f64], tol: f64) -> Option<(f64, Vec<u32>)> {
    let l1 = ratios[0].ln();
    let mut fracs = Vec::new();
    for &l in ratios {
        let rho = l.ln() / l1;
        let (p, q) = rationalize(rho, tol * rho.abs().max(1.0), MAX_EXPONENT)?;
        if p <= 0 {
            return None;
        }
        fracs.push((p as u64, q));
    }
    let big_q = fracs.iter().fold(1u64, |acc, &(_, q)| acc.lcm(&q));
    let n: Vec<u64> = fracs.iter().map(|&(p, q)| p * (big_q / q)).collect();
    let g = n.iter().fold(0u64, |g, &x| g.gcd(&x));
    let exps: Vec<u64> = n.iter().map(|&x| x / g).collect();
    if exps.iter().any(|&e| e > MAX_EXPONENT) {
        return None;
    }
    let base = ratios[0].powf(1.0 / exps[0] as f64);
    Some((base, exps.into_iter().map(|e| e as u32).collect()))
}

fn verify(ratios: &[f64], base: f64, exps: &[u32], tol: f64) -> bool {
    ratios
        .iter()
        .zip(exps)
        .all(|(&l, &p)| (l - base.powi(p as i32)).abs() <= tol)
}

/// Classifies `op` as lattice or non-lattice.
///
/// Exact ratios (from rational input) are decided by prime factorization.
/// Floating ratios are first recovered as fractions with denominator at
/// most `max_denominator` (within `tolerance`) and decided exactly; failing
/// that, the log-ratios are tested against fractions with denominator at
/// most 64. A negative verdict means "non-lattice within these bounds".
pub fn lattice_classify(op: &ScalingOperator, tolerance: f64, max_denominator: u64) -> LatticeInfo {
    let ratios: Vec<f64> = op.ratios().collect();
    if let Some(exact) = &op.exact {
        return match exact_lattice(exact) {
            Some((b, e)) => LatticeInfo::lattice(b, e, 0.0, max_denominator, "exact"),
            None => LatticeInfo::non_lattice(0.0, max_denominator, "exact"),
        };
    }
    let recovered: Option<Vec<Ratio<i64>>> = ratios
        .iter()
        .map(|&l| rationalize(l, tolerance, max_denominator).map(|(p, q)| Ratio::new(p, q as i64)))
        .collect();
    if let Some(fracs) = recovered {
        if let Some((b, e)) = exact_lattice(&fracs) {
            if verify(&ratios, b, &e, tolerance) {
                return LatticeInfo::lattice(b, e, tolerance, max_denominator, "rational");
            }
        }
    }
    if let Some((b, e)) = log_ratio_lattice(&ratios, tolerance) {
        if verify(&ratios, b, &e, tolerance) {
            return LatticeInfo::lattice(b, e, tolerance, max_denominator, "log-ratio");
        }
    }
    LatticeInfo::non_lattice(tolerance, max_denominator, "log-ratio")
}

/// Roots of a lattice operator in `window` via `z = x^s`: every root `z₀`
/// of `1 − Σ aᵢ z^{pᵢ}` gives the vertical line of poles
/// `(ln z₀ + 2πik)/ln x`.
pub fn lattice_roots(op: &ScalingOperator, info: &LatticeInfo, window: &Window) -> Result<Vec<ComplexRoot>> {
    let base = match (info.is_lattice, info.base) {
        (true, Some(b)) if info.exponents.len() == op.terms.len() => b,
        _ => return Err(Error::NotLattice),
    };
    let deg = *info.exponents.iter().max().unwrap() as usize;
    let mut c = vec![0.0; deg + 1];
    c[0] = 1.0;
    for (&(a, _), &p) in op.terms.iter().zip(&info.exponents) {
        c[p as usize] -= a as f64;
    }
    let zs = aberth_roots(&c);
    let ln_x = base.ln();
    let period = 2.0 * PI / -ln_x;
    let moran = Moran::new(op);
    let mut out = Vec::new();
    for (i, &z) in zs.iter().enumerate() {
        debug_assert!(relative_residual(&c, z) <= 1e-10);
        let order = zs
            .iter()
            .filter(|&&w| (w - z).norm() <= 1e-6 * z.norm().max(1.0))
            .count() as u32;
        // emit each cluster of a multiple root once
        if zs[..i].iter().any(|&w| (w - z).norm() <= 1e-6 * z.norm().max(1.0)) {
            continue;
        }
        let re = z.norm().ln() / ln_x;
        if re < window.re_min || re > window.re_max {
            continue;
        }
        let im0 = z.arg() / ln_x;
        let k_lo = ((window.im_min - im0) / period).ceil() as i64;
        let k_hi = ((window.im_max - im0) / period).floor() as i64;
        for k in k_lo..=k_hi {
            let mut omega = Complex64::new(re, im0 + k as f64 * period);
            if order == 1 && moran.f(omega).norm() > 1e-10 {
                if let Some(w) = moran.newton(omega, 20) {
                    omega = w;
                }
            }
            let residue = if order == 1 { residue_zeta_l(op, omega).ok() } else { None };
            out.push(ComplexRoot {
                omega,
                order,
                residue_zeta_l: residue,
                method: RootMethod::LatticeClosedForm,
            });
        }
    }
    sort_roots(&mut out);
    Ok(out)
}
