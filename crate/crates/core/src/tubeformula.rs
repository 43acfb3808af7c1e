//! Pointwise tube formula: `V^{[k]}(t) ≈ Σ_ω a_ω t^{2−ω+k} / (3−ω)_k`,
//! compared against measured antiderivative tables.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::moran::LatticeInfo;
use crate::tube::TubeTable;
use crate::zeta::ResidueTerm;

/// Conjugate pairs kept by default for lattice operators.
pub const DEFAULT_LATTICE_PAIRS: u32 = 7;

/// `(s)_k = s(s+1)…(s+k−1)`, `(s)_0 = 1`.
pub fn pochhammer(s: Complex64, k: u32) -> Complex64 {
    (0..k).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (s + j as f64))
}

/// `|Im ω|` cutoff covering `pairs` conjugate pairs of a lattice family.
pub fn lattice_truncation(info: &LatticeInfo, pairs: u32) -> Option<f64> {
    info.oscillatory_period.map(|p| (pairs as f64 + 0.5) * p)
}

fn check_conjugate_closed(terms: &[ResidueTerm]) -> Result<()> {
    for t in terms {
        let scale = 1.0 + t.omega.norm();
        let a_scale = t.a_omega.norm().max(1e-300);
        if t.omega.im.abs() <= 1e-12 * scale {
            if t.a_omega.im.abs() > 1e-8 * a_scale + 1e-300 {
                return Err(Error::NotConjugateClosed);
            }
            continue;
        }
        let partner = terms.iter().any(|u| {
            (u.omega - t.omega.conj()).norm() <= 1e-8 * scale
                && (u.a_omega - t.a_omega.conj()).norm() <= 1e-8 * a_scale + t.err + u.err
        });
        if !partner {
            return Err(Error::NotConjugateClosed);
        }
    }
    Ok(())
}

/// Reconstructed `V^{[k]}` on `t_grid` from the terms with `|Im ω| ≤ truncation_t`.
pub fn reconstruct_vk(terms: &[ResidueTerm], k: u32, t_grid: &[f64], truncation_t: f64) -> Result<Vec<(f64, f64)>> {
    if k < 2 {
        return Err(Error::InvalidParams(format!(
            "pointwise reconstruction needs k ≥ 2, got {k}"
        )));
    }
    let kept: Vec<ResidueTerm> = terms
        .iter()
        .filter(|t| t.omega.im.abs() <= truncation_t * (1.0 + 1e-12))
        .copied()
        .collect();
    check_conjugate_closed(&kept)?;
    let coeffs: Vec<(Complex64, Complex64)> = kept
        .iter()
        .map(|t| (t.a_omega / pochhammer(3.0 - t.omega, k), 2.0 - t.omega + k as f64))
        .collect();
    t_grid
        .par_iter()
        .map(|&t| {
            let lt = t.ln();
            let (mut sum, mut mag) = (Complex64::new(0.0, 0.0), 0.0);
            for &(c, e) in &coeffs {
                let v = c * (e * lt).exp();
                sum += v;
                mag += v.norm();
            }
            if sum.im.abs() > 1e-10 * mag.max(f64::MIN_POSITIVE) {
                return Err(Error::NotConjugateClosed);
            }
            Ok((t, sum.re))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportRow {
    pub t: f64,
    pub measured: f64,
    pub reconstructed: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub k: u32,
    pub truncation_t: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub max_rel_err: f64,
    pub l2_rel_err: f64,
    /// Exponent of `|discrepancy| ≈ c t^β`, fitted on the lower half of the range.
    pub beta: Option<f64>,
    #[serde(skip)]
    pub rows: Vec<ReportRow>,
}

impl ReconstructionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,measured,reconstructed,abs_err,rel_err\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(r.t),
                fmt17(r.measured),
                fmt17(r.reconstructed),
                fmt17(r.abs_err),
                fmt17(r.rel_err)
            )
            .unwrap();
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Compares a measured `V^{[k]}` table with a reconstruction evaluated on
/// the same grid, over the measured points in `[t_lo, t_hi]`.
pub fn compare(
    measured: &TubeTable,
    reconstructed: &[(f64, f64)],
    t_lo: f64,
    t_hi: f64,
    k: u32,
    truncation_t: f64,
) -> Result<ReconstructionReport> {
    let mut rows = Vec::new();
    for s in measured.samples.iter().filter(|s| s.eps >= t_lo && s.eps <= t_hi) {
        let rec = reconstructed
            .iter()
            .find(|r| (r.0 - s.eps).abs() <= 1e-12 * s.eps)
            .ok_or_else(|| Error::InvalidParams(format!("no reconstructed value at t = {}", s.eps)))?;
        let abs_err = (s.volume - rec.1).abs();
        rows.push(ReportRow {
            t: s.eps,
            measured: s.volume,
            reconstructed: rec.1,
            abs_err,
            rel_err: abs_err / s.volume.abs(),
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyRange(format!("no measured points in [{t_lo}, {t_hi}]")));
    }
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let num: f64 = rows.iter().map(|r| r.abs_err * r.abs_err).sum();
    let den: f64 = rows.iter().map(|r| r.measured * r.measured).sum();
    let mid = (t_lo * t_hi).sqrt();
    let lower: Vec<(f64, f64)> = rows.iter().filter(|r| r.t <= mid).map(|r| (r.t, r.abs_err)).collect();
    Ok(ReconstructionReport {
        k,
        truncation_t,
        t_lo,
        t_hi,
        max_rel_err,
        l2_rel_err: (num / den).sqrt(),
        beta: loglog_slope(&lower),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tube::{antiderivative, GridSpec};

    const D: f64 = 1.2618595071429148;

    fn term(omega: Complex64, a: Complex64) -> ResidueTerm {
        ResidueTerm {
            omega,
            a_omega: a,
            err: 0.0,
            inner_abs: 1.0,
            inner_err: 0.0,
            confirmed: true,
            truncation_t: 0.0,
            delta: 0.1,
        }
    }

    #[test]
    fn pochhammer_examples() {
        let s = Complex64::new(0.3, -2.0);
        assert_eq!(pochhammer(s, 0), Complex64::new(1.0, 0.0));
        assert_eq!(pochhammer(Complex64::new(1.0, 0.0), 2), Complex64::new(2.0, 0.0));
        assert!((pochhammer(Complex64::new(2.5, 0.0), 3).re - 39.375).abs() < 1e-13);
        for k in 1..6 {
            assert_eq!(pochhammer(s, k), pochhammer(s, k - 1) * (s + (k - 1) as f64));
        }
    }

    #[test]
    fn single_real_term_is_twice_integrated_monomial() {
        let grid = GridSpec::new(1e-4, 0.1, 20).unwrap().points();
        let rec = reconstruct_vk(&[term(Complex64::new(D, 0.0), Complex64::new(1.0, 0.0))], 2, &grid, 10.0).unwrap();
        for (t, v) in rec {
            let want = t.powf(4.0 - D) / ((3.0 - D) * (4.0 - D));
            assert!((v - want).abs() <= 1e-14 * want);
        }
        assert!(reconstruct_vk(&[], 2, &grid, 10.0).unwrap().iter().all(|r| r.1 == 0.0));
        assert!(reconstruct_vk(&[], 1, &grid, 10.0).is_err());
    }

    #[test]
    fn conjugate_pairs() {
        let p = 2.0 * std::f64::consts::PI / 3f64.ln();
        let w = Complex64::new(D, p);
        let a = Complex64::new(0.01, -0.02);
        let terms = [term(w, a), term(w.conj(), a.conj())];
        let t = 3e-3;
        let rec = reconstruct_vk(&terms, 2, &[t], 100.0).unwrap();
        let e = 4.0 - w;
        let want = 2.0 * (a * (e * t.ln()).exp() / ((3.0 - w) * (4.0 - w))).re;
        assert!((rec[0].1 - want).abs() <= 1e-14 * want.abs());
        assert!(matches!(reconstruct_vk(&terms[..1], 2, &[t], 100.0), Err(Error::NotConjugateClosed)));
        let bad = [term(w, a), term(w.conj(), a)];
        assert!(reconstruct_vk(&bad, 2, &[t], 100.0).is_err());
        // truncation drops the pair entirely
        assert_eq!(reconstruct_vk(&terms[..1], 2, &[t], 1.0).unwrap()[0].1, 0.0);
    }

    #[test]
    fn compare_identity_and_toy() {
        let pts = GridSpec::new(1e-5, 0.1, 60).unwrap().points();
        let v = TubeTable::from_fn(&pts, |t| t.powf(2.0 - D)).unwrap();
        let v2 = antiderivative(&v, 2, Some(D)).unwrap();
        let same: Vec<(f64, f64)> = v2.samples.iter().map(|s| (s.eps, s.volume)).collect();
        let r = compare(&v2, &same, 1e-3, 1e-2, 2, 0.0).unwrap();
        assert_eq!(r.max_rel_err, 0.0);
        assert_eq!(r.l2_rel_err, 0.0);
        let rec = reconstruct_vk(&[term(Complex64::new(D, 0.0), Complex64::new(1.0, 0.0))], 2, &pts, 1.0).unwrap();
        let r = compare(&v2, &rec, 1e-3, 1e-2, 2, 1.0).unwrap();
        assert!(r.max_rel_err < 1e-3, "{}", r.max_rel_err);
        assert!(r.rows.len() >= 10);
        assert!(r.to_csv().starts_with("t,measured,reconstructed,abs_err,rel_err\n"));
        assert!(r.summary_json().contains("\"l2_rel_err\""));
        assert!(matches!(compare(&v2, &rec, 0.5, 0.9, 2, 1.0), Err(Error::EmptyRange(_))));
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [1e-3f64, 2e-3, 5e-3].iter().map(|&t| (t, 3.0 * t.powf(2.5))).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }
}
