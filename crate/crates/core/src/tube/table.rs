use std::fmt::Write as _;

use super::{tube_volume, EstimatorConfig, RelativeFractalDrum};
use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSample {
    pub eps: f64,
    pub volume: f64,
    pub err: f64,
}

/// Logarithmically spaced `ε` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub eps_min: f64,
    pub eps_max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(eps_min: f64, eps_max: f64, count: usize) -> Result<Self> {
        if !(eps_min > 0.0) || eps_max < eps_min || count == 0 || (count > 1 && eps_max == eps_min) {
            return Err(Error::InvalidParams(format!(
                "bad grid {eps_min}:{eps_max}:{count} (need 0 < min < max, count ≥ 1)"
            )));
        }
        Ok(Self {
            eps_min,
            eps_max,
            count,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.eps_min];
        }
        let (a, b) = (self.eps_min.ln(), self.eps_max.ln());
        let m = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| match i {
                0 => self.eps_min,
                i if i == self.count - 1 => self.eps_max,
                i => (a + (b - a) * i as f64 / m).exp(),
            })
            .collect()
    }
}

/// Samples of a nonnegative function of `ε`, sorted by `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeTable {
    pub samples: Vec<TubeSample>,
    pub grid: Option<GridSpec>,
}

/// A pair `(i, i+1)` of samples whose decrease exceeds the error bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    pub index: usize,
    pub drop: f64,
    pub band: f64,
}

impl TubeTable {
    pub fn new(samples: Vec<TubeSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyRange("tube table has no samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].eps > w[0].eps)) {
            return Err(Error::InvalidParams("tube table eps must be strictly increasing".into()));
        }
        if samples.iter().any(|s| !(s.eps > 0.0) || !s.volume.is_finite() || !(s.err >= 0.0)) {
            return Err(Error::InvalidParams("tube table needs eps > 0, finite volumes, err ≥ 0".into()));
        }
        Ok(Self { samples, grid: None })
    }

    /// Builds a table from a function sampled on `points` (zero error).
    pub fn from_fn(points: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|&t| TubeSample {
                    eps: t,
                    volume: f(t),
                    err: 0.0,
                })
                .collect(),
        )
    }

    pub fn eps_min(&self) -> f64 {
        self.samples[0].eps
    }

    pub fn eps_max(&self) -> f64 {
        self.samples.last().unwrap().eps
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.eps_min() * (1.0 - 1e-12) && t <= self.eps_max() * (1.0 + 1e-12)
    }

    /// Panel index `i` with `eps_i ≤ t ≤ eps_{i+1}`.
    fn panel(&self, t: f64) -> usize {
        let n = self.samples.len();
        if n == 1 {
            return 0;
        }
        let i = self.samples.partition_point(|s| s.eps <= t);
        i.saturating_sub(1).min(n - 2)
    }

    /// Log-log linear interpolation inside the table. Returns the value and
    /// an error combining the sample errors with the gap between log-log
    /// and linear interpolation.
    pub fn interpolate(&self, t: f64) -> Option<(f64, f64)> {
        if !self.contains(t) {
            return None;
        }
        let t = t.clamp(self.eps_min(), self.eps_max());
        if self.samples.len() == 1 {
            let s = self.samples[0];
            return Some((s.volume, s.err));
        }
        let i = self.panel(t);
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        let w = (t - a.eps) / (b.eps - a.eps);
        let linear = a.volume + w * (b.volume - a.volume);
        let err = a.err + w * (b.err - a.err);
        if a.volume > 0.0 && b.volume > 0.0 {
            let p = (b.volume / a.volume).ln() / (b.eps / a.eps).ln();
            let v = a.volume * (t / a.eps).powf(p);
            Some((v, err + (v - linear).abs()))
        } else {
            Some((linear, err))
        }
    }

    /// Interpolated value, or an error naming the scale ratio that led to `t`.
    pub fn value_at(&self, t: f64, ratio: f64) -> Result<(f64, f64)> {
        self.interpolate(t).ok_or(Error::OutOfTableRange {
            ratio,
            arg: t,
            lo: self.eps_min(),
            hi: self.eps_max(),
        })
    }

    /// Neighbouring samples whose volumes decrease by more than their errors.
    pub fn monotonicity_violations(&self) -> Vec<MonotonicityViolation> {
        self.samples
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| {
                let drop = w[0].volume - w[1].volume;
                let band = w[0].err + w[1].err;
                (drop > band).then_some(MonotonicityViolation { index: i, drop, band })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,volume,err\n");
        for x in &self.samples {
            writeln!(s, "{},{},{}", fmt17(x.eps), fmt17(x.volume), fmt17(x.err)).unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty tube CSV".into()))?;
        if header.trim() != "eps,volume,err" {
            return Err(Error::Parse(format!("expected header eps,volume,err, got {header:?}")));
        }
        let mut samples = Vec::new();
        for (no, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("row {}: expected 3 fields", no + 2)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {s:?}: {e}", no + 2)))
            };
            samples.push(TubeSample {
                eps: num(f[0])?,
                volume: num(f[1])?,
                err: num(f[2])?,
            });
        }
        Self::new(samples)
    }
}

/// `V` at every point of the log grid. Violations of monotonicity are left
/// in place; see [`TubeTable::monotonicity_violations`].
pub fn tube_table(drum: &RelativeFractalDrum, grid: &GridSpec, cfg: &EstimatorConfig) -> Result<TubeTable> {
    let samples = grid
        .points()
        .into_iter()
        .map(|eps| tube_volume(drum, eps, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut t = TubeTable::new(samples)?;
    t.grid = Some(*grid);
    Ok(t)
}

/// Power law `C t^γ` fitted to the first samples; `γ = 2 − D` when `d` is given.
fn head_model(table: &TubeTable, d: Option<f64>) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = table
        .samples
        .iter()
        .take(8)
        .take_while(|s| s.volume > 0.0)
        .map(|s| (s.eps.ln(), s.volume.ln()))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let n = pts.len() as f64;
    let gamma = match d {
        Some(d) => 2.0 - d,
        None if pts.len() >= 2 => {
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        }
        None => return None,
    };
    let ln_c = pts.iter().map(|p| p.1 - gamma * p.0).sum::<f64>() / n;
    let rms = (pts.iter().map(|p| (p.1 - gamma * p.0 - ln_c).powi(2)).sum::<f64>() / n).sqrt();
    Some((ln_c.exp(), gamma, rms))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The `k`-th antiderivative `V^{[k]}(t) = ∫₀ᵗ (t−u)^{k−1}/(k−1)! V(u) du`,
/// with `V^{[l]}(0) = 0`. Between samples `V` is the log-log interpolant;
/// below the first sample it is extended by a fitted power law `C t^{2−D}`
/// (`d` supplies `D`; otherwise both parameters are fitted).
pub fn antiderivative(table: &TubeTable, k: i64, d: Option<f64>) -> Result<TubeTable> {
    if k < 0 {
        return Err(Error::InvalidParams(format!("antiderivative order must be ≥ 0, got {k}")));
    }
    if k == 0 {
        return Ok(table.clone());
    }
    let k = k as usize;
    let fact: f64 = (1..k).map(|i| i as f64).product();
    let head = head_model(table, d);
    let (gx, gw) = gauss_legendre(16);
    let s = &table.samples;
    let t0 = s[0].eps;

    // Quadrature nodes (u, weight·V(u), weight·err(u)) of each panel.
    let mut panels: Vec<Vec<(f64, f64, f64)>> = Vec::with_capacity(s.len().saturating_sub(1));
    for w in s.windows(2) {
        let (a, b) = (w[0].eps.ln(), w[1].eps.ln());
        let nodes = gx
            .iter()
            .zip(&gw)
            .map(|(&x, &wt)| {
                let u = (0.5 * (a + b) + 0.5 * (b - a) * x).exp();
                let (v, e) = table.interpolate(u).unwrap();
                let jac = 0.5 * (b - a) * wt * u;
                (u, jac * v, jac * e)
            })
            .collect();
        panels.push(nodes);
    }

    let mut out = Vec::with_capacity(s.len());
    for (j, sj) in s.iter().enumerate() {
        let t = sj.eps;
        let (mut val, mut err) = match head {
            Some((c, g, rms)) => {
                let h: f64 = (0..k)
                    .map(|m| {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        binomial(k - 1, m) * sign * t.powi((k - 1 - m) as i32) * t0.powf(g + m as f64 + 1.0)
                            / (g + m as f64 + 1.0)
                    })
                    .sum::<f64>()
                    * c;
                (h, h.abs() * rms.max(s[0].err / s[0].volume.max(f64::MIN_POSITIVE)))
            }
            None => (0.0, 0.0),
        };
        for p in &panels[..j] {
            for &(u, wv, we) in p {
                let kern = (t - u).powi(k as i32 - 1);
                val += kern * wv;
                err += kern * we;
            }
        }
        out.push(TubeSample {
            eps: t,
            volume: val / fact,
            err: err / fact,
        });
    }
    let mut t = TubeTable::new(out)?;
    t.grid = table.grid;
    Ok(t)
}
