//! Quadrature rules shared by the contour and Mellin integrators.

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const GK15_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK15_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G7_W: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 7/15 panel of a function with `K` complex outputs.
/// Returns (Kronrod estimate, |Kronrod − Gauss|, Kronrod estimate of ∫|f|)
/// per component.
pub fn gk15<const K: usize>(
    f: &impl Fn(f64) -> [Complex64; K],
    a: f64,
    b: f64,
) -> ([Complex64; K], [f64; K], [f64; K]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kr = [Complex64::new(0.0, 0.0); K];
    let mut ga = [Complex64::new(0.0, 0.0); K];
    let mut l1 = [0.0; K];
    let fc = f(c);
    for k in 0..K {
        kr[k] = fc[k] * GK15_WK[7];
        ga[k] = fc[k] * G7_W[3];
        l1[k] = fc[k].norm() * GK15_WK[7];
    }
    for j in 0..7 {
        let dx = h * GK15_X[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kr[k] += s * GK15_WK[j];
            l1[k] += (f1[k].norm() + f2[k].norm()) * GK15_WK[j];
            if j % 2 == 1 {
                ga[k] += s * G7_W[j / 2];
            }
        }
    }
    let mut err = [0.0; K];
    for k in 0..K {
        kr[k] *= h;
        ga[k] *= h;
        err[k] = (kr[k] - ga[k]).norm();
        l1[k] *= h.abs();
    }
    (kr, err, l1)
}

/// Refinement budget of [`adaptive_gk`].
pub const MAX_PANELS: usize = 200_000;

/// Adaptive Gauss–Kronrod integration on [a, b]. Each component `k` is
/// refined until its local error is below `tol[k]` scaled by the panel's
/// share of the interval, or below the roundoff floor `1e-11 ∫|f|` of the
/// panel, or until `max_depth` bisections. At most `MAX_PANELS` panels are
/// refined in total.
pub fn adaptive_gk<const K: usize>(
    f: &impl Fn(f64) -> [Complex64; K],
    a: f64,
    b: f64,
    tol: [f64; K],
    max_depth: u32,
) -> [Complex64; K] {
    let mut total = [Complex64::new(0.0, 0.0); K];
    let len = b - a;
    let mut stack = vec![(a, b, 0u32)];
    let mut refined = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e, l1) = gk15(f, lo, hi);
        let share = (hi - lo) / len;
        // absolute share of the budget, or the panel's roundoff floor
        let ok = (0..K).all(|k| e[k] <= tol[k] * share || e[k] <= 1e-11 * l1[k]);
        if ok || depth >= max_depth || refined >= MAX_PANELS {
            for k in 0..K {
                total[k] += v[k];
            }
        } else {
            refined += 1;
            let mid = 0.5 * (lo + hi);
            // right half first so the left half is popped first (fixed order)
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(32);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫ x^62 over [-1,1] = 2/63, exact for 32 nodes
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(62)).sum();
        assert!((s - 2.0 / 63.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        assert!((s - 2.0 * 1f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn adaptive_gk_handles_peaks() {
        // ∫_0^1 1/((x-0.3)^2 + 1e-6) dx
        let e = 1e-3;
        let f = |x: f64| [Complex64::new(1.0 / ((x - 0.3).powi(2) + e * e), 0.0)];
        let exact = ((0.7f64 / e).atan() + (0.3f64 / e).atan()) / e;
        let got = adaptive_gk(&f, 0.0, 1.0, [1e-9], 60)[0].re;
        assert!((got - exact).abs() < 1e-7 * exact, "{got} vs {exact}");
    }
}
