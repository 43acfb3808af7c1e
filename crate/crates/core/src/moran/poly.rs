use num_complex::Complex64;

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ck;
    }
    (p, dp)
}

/// `|p(z)| / Σ |c_k| |z|^k`, a scale-free residual.
pub(crate) fn relative_residual(c: &[f64], z: Complex64) -> f64 {
    let scale: f64 = c
        .iter()
        .enumerate()
        .map(|(k, ck)| ck.abs() * z.norm().powi(k as i32))
        .sum();
    horner(c, z).0.norm() / scale.max(f64::MIN_POSITIVE)
}

/// All roots of `Σ c_k z^k` (coefficients in increasing degree) by the
/// Aberth–Ehrlich iteration, followed by Newton polishing.
pub fn aberth_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let d = c.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    // zero roots from vanishing low coefficients
    let zeros = c.iter().take_while(|&&x| x == 0.0).count();
    let c = &c[zeros..];
    let d = d - zeros;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    if d == 0 {
        return out;
    }
    if d == 1 {
        out.push(Complex64::new(-c[0] / c[1], 0.0));
        return out;
    }
    let radius = (c[0] / c[d]).abs().powf(1.0 / d as f64);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4))
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let (p, dp) = horner(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let w = p / dp;
            let s: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = w / (Complex64::new(1.0, 0.0) - w * s);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / z[i].norm().max(1e-300));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(c, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let next = *zi - p / dp;
            if relative_residual(c, next) <= relative_residual(c, *zi) {
                *zi = next;
            } else {
                break;
            }
        }
        if zi.im.abs() <= 1e-14 * zi.norm() {
            zi.im = 0.0;
        }
    }
    out.extend(z);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_polynomials() {
        // 1 − 4z
        let r = aberth_roots(&[1.0, -4.0]);
        assert_eq!(r, vec![Complex64::new(0.25, 0.0)]);
        // z² + 1
        let mut r = aberth_roots(&[1.0, 0.0, 1.0]);
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        // (z−1)(z−2)(z−3) = z³ − 6z² + 11z − 6
        let mut r = aberth_roots(&[-6.0, 11.0, -6.0, 1.0]);
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn residuals_are_small() {
        // 1 − 2z^3 − 3z^5
        let c = [1.0, 0.0, 0.0, -2.0, 0.0, -3.0];
        let r = aberth_roots(&c);
        assert_eq!(r.len(), 5);
        for z in r {
            assert!(relative_residual(&c, z) <= 1e-12);
        }
    }
}
