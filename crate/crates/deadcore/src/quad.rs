//! Small quadrature helpers: adaptive Simpson on smooth integrands and a
//! dyadic panel scheme for integrands with a weak singularity at the left
//! endpoint.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature of `f` on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return left + right;
        }
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Integral of `f` over `(0, s]` for an `f` that may blow up (integrably) at 0.
///
/// Sums adaptive-Simpson panels over the dyadic intervals `[s/2^{k+1}, s/2^k]`
/// and stops once the panel contributions are geometrically negligible. If the
/// contributions fail to decay the integral is declared divergent.
pub fn dyadic_singular_integral(f: &dyn Fn(f64) -> f64, s: f64, tol: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut hi = s;
    let mut prev_panel = f64::INFINITY;
    let mut stagnant = 0usize;
    for _ in 0..200 {
        let lo = 0.5 * hi;
        if !f(0.5 * (lo + hi)).is_finite() {
            return Err(Error::NonIntegrableGrowth);
        }
        let panel = adaptive_simpson(f, lo, hi, tol * 1e-2);
        if !panel.is_finite() {
            return Err(Error::NonIntegrableGrowth);
        }
        total += panel;
        if panel.abs() <= tol {
            return Ok(total);
        }
        // A divergent 1/t-type integrand produces panels that do not shrink.
        if panel.abs() > 0.95 * prev_panel.abs() {
            stagnant += 1;
            if stagnant >= 8 {
                return Err(Error::NonIntegrableGrowth);
            }
        } else {
            stagnant = 0;
        }
        prev_panel = panel;
        hi = lo;
    }
    Err(Error::NonIntegrableGrowth)
}

/// Least-squares fit of `y = slope * x + intercept`; returns (slope, intercept, r^2).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_is_exact() {
        let v = adaptive_simpson(&|t| t * t * t, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dyadic_handles_inverse_sqrt() {
        // integral of 1/sqrt(t) over (0,1] = 2
        let v = dyadic_singular_integral(&|t| 1.0 / t.sqrt(), 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn dyadic_detects_divergence() {
        assert!(matches!(
            dyadic_singular_integral(&|t| 1.0 / t, 1.0, 1e-10),
            Err(Error::NonIntegrableGrowth)
        ));
    }

    #[test]
    fn fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, i, r2) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
