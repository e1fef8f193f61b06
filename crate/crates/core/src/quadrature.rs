//! Composite Simpson quadrature.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Composite Simpson rule over `[lo, hi]` with `n_panels` panels.
///
/// A panel is one parabola, i.e. two subintervals, so the integrand is read at
/// `2 n_panels + 1` abscissae. Exact through cubics.
pub fn nested_quadrature<F>(mut integrand: F, lo: f64, hi: f64, n_panels: usize) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    if n_panels == 0 {
        return Err(invalid("n_panels", "need at least one panel"));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(invalid("limits", "integration limits must be finite"));
    }
    let m = 2 * n_panels;
    let h = (hi - lo) / m as f64;
    let mut sample = |k: usize| -> Result<Complex64> {
        let x = if k == m { hi } else { lo + k as f64 * h };
        let v = integrand(x);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteSample { abscissa: x })
        }
    };
    let mut ends = sample(0)? + sample(m)?;
    let mut odd = Complex64::new(0.0, 0.0);
    let mut even = Complex64::new(0.0, 0.0);
    for k in 1..m {
        if k % 2 == 1 {
            odd += sample(k)?;
        } else {
            even += sample(k)?;
        }
    }
    ends += odd * 4.0 + even * 2.0;
    Ok(ends * (h / 3.0))
}

/// Running Simpson integral from `lo` across `n_panels` equal panels.
///
/// Each panel `[lo + kH, lo + (k+1)H]` is integrated with its own midpoint, so
/// the returned table holds the antiderivative at the `n_panels + 1` panel
/// edges. `integrand` is called at edges and midpoints.
pub fn cumulative_simpson<F>(mut integrand: F, lo: f64, width: f64, n_panels: usize) -> Result<Vec<Complex64>>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let mut table = Vec::with_capacity(n_panels + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    table.push(acc);
    let mut left = integrand(lo)?;
    for k in 0..n_panels {
        let a = lo + k as f64 * width;
        let mid = integrand(a + 0.5 * width)?;
        let right = integrand(a + width)?;
        acc += (left + mid * 4.0 + right) * (width / 6.0);
        table.push(acc);
        left = right;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn re(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn unit_integrand() {
        let v = nested_quadrature(|_| re(1.0), 0.0, 1.0, 1).unwrap();
        assert!((v.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_through_cubics() {
        let v = nested_quadrature(|x| re(x * x * x), 0.0, 1.0, 1).unwrap();
        assert!((v.re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sine_over_half_period() {
        let v = nested_quadrature(|x| re(x.sin()), 0.0, PI, 64).unwrap();
        assert!((v.re - 2.0).abs() < 1e-8, "{}", v.re - 2.0);
    }

    #[test]
    fn fourth_order_convergence() {
        let f = |x: f64| re((3.0 * x).cos() * x.exp());
        // antiderivative of e^x cos 3x: e^x (cos 3x + 3 sin 3x) / 10
        let exact = |x: f64| x.exp() * ((3.0 * x).cos() + 3.0 * (3.0 * x).sin()) / 10.0;
        let truth = exact(2.0) - exact(0.0);
        let e1 = (nested_quadrature(f, 0.0, 2.0, 16).unwrap().re - truth).abs();
        let e2 = (nested_quadrature(f, 0.0, 2.0, 32).unwrap().re - truth).abs();
        let ratio = e1 / e2;
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn reports_bad_abscissa() {
        let err = nested_quadrature(|x| re(1.0 / x), 0.0, 1.0, 4).unwrap_err();
        assert_eq!(err, Error::NonFiniteSample { abscissa: 0.0 });
    }

    #[test]
    fn cumulative_matches_direct() {
        let table = cumulative_simpson(|x| Ok(re(x * x)), 0.0, 0.5, 4).unwrap();
        assert_eq!(table.len(), 5);
        assert!((table[4].re - 8.0 / 3.0).abs() < 1e-14);
        assert!((table[2].re - 1.0 / 3.0).abs() < 1e-14);
    }
}
