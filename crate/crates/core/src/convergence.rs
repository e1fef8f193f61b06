//! Observed convergence orders and log-log slopes.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// One refinement level: step, residual and the order observed against the
/// previous (coarser) level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub residual: f64,
    /// `None` on the first row and wherever both residuals sit at or below
    /// the round-off floor.
    pub order: Option<f64>,
}

/// Build the table for `levels = [(h, residual), ...]`, coarse to fine.
///
/// At least three levels are required.
pub fn convergence_table(levels: &[(f64, f64)], floor: f64) -> Result<Vec<ConvergenceRow>> {
    if levels.len() < 3 {
        return Err(invalid("levels", "a convergence table needs at least three levels"));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for (k, &(h, residual)) in levels.iter().enumerate() {
        if !(h > 0.0) || !residual.is_finite() || residual < 0.0 {
            return Err(invalid("levels", "steps must be positive and residuals finite"));
        }
        let order = if k == 0 {
            None
        } else {
            let (h0, r0) = levels[k - 1];
            if r0 <= floor || residual <= floor {
                None
            } else {
                Some((r0 / residual).ln() / (h0 / h).ln())
            }
        };
        rows.push(ConvergenceRow { h, residual, order });
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Mismatch("slope fit needs matching sample counts"));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateFit("fewer than two points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit("log-log fit needs positive finite values"));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("abscissae are all equal"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_table() {
        let levels = [(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 6.25e-4)];
        let rows = convergence_table(&levels, 1e-14).unwrap();
        assert!(rows[0].order.is_none());
        assert!((rows[2].order.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn round_off_levels_have_no_order() {
        let rows = convergence_table(&[(0.1, 1e-16), (0.05, 2e-16), (0.025, 1e-16)], 1e-13).unwrap();
        assert!(rows.iter().all(|r| r.order.is_none()));
    }

    #[test]
    fn two_levels_refused() {
        assert!(convergence_table(&[(0.1, 1.0), (0.05, 0.5)], 0.0).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [0.5, 1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x * x).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 3.0).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[0.0, 1.0, 1.0, 1.0]).is_err());
    }
}
