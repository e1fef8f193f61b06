//! Classical fourth-order Runge-Kutta on fixed-size states.

/// One RK4 step of `y' = f(t, y)` from `t` with step `h` (may be negative).
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_fourth_order() {
        let err = |h: f64| {
            let mut y = [1.0];
            let mut t = 0.0;
            let steps = (1.0 / h).round() as usize;
            let mut f = |_t: f64, y: &[f64; 1]| [-y[0]];
            for _ in 0..steps {
                y = rk4_step(&mut f, t, &y, h);
                t += h;
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((14.0..=18.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn backward_step_inverts_forward() {
        let mut f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let y0 = [1.0, 0.0];
        let y1 = rk4_step(&mut f, 0.0, &y0, 0.01);
        let back = rk4_step(&mut f, 0.01, &y1, -0.01);
        assert!((back[0] - 1.0).abs() < 1e-10 && back[1].abs() < 1e-10);
    }
}
