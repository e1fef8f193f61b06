//! Position-dependent transport exponent `R(x, t)`.
//!
//! Once `R` depends on `x` the action is no longer quadratic. Given `R`, the
//! action follows by two quadratures,
//!
//! ```text
//! S = f0(t) + ∫ dx e^{-2R} ( f1(t) - ∫ dx' e^{2R} Q ),
//! Q = 2m dR/dt - i hbar (d2R/dx2 + (dR/dx)^2),
//! ```
//!
//! and the potential is whatever makes Hamilton-Jacobi hold,
//! `V = -dS/dt - (dS/dx)^2 / (2m)`. `Q = 0` is the nonlinear constraint PDE;
//! its cosine-logarithm solution and the exponential-potential family are
//! provided in closed form.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::convergence::loglog_slope;
use crate::error::{invalid, Error, Result};
use crate::field::{finite_difference, Axis, ComplexField, Order, SpacetimeFunction};
use crate::grid::SpacetimeGrid;
use crate::propagator::Factor;
use crate::quadrature::cumulative_simpson;

/// Complex function of time.
pub type TimeFunction = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `R(x, t)` with the two integration functions `f0(t)`, `f1(t)`.
#[derive(Clone)]
pub struct GeneralAnsatz {
    pub transport: Arc<dyn SpacetimeFunction>,
    pub f0: TimeFunction,
    pub f1: TimeFunction,
    pub hbar: f64,
    pub mass: f64,
    /// Simpson panels per grid interval for the outer integral.
    pub panels_per_interval: usize,
}

impl core::fmt::Debug for GeneralAnsatz {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("GeneralAnsatz")
            .field("hbar", &self.hbar)
            .field("mass", &self.mass)
            .field("panels_per_interval", &self.panels_per_interval)
            .finish_non_exhaustive()
    }
}

impl GeneralAnsatz {
    pub fn new(transport: Arc<dyn SpacetimeFunction>, f0: TimeFunction, f1: TimeFunction, hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive and finite"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid("mass", "must be positive and finite"));
        }
        Ok(Self { transport, f0, f1, hbar, mass, panels_per_interval: 1 })
    }

    /// Zero integration functions.
    pub fn homogeneous(transport: Arc<dyn SpacetimeFunction>, hbar: f64, mass: f64) -> Result<Self> {
        let zero: TimeFunction = Arc::new(|_| c(0.0));
        Self::new(transport, zero.clone(), zero, hbar, mass)
    }

    pub fn with_panels(mut self, panels_per_interval: usize) -> Result<Self> {
        if panels_per_interval == 0 {
            return Err(invalid("panels_per_interval", "need at least one panel per interval"));
        }
        self.panels_per_interval = panels_per_interval;
        Ok(self)
    }

    /// `Q = 2m R_t - i hbar (R_xx + R_x^2)` from analytic derivatives.
    pub fn constraint(&self, x: f64, t: f64) -> Complex64 {
        nult_at(self.transport.as_ref(), self.mass, self.hbar, x, t)
    }
}

fn nult_at(r: &dyn SpacetimeFunction, mass: f64, hbar: f64, x: f64, t: f64) -> Complex64 {
    let rx = r.d_x(x, t);
    r.d_t(x, t) * (2.0 * mass) - I * hbar * (r.d_xx(x, t) + rx * rx)
}

fn finite_or(v: Complex64, what: &'static str, x: f64, t: f64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, x, t })
    }
}

/// Action from the double quadrature, lower limits at `x_min`.
///
/// Each grid interval carries `panels_per_interval` outer Simpson panels. The
/// inner antiderivative is tabulated cumulatively at the outer rule's edge and
/// midpoint abscissae, itself by Simpson panels of half the outer width, so
/// every outer sample sees an accurate inner value. Per-time slices are
/// independent.
pub fn build_s_from_r(ansatz: &GeneralAnsatz, grid: &SpacetimeGrid) -> Result<ComplexField> {
    let r = ansatz.transport.as_ref();
    let p = ansatz.panels_per_interval.max(1);
    let outer_panels = p * (grid.n_x() - 1);
    let outer_width = grid.hx() / p as f64;
    let x_min = grid.space.min;

    let mut values = vec![Complex64::new(f64::NAN, f64::NAN); grid.len()];
    let mut valid = vec![false; grid.len()];
    for j in 0..grid.n_t() {
        if grid.is_excluded(j) {
            continue;
        }
        let t = grid.t(j);
        let inner = cumulative_simpson(
            |x| {
                let w = finite_or((r.value(x, t) * 2.0).exp(), "exp(2R)", x, t)?;
                finite_or(w * ansatz.constraint(x, t), "inner integrand", x, t)
            },
            x_min,
            0.5 * outer_width,
            2 * outer_panels,
        )?;
        let f1 = (ansatz.f1)(t);
        let f0 = (ansatz.f0)(t);
        let mut k = 0usize;
        let outer = cumulative_simpson(
            |x| {
                // edges and midpoints arrive in order: x_min, mid, edge, mid, ...
                let idx = k;
                k += 1;
                let w = finite_or((r.value(x, t) * -2.0).exp(), "exp(-2R)", x, t)?;
                Ok(w * (f1 - inner[idx]))
            },
            x_min,
            outer_width,
            outer_panels,
        )?;
        for i in 0..grid.n_x() {
            let s = f0 + outer[i * p];
            let s = finite_or(s, "S", grid.x(i), t)?;
            let n = grid.index(i, j);
            values[n] = s;
            valid[n] = true;
        }
    }
    ComplexField::from_parts(grid.clone(), values, valid)
}

/// `2m R_t - i hbar (R_xx + R_x^2)` at every node.
///
/// Closed-form `R` uses analytic derivatives; gridded `R` uses the stencils of
/// [`finite_difference`] and inherits their validity mask.
pub fn nult_residual(r: &Factor, mass: f64, hbar: f64, grid: &SpacetimeGrid) -> Result<ComplexField> {
    match r {
        Factor::Closed(f) => ComplexField::from_fn(grid, "constraint residual", |x, t| nult_at(f.as_ref(), mass, hbar, x, t)),
        Factor::Gridded(field) => {
            if field.grid() != grid {
                return Err(Error::Mismatch("R lives on a different grid"));
            }
            let rt = finite_difference(field, Axis::Time, Order::First)?;
            let rx = finite_difference(field, Axis::Space, Order::First)?;
            let rxx = finite_difference(field, Axis::Space, Order::Second)?;
            let bracket = rxx.zip_with(&rx, |a, b| a + b * b)?;
            rt.zip_with(&bracket, |a, b| a * (2.0 * mass) - I * hbar * b)
        }
    }
}

/// `V = -S_t - S_x^2 / (2m)` at every node.
///
/// Closed-form `S` uses analytic derivatives, gridded `S` uses stencils.
pub fn recover_potential(s: &Factor, mass: f64, grid: &SpacetimeGrid) -> Result<ComplexField> {
    match s {
        Factor::Closed(f) => ComplexField::from_fn(grid, "potential", |x, t| {
            let sx = f.d_x(x, t);
            -f.d_t(x, t) - sx * sx / (2.0 * mass)
        }),
        Factor::Gridded(field) => {
            if field.grid() != grid {
                return Err(Error::Mismatch("S lives on a different grid"));
            }
            let st = finite_difference(field, Axis::Time, Order::First)?;
            let sx = finite_difference(field, Axis::Space, Order::First)?;
            st.zip_with(&sx, |a, b| -a - b * b / (2.0 * mass))
        }
    }
}

/// Result of [`imaginary_scaling_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// `(hbar, max |Im S|)` per requested value.
    pub points: Vec<(f64, f64)>,
    /// Log-log slope of the norms against `hbar`; `None` when vacuous.
    pub slope: Option<f64>,
    /// Every norm is at round-off: `R` carries no usable `x`-dependence.
    pub vacuous: bool,
}

/// Norm floor below which `Im S` counts as identically zero.
pub const VACUOUS_FLOOR: f64 = 1e-12;

/// Build `S` from a real `R` at each `hbar` (zero integration functions) and
/// fit how `max |Im S|` scales.
pub fn imaginary_scaling_probe(
    transport: Arc<dyn SpacetimeFunction>,
    hbars: &[f64],
    mass: f64,
    grid: &SpacetimeGrid,
) -> Result<ScalingReport> {
    let mut distinct: Vec<f64> = hbars.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 3 || distinct.iter().any(|h| !(*h > 0.0)) {
        return Err(invalid("hbar_list", "need at least three distinct positive values"));
    }
    let r_field = ComplexField::sample(grid, "R", transport.as_ref())?;
    for (v, ok) in r_field.values().iter().zip(r_field.mask()) {
        if *ok && v.im != 0.0 {
            return Err(invalid("R", "scaling probe needs a real transport exponent"));
        }
    }
    let mut points = Vec::with_capacity(hbars.len());
    for &hbar in hbars {
        let ansatz = GeneralAnsatz::homogeneous(transport.clone(), hbar, mass)?;
        let s = build_s_from_r(&ansatz, grid)?;
        let norm = s.map(|v| c(v.im)).max_abs().ok_or(Error::NoValidNodes)?;
        points.push((hbar, norm));
    }
    let vacuous = points.iter().all(|(_, n)| *n <= VACUOUS_FLOOR);
    let slope = if vacuous {
        None
    } else {
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        Some(loglog_slope(&xs, &ys)?)
    };
    Ok(ScalingReport { points, slope, vacuous })
}

/// Shift imaginary parts by multiples of `2 pi` so that each time slice of a
/// logarithm is continuous along `x`.
pub fn unwrap_phase_along_space(field: &ComplexField) -> ComplexField {
    let grid = field.grid();
    let mut values = field.values().to_vec();
    for j in 0..grid.n_t() {
        let mut prev: Option<f64> = None;
        for i in 0..grid.n_x() {
            let n = grid.index(i, j);
            if !field.is_valid(i, j) {
                prev = None;
                continue;
            }
            if let Some(p) = prev {
                let turns = ((values[n].im - p) / (2.0 * PI)).round();
                values[n].im -= turns * 2.0 * PI;
            }
            prev = Some(values[n].im);
        }
    }
    ComplexField::from_parts(grid.clone(), values, field.mask().to_vec())
        .expect("same shape as the input field")
}

// ---------------------------------------------------------------------------
// Cosine-logarithm family

/// `R = ln cos(i c2 x + c3) + i hbar c2^2 t / (2m) + c4`, an exact solution of
/// the constraint PDE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosLog {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl CosLog {
    /// `cos(i c2 x + c3) = cos c3 cosh(c2 x) - i sin c3 sinh(c2 x)`.
    pub fn cos_u(&self, x: f64) -> Complex64 {
        let (s3, c3) = self.c3.sin_cos();
        let y = self.c2 * x;
        Complex64::new(c3 * y.cosh(), -s3 * y.sinh())
    }

    /// `sin(i c2 x + c3) = sin c3 cosh(c2 x) + i cos c3 sinh(c2 x)`.
    pub fn sin_u(&self, x: f64) -> Complex64 {
        let (s3, c3) = self.c3.sin_cos();
        let y = self.c2 * x;
        Complex64::new(s3 * y.cosh(), c3 * y.sinh())
    }

    pub fn tan_u(&self, x: f64) -> Complex64 {
        self.sin_u(x) / self.cos_u(x)
    }

    pub fn sec2_u(&self, x: f64) -> Complex64 {
        let cu = self.cos_u(x);
        c(1.0) / (cu * cu)
    }

    /// The action `G - (i/c2) F tan(i c2 x + c3)` with constant `F`, `G`.
    pub fn action(&self, f1: Complex64, f0: Complex64) -> CosLogAction {
        CosLogAction { family: *self, f1, f0 }
    }

    /// `-(F^2 / 2m) sec^4(i c2 x + c3)`, the potential carried by
    /// [`CosLog::action`].
    pub fn potential(&self, f1: Complex64, x: f64) -> Complex64 {
        let s2 = self.sec2_u(x);
        -(f1 * f1) * s2 * s2 / (2.0 * self.mass)
    }

    /// Integration functions for which [`build_s_from_r`] reproduces
    /// `G - (i/c2) F tan(u)` exactly: the quadrature returns
    /// `f0 + f1 e^{-2c4 - i hbar c2^2 t/m} (-(i/c2)) (tan u - tan u_min)`.
    pub fn matched_integration_functions(&self, f1: Complex64, f0: Complex64, x_min: f64) -> (TimeFunction, TimeFunction) {
        let fam = *self;
        let tan_min = self.tan_u(x_min);
        let rate = self.hbar * self.c2 * self.c2 / self.mass;
        let big_f1: TimeFunction = Arc::new(move |t| f1 * Complex64::new(2.0 * fam.c4, rate * t).exp());
        let big_f0: TimeFunction = Arc::new(move |_| f0 - I / fam.c2 * f1 * tan_min);
        (big_f0, big_f1)
    }

    /// Sample `R` on `grid` with the logarithm's branch followed continuously
    /// along `x`.
    pub fn sample_transport(&self, grid: &SpacetimeGrid) -> Result<ComplexField> {
        let raw = ComplexField::sample(grid, "R", self)?;
        Ok(unwrap_phase_along_space(&raw))
    }
}

impl SpacetimeFunction for CosLog {
    fn value(&self, x: f64, t: f64) -> Complex64 {
        self.cos_u(x).ln() + Complex64::new(self.c4, self.hbar * self.c2 * self.c2 * t / (2.0 * self.mass))
    }
    fn d_t(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, self.hbar * self.c2 * self.c2 / (2.0 * self.mass))
    }
    fn d_x(&self, x: f64, _t: f64) -> Complex64 {
        -I * self.c2 * self.tan_u(x)
    }
    fn d_xx(&self, x: f64, _t: f64) -> Complex64 {
        self.sec2_u(x) * (self.c2 * self.c2)
    }
}

/// `S = G - (i/c2) F tan(i c2 x + c3)` with constant `F`, `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosLogAction {
    pub family: CosLog,
    pub f1: Complex64,
    pub f0: Complex64,
}

impl SpacetimeFunction for CosLogAction {
    fn value(&self, x: f64, _t: f64) -> Complex64 {
        self.f0 - I / self.family.c2 * self.f1 * self.family.tan_u(x)
    }
    fn d_t(&self, _x: f64, _t: f64) -> Complex64 {
        c(0.0)
    }
    fn d_x(&self, x: f64, _t: f64) -> Complex64 {
        self.f1 * self.family.sec2_u(x)
    }
    fn d_xx(&self, x: f64, _t: f64) -> Complex64 {
        let f = &self.family;
        self.f1 * f.sec2_u(x) * f.tan_u(x) * (I * 2.0 * f.c2)
    }
}

// ---------------------------------------------------------------------------
// Exponential-potential family

/// `V = A e^{bx}`, `R = i hbar b^2 t / (32 m) - b x / 4`,
/// `S = (2i sqrt(2mA) / b) e^{bx/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPotential {
    pub a: f64,
    pub b: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl ExpPotential {
    pub fn new(a: f64, b: f64, hbar: f64, mass: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(invalid("A", "amplitude must be positive"));
        }
        if b == 0.0 || !b.is_finite() {
            return Err(invalid("b", "rate must be non-zero and finite"));
        }
        Ok(Self { a, b, hbar, mass })
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.a * (self.b * x).exp()
    }

    pub fn transport(&self) -> ExpTransport {
        ExpTransport { family: *self }
    }

    pub fn action(&self) -> ExpAction {
        ExpAction { family: *self }
    }

    fn amplitude(&self) -> Complex64 {
        Complex64::new(0.0, 2.0 * (2.0 * self.mass * self.a).sqrt() / self.b)
    }

    /// Integration functions under which [`build_s_from_r`] returns
    /// [`ExpPotential::action`] exactly.
    pub fn matched_integration_functions(&self, x_min: f64) -> (TimeFunction, TimeFunction) {
        let fam = *self;
        let rate = self.hbar * self.b * self.b / (16.0 * self.mass);
        let slope = Complex64::new(0.0, (2.0 * self.mass * self.a).sqrt());
        let f1: TimeFunction = Arc::new(move |t| slope * Complex64::new(0.0, rate * t).exp());
        let f0: TimeFunction = Arc::new(move |_| fam.amplitude() * (0.5 * fam.b * x_min).exp());
        (f0, f1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTransport {
    pub family: ExpPotential,
}

impl SpacetimeFunction for ExpTransport {
    fn value(&self, x: f64, t: f64) -> Complex64 {
        let f = &self.family;
        Complex64::new(-f.b * x / 4.0, f.hbar * f.b * f.b * t / (32.0 * f.mass))
    }
    fn d_t(&self, _x: f64, _t: f64) -> Complex64 {
        let f = &self.family;
        Complex64::new(0.0, f.hbar * f.b * f.b / (32.0 * f.mass))
    }
    fn d_x(&self, _x: f64, _t: f64) -> Complex64 {
        c(-self.family.b / 4.0)
    }
    fn d_xx(&self, _x: f64, _t: f64) -> Complex64 {
        c(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpAction {
    pub family: ExpPotential,
}

impl SpacetimeFunction for ExpAction {
    fn value(&self, x: f64, _t: f64) -> Complex64 {
        self.family.amplitude() * (0.5 * self.family.b * x).exp()
    }
    fn d_t(&self, _x: f64, _t: f64) -> Complex64 {
        c(0.0)
    }
    fn d_x(&self, x: f64, t: f64) -> Complex64 {
        self.value(x, t) * (0.5 * self.family.b)
    }
    fn d_xx(&self, x: f64, t: f64) -> Complex64 {
        self.value(x, t) * (0.25 * self.family.b * self.family.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Constant;
    use crate::quadratic::{hamilton_jacobi_residual, FreeAction, FreeTransport, HarmonicAction};

    fn grid(n_x: usize) -> SpacetimeGrid {
        SpacetimeGrid::from_extents(-1.0, 1.0, n_x, 0.5, 1.5, 6).unwrap()
    }

    /// `R = -x^2 / 4` (real, t-independent).
    struct Gaussian;
    impl SpacetimeFunction for Gaussian {
        fn value(&self, x: f64, _t: f64) -> Complex64 {
            c(-x * x / 4.0)
        }
        fn d_t(&self, _x: f64, _t: f64) -> Complex64 {
            c(0.0)
        }
        fn d_x(&self, x: f64, _t: f64) -> Complex64 {
            c(-x / 2.0)
        }
        fn d_xx(&self, _x: f64, _t: f64) -> Complex64 {
            c(-0.5)
        }
    }

    /// `R = x`.
    struct Linear;
    impl SpacetimeFunction for Linear {
        fn value(&self, x: f64, _t: f64) -> Complex64 {
            c(x)
        }
        fn d_t(&self, _x: f64, _t: f64) -> Complex64 {
            c(0.0)
        }
        fn d_x(&self, _x: f64, _t: f64) -> Complex64 {
            c(1.0)
        }
        fn d_xx(&self, _x: f64, _t: f64) -> Complex64 {
            c(0.0)
        }
    }

    #[test]
    fn free_particle_is_reproduced() {
        let (m, x0) = (1.0, 0.3);
        let g = grid(41);
        let x_min = g.space.min;
        let f1: TimeFunction = Arc::new(move |t| c(m * (x_min - x0) / (t * t)));
        let f0: TimeFunction = Arc::new(move |t| c(m * (x_min - x0).powi(2) / (2.0 * t)));
        let ansatz = GeneralAnsatz::new(Arc::new(FreeTransport { offset: 0.0 }), f0, f1, 1.0, m).unwrap();
        let s = build_s_from_r(&ansatz, &g).unwrap();
        let exact = ComplexField::sample(&g, "S", &FreeAction { mass: m, x0 }).unwrap();
        let gap = s.zip_with(&exact, |a, b| a - b).unwrap().max_abs().unwrap();
        assert!(gap < 1e-6, "{gap}");
    }

    #[test]
    fn time_only_r_gives_exactly_quadratic_s() {
        let ansatz = GeneralAnsatz::homogeneous(Arc::new(FreeTransport { offset: 0.0 }), 1.0, 1.0).unwrap();
        let g = grid(21);
        let s = build_s_from_r(&ansatz, &g).unwrap();
        for j in 0..g.n_t() {
            for i in 0..g.n_x() - 3 {
                let d3 = s.at(i + 3, j) - s.at(i + 2, j) * 3.0 + s.at(i + 1, j) * 3.0 - s.at(i, j);
                assert!(d3.norm() < 1e-8);
            }
        }
    }

    #[test]
    fn cos_log_is_reproduced() {
        let fam = CosLog { c2: 1.0, c3: 0.0, c4: 0.0, hbar: 1.0, mass: 1.0 };
        let (big_f1, big_f0) = (c(0.7), Complex64::new(0.2, -0.1));
        let g = grid(41);
        let (f0, f1) = fam.matched_integration_functions(big_f1, big_f0, g.space.min);
        let ansatz = GeneralAnsatz::new(Arc::new(fam), f0, f1, 1.0, 1.0).unwrap();
        let s = build_s_from_r(&ansatz, &g).unwrap();
        let exact = ComplexField::sample(&g, "S", &fam.action(big_f1, big_f0)).unwrap();
        let gap = s.zip_with(&exact, |a, b| a - b).unwrap().max_abs().unwrap();
        assert!(gap < 1e-6, "{gap}");
    }

    #[test]
    fn exponential_family_satisfies_hamilton_jacobi() {
        let fam = ExpPotential::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let s = fam.action();
        for &x in &[-2.0, -0.3, 0.0, 0.8, 2.5] {
            let v = c(fam.potential(x));
            let res = hamilton_jacobi_residual(&s, v, 1.0, x, 0.7);
            assert!(res.norm() < 1e-10, "{res}");
            let sx = s.d_x(x, 0.7);
            assert!((sx * sx / 2.0 + v).norm() < 1e-12);
            assert!(nult_at(&fam.transport(), 1.0, 1.0, x, 0.7).norm() < 1e-14);
        }
    }

    #[test]
    fn exponential_family_from_quadrature() {
        let fam = ExpPotential::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let g = grid(41);
        let (f0, f1) = fam.matched_integration_functions(g.space.min);
        let ansatz = GeneralAnsatz::new(Arc::new(fam.transport()), f0, f1, 1.0, 1.0).unwrap();
        let s = build_s_from_r(&ansatz, &g).unwrap();
        let exact = ComplexField::sample(&g, "S", &fam.action()).unwrap();
        assert!(s.zip_with(&exact, |a, b| a - b).unwrap().max_abs().unwrap() < 1e-6);
    }

    #[test]
    fn nult_examples() {
        let g = grid(9);
        let zero = nult_residual(&Factor::Closed(Arc::new(Constant(c(2.0)))), 1.0, 1.0, &g).unwrap();
        assert_eq!(zero.max_abs().unwrap(), 0.0);

        let lin = nult_residual(&Factor::Closed(Arc::new(Linear)), 1.0, 0.8, &g).unwrap();
        assert!(lin.values().iter().all(|v| (v - Complex64::new(0.0, -0.8)).norm() < 1e-15));

        let fam = CosLog { c2: 1.3, c3: 0.4, c4: 0.2, hbar: 0.9, mass: 1.7 };
        let cl = nult_residual(&Factor::Closed(Arc::new(fam)), 1.7, 0.9, &g).unwrap();
        assert!(cl.max_abs().unwrap() < 1e-8);
    }

    #[test]
    fn nult_stencil_on_gridded_cos_log() {
        let fam = CosLog { c2: 1.0, c3: 0.3, c4: 0.0, hbar: 1.0, mass: 1.0 };
        let err = |n: usize| {
            let g = SpacetimeGrid::from_extents(-1.0, 1.0, n, 0.0, 1.0, n).unwrap();
            let r = fam.sample_transport(&g).unwrap();
            nult_residual(&Factor::Gridded(r), 1.0, 1.0, &g).unwrap().max_abs().unwrap()
        };
        let (e1, e2) = (err(41), err(81));
        assert!((3.0..5.0).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn recovered_potentials() {
        let g = SpacetimeGrid::from_extents(-1.0, 1.0, 81, 0.5, 1.5, 81).unwrap();
        let free = ComplexField::sample(&g, "S", &FreeAction { mass: 1.0, x0: 0.2 }).unwrap();
        let v = recover_potential(&Factor::Gridded(free), 1.0, &g).unwrap();
        assert!(v.max_abs().unwrap() < 5e-3);

        let osc = HarmonicAction { mass: 1.0, omega: 1.0, x0: 0.2 };
        let s = ComplexField::sample(&g, "S", &osc).unwrap();
        let v = recover_potential(&Factor::Gridded(s), 1.0, &g).unwrap();
        let gap = v.map_with_coords(|x, _, val| val - c(0.5 * x * x)).max_abs().unwrap();
        assert!(gap < 5e-3, "{gap}");
        let v = recover_potential(&Factor::Closed(Arc::new(osc)), 1.0, &g).unwrap();
        let gap = v.map_with_coords(|x, _, val| val - c(0.5 * x * x)).max_abs().unwrap();
        assert!(gap < 1e-10, "{gap}");
    }

    #[test]
    fn cos_log_potential_matches_display() {
        let fam = CosLog { c2: 1.0, c3: 0.2, c4: 0.0, hbar: 1.0, mass: 1.0 };
        let f1 = c(0.6);
        let g = grid(11);
        let v = recover_potential(&Factor::Closed(Arc::new(fam.action(f1, c(0.0)))), 1.0, &g).unwrap();
        let gap = v.map_with_coords(|x, _, val| val - fam.potential(f1, x)).max_abs().unwrap();
        assert!(gap < 1e-6, "{gap}");
    }

    #[test]
    fn imaginary_part_scales_linearly() {
        let g = grid(41);
        let report = imaginary_scaling_probe(Arc::new(Gaussian), &[0.5, 1.0, 2.0], 1.0, &g).unwrap();
        assert!(!report.vacuous);
        assert!((report.slope.unwrap() - 1.0).abs() < 0.01);
        let ratio = report.points[2].1 / report.points[1].1;
        assert!((ratio - 2.0).abs() < 0.02);

        let flat = imaginary_scaling_probe(Arc::new(FreeTransport { offset: 0.0 }), &[0.5, 1.0, 2.0], 1.0, &g).unwrap();
        assert!(flat.vacuous && flat.slope.is_none());

        assert!(imaginary_scaling_probe(Arc::new(Gaussian), &[1.0, 1.0, 2.0], 1.0, &g).is_err());
    }

    #[test]
    fn phase_unwrap_removes_jumps() {
        let g = grid(9);
        let f = ComplexField::from_fn(&g, "jumpy", |x, _| {
            Complex64::new(0.0, if x > 0.0 { 3.0 - 2.0 * PI } else { 3.0 })
        })
        .unwrap();
        let u = unwrap_phase_along_space(&f);
        assert!(u.values().iter().all(|v| (v.im - 3.0).abs() < 1e-12));
    }
}
