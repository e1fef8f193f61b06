//! Propagators whose transport exponent depends on time only.
//!
//! With `R = R(t)` the action is at most quadratic in `x`,
//! `S = f0(t) + f1(t) x - m R'(t) x^2`, and the potential must be quadratic,
//! `V = g2 x^2 + g1 x + g0`. The three time functions obey
//!
//! ```text
//! m R''              = 2 m R'^2 + g2
//! f1' + g1           = 2 R' f1
//! 2m (f0' + g0) + f1^2 = 0
//! ```
//!
//! The driven-oscillator solution list quoted alongside this system writes
//! `f0' = (m/2) f1^2 + g0`, which disagrees with the last equation in both the
//! sign and the power of `m`. Everything here integrates the system above.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::field::SpacetimeFunction;
use crate::grid::{Grid1d, SpacetimeGrid};
use crate::linalg::DenseMatrix;
use crate::ode::rk4_step;
use crate::propagator::{Factor, PropagatorFactors, TwoPointAction};

/// Real coefficient function of time.
pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `V(x, t) = g2(t) x^2 + g1(t) x + g0(t)`.
#[derive(Clone)]
pub struct QuadraticPotential {
    pub g2: Coefficient,
    pub g1: Coefficient,
    pub g0: Coefficient,
}

impl core::fmt::Debug for QuadraticPotential {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("QuadraticPotential { .. }")
    }
}

impl QuadraticPotential {
    pub fn new(g2: Coefficient, g1: Coefficient, g0: Coefficient) -> Self {
        Self { g2, g1, g0 }
    }

    pub fn free() -> Self {
        Self::constant(0.0, 0.0, 0.0)
    }

    pub fn constant(g2: f64, g1: f64, g0: f64) -> Self {
        Self::new(Arc::new(move |_| g2), Arc::new(move |_| g1), Arc::new(move |_| g0))
    }

    /// `g2 = m w^2 / 2`.
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        Self::constant(0.5 * mass * omega * omega, 0.0, 0.0)
    }

    /// Harmonic `g2`, `g1 = 0` and an arbitrary `g0(t)`.
    pub fn driven(mass: f64, omega: f64, g0: Coefficient) -> Self {
        let g2 = 0.5 * mass * omega * omega;
        Self::new(Arc::new(move |_| g2), Arc::new(|_| 0.0), g0)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        (self.g2)(t) * x * x + (self.g1)(t) * x + (self.g0)(t)
    }
}

/// Values of `R, R', f1, f0` at the reference time `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefactorInit {
    pub t0: f64,
    pub r: f64,
    pub dr: f64,
    pub f1: f64,
    pub f0: f64,
}

/// Step size and blow-up detection for [`solve_prefactor_odes`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefactorOptions {
    pub step: f64,
    /// Integration stops once `|R'|` exceeds this.
    pub blow_up_bound: f64,
}

impl Default for PrefactorOptions {
    fn default() -> Self {
        Self { step: 1e-3, blow_up_bound: 1e6 }
    }
}

/// Sampled `R(t), R'(t), f1(t), f0(t)`, ascending in time.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorSolution {
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    pub dr: Vec<f64>,
    pub f1: Vec<f64>,
    pub f0: Vec<f64>,
    pub init: PrefactorInit,
    /// First time at which `|R'|` crossed the bound, if any.
    pub blow_up: Option<f64>,
}

impl PrefactorSolution {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Action `f0 + f1 x - m R' x^2` at sample `k`.
    pub fn action(&self, k: usize, mass: f64, x: f64) -> f64 {
        self.f0[k] + self.f1[k] * x - mass * self.dr[k] * x * x
    }
}

fn prefactor_rhs(pot: &QuadraticPotential, mass: f64) -> impl FnMut(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |t, y| {
        let (dr, f1) = (y[1], y[2]);
        [
            dr,
            2.0 * dr * dr + (pot.g2)(t) / mass,
            2.0 * dr * f1 - (pot.g1)(t),
            -(pot.g0)(t) - f1 * f1 / (2.0 * mass),
        ]
    }
}

/// RK4 solution of the prefactor system on `window`, started from `init` at
/// `init.t0` (which must lie inside the window) and integrated outwards in
/// both directions.
///
/// The step is shrunk slightly where needed so that both window ends are
/// landed on exactly. If `|R'|` exceeds the blow-up bound, that direction is
/// truncated at the last accepted sample and the crossing time is recorded.
pub fn solve_prefactor_odes(
    pot: &QuadraticPotential,
    mass: f64,
    init: PrefactorInit,
    window: (f64, f64),
    opts: PrefactorOptions,
) -> Result<PrefactorSolution> {
    let (lo, hi) = window;
    if !(opts.step > 0.0) {
        return Err(invalid("step", "must be positive"));
    }
    if !(mass > 0.0) {
        return Err(invalid("mass", "must be positive"));
    }
    if !(lo <= init.t0 && init.t0 <= hi) {
        return Err(invalid("t0", "reference time must lie inside the window"));
    }
    let y0 = [init.r, init.dr, init.f1, init.f0];
    let mut blow_up: Option<f64> = None;

    let mut march = |end: f64| -> Vec<(f64, [f64; 4])> {
        let span = end - init.t0;
        let mut out = Vec::new();
        if span == 0.0 {
            return out;
        }
        let n = (span.abs() / opts.step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let mut rhs = prefactor_rhs(pot, mass);
        let mut y = y0;
        for k in 0..n {
            let t = init.t0 + k as f64 * h;
            let next = rk4_step(&mut rhs, t, &y, h);
            let t_next = if k + 1 == n { end } else { init.t0 + (k + 1) as f64 * h };
            if !(next[1].abs() <= opts.blow_up_bound) || next.iter().any(|v| !v.is_finite()) {
                blow_up = Some(match blow_up {
                    Some(b) if (b - init.t0).abs() < (t_next - init.t0).abs() => b,
                    _ => t_next,
                });
                break;
            }
            y = next;
            out.push((t_next, y));
        }
        out
    };

    let backward = march(lo);
    let forward = march(hi);

    let mut sol = PrefactorSolution {
        times: Vec::new(),
        r: Vec::new(),
        dr: Vec::new(),
        f1: Vec::new(),
        f0: Vec::new(),
        init,
        blow_up,
    };
    let mut push = |t: f64, y: &[f64; 4]| {
        sol.times.push(t);
        sol.r.push(y[0]);
        sol.dr.push(y[1]);
        sol.f1.push(y[2]);
        sol.f0.push(y[3]);
    };
    for (t, y) in backward.iter().rev() {
        push(*t, y);
    }
    push(init.t0, &y0);
    for (t, y) in &forward {
        push(*t, y);
    }
    Ok(sol)
}

// ---------------------------------------------------------------------------
// Closed-form families

/// Free particle: `S = m (x - x0)^2 / (2 tau)`, `R = -ln(tau)/2 + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParticle {
    pub mass: f64,
    pub r_offset: f64,
}

impl FreeParticle {
    pub fn new(mass: f64) -> Self {
        Self { mass, r_offset: 0.0 }
    }

    pub fn init_at(&self, x0: f64, t0: f64) -> PrefactorInit {
        PrefactorInit {
            t0,
            r: -0.5 * t0.ln() + self.r_offset,
            dr: -0.5 / t0,
            f1: -self.mass * x0 / t0,
            f0: self.mass * x0 * x0 / (2.0 * t0),
        }
    }
}

impl TwoPointAction for FreeParticle {
    fn action(&self, x: f64, x0: f64, tau: f64) -> f64 {
        self.mass * (x - x0) * (x - x0) / (2.0 * tau)
    }
    fn transport(&self, _x: f64, _x0: f64, tau: f64) -> Complex64 {
        Complex64::new(tau, 0.0).ln() * -0.5 + self.r_offset
    }
}

/// Harmonic oscillator:
/// `S = (m w / 2) [(x0^2 + x^2) cot(w tau) - 2 x0 x csc(w tau)]`,
/// `R = -ln(sin w tau)/2 + c`. Caustics at `tau = n pi / w`.
///
/// Past the first caustic `sin` is negative and `R` picks up the constant
/// imaginary part `-i pi/2` from the principal logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicOscillator {
    pub mass: f64,
    pub omega: f64,
    pub r_offset: f64,
}

impl HarmonicOscillator {
    pub fn new(mass: f64, omega: f64) -> Self {
        Self { mass, omega, r_offset: 0.0 }
    }

    pub fn init_at(&self, x0: f64, t0: f64) -> PrefactorInit {
        let (m, w) = (self.mass, self.omega);
        let (s, c) = (w * t0).sin_cos();
        PrefactorInit {
            t0,
            r: -0.5 * s.ln() + self.r_offset,
            dr: -0.5 * w * c / s,
            f1: -m * w * x0 / s,
            f0: 0.5 * m * w * x0 * x0 * c / s,
        }
    }

    /// Caustic times `n pi / w` inside `[lo, hi]`.
    pub fn caustics(&self, lo: f64, hi: f64) -> Vec<f64> {
        let period = PI / self.omega;
        let first = (lo / period).ceil() as i64;
        let last = (hi / period).floor() as i64;
        (first..=last).map(|n| n as f64 * period).collect()
    }
}

impl TwoPointAction for HarmonicOscillator {
    fn action(&self, x: f64, x0: f64, tau: f64) -> f64 {
        let (s, c) = (self.omega * tau).sin_cos();
        0.5 * self.mass * self.omega * ((x0 * x0 + x * x) * c / s - 2.0 * x0 * x / s)
    }
    fn transport(&self, _x: f64, _x0: f64, tau: f64) -> Complex64 {
        Complex64::new((self.omega * tau).sin(), 0.0).ln() * -0.5 + self.r_offset
    }
}

/// Driven-oscillator prefactor closed forms, `R' = (w/2) tan(w t + c0)` and
/// `f1 = c1 sec(w t + c0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenOscillator {
    pub mass: f64,
    pub omega: f64,
    pub c0: f64,
    pub c1: f64,
}

impl DrivenOscillator {
    pub fn dr(&self, t: f64) -> f64 {
        0.5 * self.omega * (self.omega * t + self.c0).tan()
    }

    /// `R = -ln|cos(w t + c0)| / 2`, up to a constant.
    pub fn r(&self, t: f64) -> f64 {
        -0.5 * (self.omega * t + self.c0).cos().abs().ln()
    }

    pub fn f1(&self, t: f64) -> f64 {
        self.c1 / (self.omega * t + self.c0).cos()
    }

    pub fn init_at(&self, t0: f64, f0: f64) -> PrefactorInit {
        PrefactorInit { t0, r: self.r(t0), dr: self.dr(t0), f1: self.f1(t0), f0 }
    }
}

/// Wraps a family and multiplies its action by `factor`, leaving `R` alone.
#[derive(Debug, Clone, Copy)]
pub struct ScaledAction<A> {
    pub inner: A,
    pub factor: f64,
}

impl<A: TwoPointAction> TwoPointAction for ScaledAction<A> {
    fn action(&self, x: f64, x0: f64, tau: f64) -> f64 {
        self.factor * self.inner.action(x, x0, tau)
    }
    fn transport(&self, x: f64, x0: f64, tau: f64) -> Complex64 {
        self.inner.transport(x, x0, tau)
    }
}

/// One-point slice `x0 = const` of the free-particle action, with analytic
/// derivatives.
#[derive(Debug, Clone, Copy)]
pub struct FreeAction {
    pub mass: f64,
    pub x0: f64,
}

impl SpacetimeFunction for FreeAction {
    fn value(&self, x: f64, t: f64) -> Complex64 {
        Complex64::new(self.mass * (x - self.x0).powi(2) / (2.0 * t), 0.0)
    }
    fn d_t(&self, x: f64, t: f64) -> Complex64 {
        Complex64::new(-self.mass * (x - self.x0).powi(2) / (2.0 * t * t), 0.0)
    }
    fn d_x(&self, x: f64, t: f64) -> Complex64 {
        Complex64::new(self.mass * (x - self.x0) / t, 0.0)
    }
    fn d_xx(&self, _x: f64, t: f64) -> Complex64 {
        Complex64::new(self.mass / t, 0.0)
    }
}

/// `-ln(t)/2 + c`.
#[derive(Debug, Clone, Copy)]
pub struct FreeTransport {
    pub offset: f64,
}

impl SpacetimeFunction for FreeTransport {
    fn value(&self, _x: f64, t: f64) -> Complex64 {
        Complex64::new(t, 0.0).ln() * -0.5 + self.offset
    }
    fn d_t(&self, _x: f64, t: f64) -> Complex64 {
        Complex64::new(-0.5 / t, 0.0)
    }
    fn d_x(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn d_xx(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// One-point slice of the oscillator action.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicAction {
    pub mass: f64,
    pub omega: f64,
    pub x0: f64,
}

impl SpacetimeFunction for HarmonicAction {
    fn value(&self, x: f64, t: f64) -> Complex64 {
        let (s, c) = (self.omega * t).sin_cos();
        let v = 0.5 * self.mass * self.omega * ((self.x0 * self.x0 + x * x) * c / s - 2.0 * self.x0 * x / s);
        Complex64::new(v, 0.0)
    }
    fn d_t(&self, x: f64, t: f64) -> Complex64 {
        let (m, w, x0) = (self.mass, self.omega, self.x0);
        let (s, c) = (w * t).sin_cos();
        // d/dt cot = -w csc^2, d/dt csc = -w csc cot
        let v = 0.5 * m * w * (-(x0 * x0 + x * x) * w / (s * s) + 2.0 * x0 * x * w * c / (s * s));
        Complex64::new(v, 0.0)
    }
    fn d_x(&self, x: f64, t: f64) -> Complex64 {
        let (s, c) = (self.omega * t).sin_cos();
        Complex64::new(self.mass * self.omega * (x * c - self.x0) / s, 0.0)
    }
    fn d_xx(&self, _x: f64, t: f64) -> Complex64 {
        let (s, c) = (self.omega * t).sin_cos();
        Complex64::new(self.mass * self.omega * c / s, 0.0)
    }
}

/// `-ln(sin w t)/2 + c` on the principal branch.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicTransport {
    pub omega: f64,
    pub offset: f64,
}

impl SpacetimeFunction for HarmonicTransport {
    fn value(&self, _x: f64, t: f64) -> Complex64 {
        Complex64::new((self.omega * t).sin(), 0.0).ln() * -0.5 + self.offset
    }
    fn d_t(&self, _x: f64, t: f64) -> Complex64 {
        let (s, c) = (self.omega * t).sin_cos();
        Complex64::new(-0.5 * self.omega * c / s, 0.0)
    }
    fn d_x(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn d_xx(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

fn check_physical(mass: f64, hbar: f64) -> Result<()> {
    if !(mass > 0.0) {
        return Err(invalid("mass", "must be positive"));
    }
    if !(hbar > 0.0) {
        return Err(invalid("hbar", "must be positive"));
    }
    Ok(())
}

/// Free-particle `R` and `S` for source point `x0`, as closed forms.
///
/// Every non-excluded time node must be strictly positive.
pub fn free_particle_factors(mass: f64, x0: f64, hbar: f64, grid: &SpacetimeGrid) -> Result<PropagatorFactors> {
    check_physical(mass, hbar)?;
    for j in 0..grid.n_t() {
        let t = grid.t(j);
        if t <= 0.0 && !grid.is_excluded(j) {
            return Err(Error::NonPositiveTime { t });
        }
    }
    Ok(PropagatorFactors::new(
        Factor::Closed(Arc::new(FreeTransport { offset: 0.0 })),
        Factor::Closed(Arc::new(FreeAction { mass, x0 })),
        hbar,
        mass,
    )?
    .with_two_point(Arc::new(FreeParticle::new(mass)), x0))
}

/// Oscillator `R` and `S` for source point `x0`, as closed forms.
///
/// Every caustic `n pi / w` inside the time range must be covered by an
/// exclusion window; nodes whose stencils touch a window drop out of any
/// residual computed later.
pub fn harmonic_factors(
    mass: f64,
    omega: f64,
    x0: f64,
    hbar: f64,
    grid: &SpacetimeGrid,
) -> Result<PropagatorFactors> {
    check_physical(mass, hbar)?;
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be positive"));
    }
    let osc = HarmonicOscillator::new(mass, omega);
    for c in osc.caustics(grid.time.min, grid.time.max) {
        if !grid.is_excluded_time(c) {
            return Err(invalid(
                "exclusions",
                alloc::format!("caustic at t = {c} is not covered by an exclusion window"),
            ));
        }
    }
    Ok(PropagatorFactors::new(
        Factor::Closed(Arc::new(HarmonicTransport { omega, offset: 0.0 })),
        Factor::Closed(Arc::new(HarmonicAction { mass, omega, x0 })),
        hbar,
        mass,
    )?
    .with_two_point(Arc::new(osc), x0))
}

/// `dS/dt + (dS/dx)^2 / (2m) + V` with analytic derivatives.
pub fn hamilton_jacobi_residual(
    action: &dyn SpacetimeFunction,
    potential: Complex64,
    mass: f64,
    x: f64,
    t: f64,
) -> Complex64 {
    let sx = action.d_x(x, t);
    action.d_t(x, t) + sx * sx / (2.0 * mass) + potential
}

/// `d2S/dx2 + 2m dR/dt`, the remaining equation when `R = R(t)`.
pub fn curvature_residual(
    action: &dyn SpacetimeFunction,
    transport: &dyn SpacetimeFunction,
    mass: f64,
    x: f64,
    t: f64,
) -> Complex64 {
    action.d_xx(x, t) + transport.d_t(x, t) * (2.0 * mass)
}

// ---------------------------------------------------------------------------
// Van Vleck identification

/// Outcome of [`van_vleck_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct VanVleckReport {
    /// The constant `c` in `sqrt(D_VV) exp(-R) = c`.
    pub constant: f64,
    /// `max |q - c| / c` over all accepted nodes.
    pub max_deviation: f64,
    /// Per non-excluded time: `(t, max deviation at that time)`.
    pub per_time: Vec<(f64, f64)>,
    /// Nodes with `D_VV <= 0`, as `(x, x0, t, D_VV)`.
    pub breakdowns: Vec<(f64, f64, f64, f64)>,
}

/// Compare `exp(R)` with `sqrt(D_VV)`, `D_VV = -d2S/dx dx0`.
///
/// `D_VV` comes from the central mixed difference on the interior of the
/// `x` and `x0` grids. The quantity `q = sqrt(D_VV) |exp(-R)|` must be
/// constant; `c` is the mean of `q` unless `reference` pins it. The modulus
/// absorbs a constant phase in `exp(R)`.
pub fn van_vleck_check(
    factors: &PropagatorFactors,
    grid: &SpacetimeGrid,
    x0_grid: &Grid1d,
    reference: Option<f64>,
) -> Result<VanVleckReport> {
    let family = &factors.two_point.as_ref().ok_or(Error::MissingTwoPoint)?.family;
    let (hx, h0) = (grid.hx(), x0_grid.spacing());
    let mut samples: Vec<(usize, f64)> = Vec::new();
    let mut times = Vec::new();
    let mut breakdowns = Vec::new();
    for j in 0..grid.n_t() {
        if grid.is_excluded(j) {
            continue;
        }
        let t = grid.t(j);
        let slot = times.len();
        times.push(t);
        for i in 1..grid.n_x() - 1 {
            let x = grid.x(i);
            for k in 1..x0_grid.n - 1 {
                let x0 = x0_grid.point(k);
                let s = |dx: f64, d0: f64| family.action(x + dx, x0 + d0, t);
                let mixed = (s(hx, h0) - s(hx, -h0) - s(-hx, h0) + s(-hx, -h0)) / (4.0 * hx * h0);
                let d_vv = -mixed;
                if !(d_vv > 0.0) {
                    breakdowns.push((x, x0, t, d_vv));
                    continue;
                }
                let q = d_vv.sqrt() * (-family.transport(x, x0, t)).exp().norm();
                if !q.is_finite() {
                    return Err(Error::NonFinite { what: "Van Vleck ratio", x, t });
                }
                samples.push((slot, q));
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::NoValidNodes);
    }
    let c = match reference {
        Some(c) if c > 0.0 => c,
        Some(_) => return Err(invalid("reference", "fitted constant must be positive")),
        None => samples.iter().map(|(_, q)| q).sum::<f64>() / samples.len() as f64,
    };
    let mut per_time: Vec<(f64, f64)> = times.iter().map(|t| (*t, 0.0)).collect();
    let mut worst: f64 = 0.0;
    for (slot, q) in &samples {
        let dev = (q - c).abs() / c;
        per_time[*slot].1 = per_time[*slot].1.max(dev);
        worst = worst.max(dev);
    }
    Ok(VanVleckReport { constant: c, max_deviation: worst, per_time, breakdowns })
}

// ---------------------------------------------------------------------------
// Quadratic-necessity probe

/// Least-squares `(g2, g1, g0)` of `v(x)` over the nodes of `xs`.
pub fn fit_quadratic(xs: &Grid1d, mut v: impl FnMut(f64) -> f64) -> Result<[f64; 3]> {
    let mut normal = DenseMatrix::<f64>::zeros(3);
    let mut rhs = [0.0; 3];
    for x in xs.points() {
        let basis = [x * x, x, 1.0];
        let y = v(x);
        for a in 0..3 {
            rhs[a] += basis[a] * y;
            for b in 0..3 {
                normal[(a, b)] += basis[a] * basis[b];
            }
        }
    }
    let sol = normal.solve(&rhs)?;
    Ok([sol[0], sol[1], sol[2]])
}

/// Result of [`quadratic_necessity_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct NecessityReport {
    /// `max |dS/dt + (dS/dx)^2/(2m) + V|` over the accepted nodes.
    pub residual: f64,
    pub solution: PrefactorSolution,
}

/// Fit the `R = R(t)` template to an arbitrary potential and measure how far
/// the resulting quadratic action is from solving Hamilton-Jacobi.
///
/// At every time the potential is projected onto `g2 x^2 + g1 x + g0` by least
/// squares over the spatial grid; the prefactor ODEs are integrated on the
/// grid's time nodes from `init` (taken at `t_min`); the action
/// `f0 + f1 x - m R' x^2` and its derivatives (from the ODE right-hand side)
/// are substituted into the Hamilton-Jacobi equation with the *original*
/// potential. A quadratic `V` gives round-off; anything else leaves its
/// non-quadratic remainder.
pub fn quadratic_necessity_probe<V>(
    potential: V,
    mass: f64,
    grid: &SpacetimeGrid,
    init: PrefactorInit,
) -> Result<NecessityReport>
where
    V: Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static,
{
    let xs = grid.space;
    let fit = {
        let potential = potential.clone();
        move |t: f64| fit_quadratic(&xs, |x| potential(x, t))
    };
    // Fails only on a degenerate grid, which Grid1d rules out.
    fit(grid.time.min)?;
    let coeff = |k: usize| -> Coefficient {
        let fit = fit.clone();
        Arc::new(move |t| fit(t).map(|g| g[k]).unwrap_or(f64::NAN))
    };
    let pot = QuadraticPotential::new(coeff(0), coeff(1), coeff(2));
    let init = PrefactorInit { t0: grid.time.min, ..init };
    let sol = solve_prefactor_odes(
        &pot,
        mass,
        init,
        (grid.time.min, grid.time.max),
        PrefactorOptions { step: grid.ht(), ..Default::default() },
    )?;

    let mut worst: f64 = 0.0;
    let mut any = false;
    for k in 0..sol.len() {
        let t = sol.times[k];
        if grid.is_excluded_time(t) {
            continue;
        }
        let [g2, g1, g0] = fit(t)?;
        let (dr, f1) = (sol.dr[k], sol.f1[k]);
        let ddr = 2.0 * dr * dr + g2 / mass;
        let df1 = 2.0 * dr * f1 - g1;
        let df0 = -g0 - f1 * f1 / (2.0 * mass);
        for x in xs.points() {
            let s_t = df0 + df1 * x - mass * ddr * x * x;
            let s_x = f1 - 2.0 * mass * dr * x;
            let res = s_t + s_x * s_x / (2.0 * mass) + potential(x, t);
            worst = worst.max(res.abs());
            any = true;
        }
    }
    if !any {
        return Err(Error::NoValidNodes);
    }
    Ok(NecessityReport { residual: worst, solution: sol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn max_err(sol: &PrefactorSolution, exact: impl Fn(f64) -> f64, series: &[f64]) -> f64 {
        sol.times
            .iter()
            .zip(series)
            .map(|(t, v)| (v - exact(*t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn free_particle_prefactor_tracks_log_decay() {
        let fp = FreeParticle::new(1.0);
        let sol = solve_prefactor_odes(
            &QuadraticPotential::free(),
            1.0,
            fp.init_at(0.3, 1.0),
            (1.0, 2.0),
            PrefactorOptions { step: 1e-3, ..Default::default() },
        )
        .unwrap();
        assert!(max_err(&sol, |t| -0.5 * t.ln(), &sol.r) < 1e-8);
        assert!(max_err(&sol, |t| -0.3 / t, &sol.f1) < 1e-8);
        assert!(max_err(&sol, |t| 0.09 / (2.0 * t), &sol.f0) < 1e-8);
        assert_eq!(*sol.times.first().unwrap(), 1.0);
        assert_eq!(*sol.times.last().unwrap(), 2.0);
    }

    #[test]
    fn oscillator_prefactor_from_midpoint() {
        let osc = HarmonicOscillator::new(1.0, 1.0);
        let sol = solve_prefactor_odes(
            &QuadraticPotential::harmonic(1.0, 1.0),
            1.0,
            osc.init_at(0.0, FRAC_PI_2),
            (PI / 4.0, 3.0 * PI / 4.0),
            PrefactorOptions { step: 1e-3, ..Default::default() },
        )
        .unwrap();
        assert!(max_err(&sol, |t| -0.5 * t.sin().ln(), &sol.r) < 1e-8);
        assert!((sol.times[0] - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn blow_up_is_detected_at_caustic() {
        let osc = HarmonicOscillator::new(1.0, 1.0);
        let sol = solve_prefactor_odes(
            &QuadraticPotential::harmonic(1.0, 1.0),
            1.0,
            osc.init_at(0.0, FRAC_PI_2),
            (FRAC_PI_2, 4.0),
            PrefactorOptions { step: 1e-4, blow_up_bound: 1e6 },
        )
        .unwrap();
        let b = sol.blow_up.expect("caustic at pi must be detected");
        assert!((b - PI).abs() < 1e-3, "{b}");
        assert!(*sol.times.last().unwrap() < PI);
    }

    #[test]
    fn free_particle_closed_form_values() {
        let g = SpacetimeGrid::from_extents(-1.0, 1.0, 5, 0.5, 4.0, 8).unwrap();
        let f = free_particle_factors(1.0, 0.0, 1.0, &g).unwrap();
        let s = f.action.closed().unwrap();
        let r = f.transport.closed().unwrap();
        assert!((s.value(1.0, 1.0).re - 0.5).abs() < 1e-15);
        assert_eq!(s.value(0.0, 3.0).re, 0.0);
        assert!((r.value(0.0, 4.0).exp().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn free_particle_refuses_nonpositive_time() {
        let g = SpacetimeGrid::from_extents(-1.0, 1.0, 5, 0.0, 1.0, 5).unwrap();
        assert!(matches!(
            free_particle_factors(1.0, 0.0, 1.0, &g),
            Err(Error::NonPositiveTime { .. })
        ));
        let g = g.with_exclusion(crate::grid::Window::new(-0.1, 0.1).unwrap()).unwrap();
        assert!(free_particle_factors(1.0, 0.0, 1.0, &g).is_ok());
    }

    #[test]
    fn oscillator_closed_form_values() {
        let a = HarmonicAction { mass: 1.0, omega: 1.0, x0: 0.0 };
        let r = HarmonicTransport { omega: 1.0, offset: 0.0 };
        assert!(a.value(1.0, FRAC_PI_2).re.abs() < 1e-15);
        assert!(r.value(1.0, FRAC_PI_2).norm() < 1e-15);
        // coincidence point, short time
        let near = HarmonicAction { mass: 1.0, omega: 1.0, x0: 0.7 };
        assert!(near.value(0.7, 1e-6).re.abs() < 1e-5);
    }

    #[test]
    fn oscillator_reduces_to_free_particle_at_small_frequency() {
        let osc = HarmonicOscillator::new(1.0, 1e-4);
        let free = FreeParticle::new(1.0);
        let d = osc.action(1.0, 0.0, 1.0) - free.action(1.0, 0.0, 1.0);
        // series: (m w/2) x^2 (cot - 1/(w t)) ~ -m w^2 t x^2 / 6
        assert!(d.abs() < 1e-6, "{d}");
    }

    #[test]
    fn oscillator_factors_require_caustic_windows() {
        let g = SpacetimeGrid::from_extents(-1.0, 1.0, 5, 0.1, 4.0, 40).unwrap();
        assert!(harmonic_factors(1.0, 1.0, 0.0, 1.0, &g).is_err());
        let g = g.with_periodic_exclusions(PI, 0.1).unwrap();
        assert!(harmonic_factors(1.0, 1.0, 0.0, 1.0, &g).is_ok());
    }

    #[test]
    fn analytic_residuals_vanish_for_both_families() {
        let free = FreeAction { mass: 2.0, x0: 0.4 };
        let free_r = FreeTransport { offset: 0.0 };
        let osc = HarmonicAction { mass: 2.0, omega: 1.3, x0: 0.4 };
        let osc_r = HarmonicTransport { omega: 1.3, offset: 0.0 };
        for &t in &[0.3, 0.9, 1.7] {
            for &x in &[-2.0, -0.5, 0.0, 1.1, 3.0] {
                let v = Complex64::new(0.5 * 2.0 * 1.3 * 1.3 * x * x, 0.0);
                assert!(hamilton_jacobi_residual(&free, Complex64::new(0.0, 0.0), 2.0, x, t).norm() < 1e-8);
                assert!(hamilton_jacobi_residual(&osc, v, 2.0, x, t).norm() < 1e-8);
                assert!(curvature_residual(&free, &free_r, 2.0, x, t).norm() < 1e-8);
                assert!(curvature_residual(&osc, &osc_r, 2.0, x, t).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn fit_quadratic_recovers_coefficients() {
        let xs = Grid1d::new(-1.0, 2.0, 9).unwrap();
        let g = fit_quadratic(&xs, |x| 3.0 * x * x - 2.0 * x + 0.5).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-12 && (g[1] + 2.0).abs() < 1e-12 && (g[2] - 0.5).abs() < 1e-12);
    }
}
