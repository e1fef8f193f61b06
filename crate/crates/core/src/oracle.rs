//! Reference Schrödinger dynamics: Crank-Nicolson evolution, the residual of
//! `i hbar K_t = -(hbar^2/2m) K_xx + V K` on a sampled `K`, and propagation of
//! a state by a closed-form two-point kernel.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::field::{finite_difference, Axis, ComplexField, Order};
use crate::grid::Grid1d;
use crate::linalg::solve_tridiagonal;
use crate::propagator::{PropagatorFactors, TwoPointAction};
use crate::quadratic::QuadraticPotential;

/// Boundary amplitude above which [`cn_evolve`] warns.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Potential `V(x, t)` for the oracle.
#[derive(Clone)]
pub enum PotentialSpec {
    Zero,
    Quadratic(QuadraticPotential),
    /// Arbitrary complex potential.
    General(Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>),
}

impl core::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PotentialSpec::Zero => f.write_str("Zero"),
            PotentialSpec::Quadratic(_) => f.write_str("Quadratic(..)"),
            PotentialSpec::General(_) => f.write_str("General(..)"),
        }
    }
}

impl PotentialSpec {
    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        match self {
            PotentialSpec::Zero => Complex64::new(0.0, 0.0),
            PotentialSpec::Quadratic(q) => Complex64::new(q.eval(x, t), 0.0),
            PotentialSpec::General(f) => f(x, t),
        }
    }
}

/// A wavefunction on a spatial grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub space: Grid1d,
    pub psi: Vec<Complex64>,
    pub t: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl WaveState {
    pub fn new(space: Grid1d, psi: Vec<Complex64>, t: f64, hbar: f64, mass: f64) -> Result<Self> {
        if psi.len() != space.n {
            return Err(Error::Mismatch("wavefunction length differs from the grid"));
        }
        if !(hbar > 0.0) || !(mass > 0.0) {
            return Err(invalid("hbar/mass", "must be positive"));
        }
        if psi.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(invalid("psi", "wavefunction must be finite"));
        }
        Ok(Self { space, psi, t, hbar, mass })
    }

    /// Normalised `exp(-(x - c)^2 / (4 sigma^2) + i k x)`; the density has
    /// standard deviation `sigma`.
    pub fn gaussian(space: Grid1d, centre: f64, sigma: f64, wavenumber: f64, t: f64, hbar: f64, mass: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(invalid("sigma", "must be positive"));
        }
        let psi = space
            .points()
            .map(|x| Complex64::new(-(x - centre).powi(2) / (4.0 * sigma * sigma), wavenumber * x).exp())
            .collect();
        let mut s = Self::new(space, psi, t, hbar, mass)?;
        s.normalize();
        Ok(s)
    }

    /// `sqrt(sum |psi|^2 h)`.
    pub fn norm(&self) -> f64 {
        (self.psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.space.spacing()).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.psi.iter_mut().for_each(|v| *v /= n);
        }
    }

    /// `<x>` of the normalised density.
    pub fn mean_position(&self) -> f64 {
        let (mut w, mut m) = (0.0, 0.0);
        for (x, v) in self.space.points().zip(&self.psi) {
            w += v.norm_sqr();
            m += x * v.norm_sqr();
        }
        m / w
    }

    /// Standard deviation of the density.
    pub fn width(&self) -> f64 {
        let mean = self.mean_position();
        let (mut w, mut m2) = (0.0, 0.0);
        for (x, v) in self.space.points().zip(&self.psi) {
            w += v.norm_sqr();
            m2 += (x - mean).powi(2) * v.norm_sqr();
        }
        (m2 / w).sqrt()
    }

    /// `sqrt(sum |psi - other|^2 h)` on a shared grid.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::Mismatch("states live on different grids"));
        }
        let s: f64 = self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.space.spacing()).sqrt())
    }
}

/// Result of [`cn_evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub state: WaveState,
    /// Largest `|psi|` next to the walls when it exceeded
    /// [`BOUNDARY_TOLERANCE`]; the walls reflect, so results are suspect.
    pub boundary_warning: Option<f64>,
}

/// Crank-Nicolson evolution with Dirichlet walls at both grid ends.
///
/// `V` is evaluated at the step midpoint `t + dt/2`.
pub fn cn_evolve(state: &WaveState, pot: &PotentialSpec, dt: f64, n_steps: usize) -> Result<Evolution> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "must be positive"));
    }
    let n = state.space.n;
    let m = n - 2;
    let h = state.space.spacing();
    let (hbar, mass) = (state.hbar, state.mass);
    let alpha = I * (dt / (2.0 * hbar));
    let kinetic_off = -hbar * hbar / (2.0 * mass * h * h);
    let kinetic_diag = hbar * hbar / (mass * h * h);
    let off = alpha * kinetic_off;

    let xs: Vec<f64> = state.space.points().collect();
    let mut psi = state.psi.clone();
    psi[0] = Complex64::new(0.0, 0.0);
    psi[n - 1] = Complex64::new(0.0, 0.0);
    let mut diag = vec![Complex64::new(0.0, 0.0); m];
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); m];
    let mut worst_edge: f64 = 0.0;
    let mut t = state.t;
    for _ in 0..n_steps {
        let tm = t + 0.5 * dt;
        for k in 0..m {
            let i = k + 1;
            let hd = kinetic_diag + pot.eval(xs[i], tm);
            let h_psi = hd * psi[i] + kinetic_off * (psi[i - 1] + psi[i + 1]);
            diag[k] = 1.0 + alpha * hd;
            rhs[k] = psi[i] - alpha * h_psi;
        }
        solve_tridiagonal(off, &diag, off, &rhs, &mut out, &mut scratch)?;
        psi[1..n - 1].copy_from_slice(&out);
        t += dt;
        worst_edge = worst_edge.max(psi[1].norm()).max(psi[n - 2].norm());
    }
    if psi.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite { what: "wavefunction", x: f64::NAN, t });
    }
    let boundary_warning = (worst_edge > BOUNDARY_TOLERANCE).then_some(worst_edge);
    Ok(Evolution {
        state: WaveState { psi, t, ..state.clone() },
        boundary_warning,
    })
}

/// Residual field and its relative size.
#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerResidual {
    pub field: ComplexField,
    /// `max |residual| / max |K|` over stencil-valid nodes.
    pub relative: f64,
}

/// `i hbar K_t + (hbar^2 / 2m) K_xx - V K` at every stencil-valid node.
pub fn schrodinger_residual(k: &ComplexField, pot: &PotentialSpec, hbar: f64, mass: f64) -> Result<SchrodingerResidual> {
    let kt = finite_difference(k, Axis::Time, Order::First)?;
    let kxx = finite_difference(k, Axis::Space, Order::Second)?;
    let lhs = kt.zip_with(&kxx, |a, b| I * hbar * a + b * (hbar * hbar / (2.0 * mass)))?;
    let g = k.grid();
    let mut values = lhs.values().to_vec();
    for j in 0..g.n_t() {
        for i in 0..g.n_x() {
            if lhs.is_valid(i, j) {
                values[g.index(i, j)] -= pot.eval(g.x(i), g.t(j)) * k.at(i, j);
            }
        }
    }
    let field = ComplexField::from_parts(g.clone(), values, lhs.mask().to_vec())?;
    let mask = field.mask().to_vec();
    let top = field.max_abs().ok_or(Error::NoValidNodes)?;
    let scale = k.max_abs_where(&mask).ok_or(Error::NoValidNodes)?;
    if !(scale > 0.0) {
        return Err(invalid("K", "vanishes on every valid node"));
    }
    Ok(SchrodingerResidual { field, relative: top / scale })
}

/// A closed-form two-point kernel `N exp(R + iS/hbar)`.
#[derive(Clone)]
pub struct Kernel {
    pub family: Arc<dyn TwoPointAction>,
    pub hbar: f64,
    pub mass: f64,
    /// Elapsed time at which `N` is matched to the free kernel at `x = x0 = 0`.
    pub reference_tau: Option<f64>,
}

impl core::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Kernel")
            .field("hbar", &self.hbar)
            .field("mass", &self.mass)
            .field("reference_tau", &self.reference_tau)
            .finish_non_exhaustive()
    }
}

/// Default reference elapsed time for the normalisation match.
pub const REFERENCE_TAU: f64 = 1e-6;

impl Kernel {
    pub fn new(family: Arc<dyn TwoPointAction>, hbar: f64, mass: f64) -> Self {
        Self { family, hbar, mass, reference_tau: None }
    }

    pub fn from_factors(factors: &PropagatorFactors) -> Result<Self> {
        let tp = factors.two_point.as_ref().ok_or(Error::MissingTwoPoint)?;
        Ok(Self::new(tp.family.clone(), factors.hbar, factors.mass))
    }

    pub fn normalized_at(mut self, tau: f64) -> Self {
        self.reference_tau = Some(tau);
        self
    }

    /// Constant `N` making the kernel equal `(2 pi i hbar tau/m)^(-1/2)` at
    /// `x = x0 = 0`, elapsed time `reference_tau`. At short times every
    /// quadratic family reduces to the free kernel.
    pub fn normalization(&self) -> Result<Complex64> {
        let tau = self.reference_tau.ok_or(Error::UnnormalizedKernel)?;
        if !(tau > 0.0) {
            return Err(invalid("reference_tau", "must be positive"));
        }
        let free = (Complex64::new(0.0, 2.0 * PI * self.hbar * tau / self.mass)).sqrt().inv();
        let raw = self.raw(0.0, 0.0, tau);
        let n = free / raw;
        if !(n.re.is_finite() && n.im.is_finite()) {
            return Err(Error::NonFinite { what: "kernel normalisation", x: 0.0, t: tau });
        }
        Ok(n)
    }

    fn raw(&self, x: f64, x0: f64, tau: f64) -> Complex64 {
        (self.family.transport(x, x0, tau) + I * (self.family.action(x, x0, tau) / self.hbar)).exp()
    }
}

/// `psi(x, t) = ∫ K(x, t; x0, t0) psi0(x0) dx0` by the trapezoidal rule on
/// the grid of `psi0`, with `t0 = psi0.t`.
pub fn kernel_propagate(psi0: &WaveState, kernel: &Kernel, t_target: f64) -> Result<WaveState> {
    let tau = t_target - psi0.t;
    if !(tau > 0.0) {
        return Err(invalid("t_target", "kernel propagation needs t_target > t0"));
    }
    let norm = kernel.normalization()?;
    let h = psi0.space.spacing();
    let n = psi0.space.n;
    let xs: Vec<f64> = psi0.space.points().collect();
    let weight = |k: usize| if k == 0 || k + 1 == n { 0.5 * h } else { h };
    let mut psi = Vec::with_capacity(n);
    for &x in &xs {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &x0) in xs.iter().enumerate() {
            let v = psi0.psi[k];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            acc += kernel.raw(x, x0, tau) * v * weight(k);
        }
        let val = acc * norm;
        if !(val.re.is_finite() && val.im.is_finite()) {
            return Err(Error::NonFinite { what: "propagated state", x, t: t_target });
        }
        psi.push(val);
    }
    Ok(WaveState { psi, t: t_target, ..psi0.clone() })
}

/// Wraps a two-point family and multiplies its kernel by `exp(c x^2)`.
#[derive(Debug, Clone, Copy)]
pub struct Tilted<A> {
    pub inner: A,
    pub coefficient: f64,
}

impl<A: TwoPointAction> TwoPointAction for Tilted<A> {
    fn action(&self, x: f64, x0: f64, tau: f64) -> f64 {
        self.inner.action(x, x0, tau)
    }
    fn transport(&self, x: f64, x0: f64, tau: f64) -> Complex64 {
        self.inner.transport(x, x0, tau) + self.coefficient * x * x
    }
}
