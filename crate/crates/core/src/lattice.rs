//! Periodic hypercubic lattices for the scalar-field functional identities and
//! the conformal-factor checks.
//!
//! Sign conventions: the box operator is mostly-minus,
//! `box = d_t^2 - laplacian`. In euclidean signature every axis is spatial and
//! the lattice operator is `-Delta + m^2`. In lorentzian signature axis 0 is
//! time and the operator is `D_tt - Delta_space + m^2`. Functional derivatives
//! are per-site derivatives divided by the cell volume.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;

/// Largest lattice accepted for dense work.
pub const MAX_SITES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Signature {
    #[default]
    Euclidean,
    /// Axis 0 is time.
    Lorentzian,
}

/// Shape, spacing, signature and mass of a periodic lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    dims: Vec<usize>,
    pub spacing: f64,
    pub signature: Signature,
    pub mass: f64,
    /// `i eps` subtracted from the lorentzian operator, `m^2 -> m^2 - i eps`.
    pub regulator: Option<f64>,
}

impl LatticeConfig {
    pub fn new(dims: Vec<usize>, spacing: f64, signature: Signature, mass: f64) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|d| *d < 2) {
            return Err(invalid("dims", "every dimension needs at least two sites"));
        }
        let n = dims.iter().try_fold(1usize, |acc, d| acc.checked_mul(*d));
        if !matches!(n, Some(n) if n <= MAX_SITES) {
            return Err(invalid("dims", alloc::format!("at most {MAX_SITES} sites")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing", "must be positive"));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(invalid("mass", "must be non-negative"));
        }
        if signature == Signature::Lorentzian && dims.len() < 2 {
            return Err(invalid("dims", "lorentzian lattices need a time axis and at least one space axis"));
        }
        Ok(Self { dims, spacing, signature, mass, regulator: None })
    }

    /// Feynman-style `m^2 - i eps` with `eps = 1e-3 m^2` unless given.
    pub fn with_regulator(mut self, eps: Option<f64>) -> Self {
        self.regulator = Some(eps.unwrap_or(1e-3 * self.mass * self.mass));
        self
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dims.len() as i32)
    }

    fn stride(&self, d: usize) -> usize {
        self.dims[d + 1..].iter().product()
    }

    /// Site index to coordinates; axis 0 varies slowest.
    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rest = site;
        let mut out = vec![0; self.dims.len()];
        for d in (0..self.dims.len()).rev() {
            out[d] = rest % self.dims[d];
            rest /= self.dims[d];
        }
        out
    }

    /// Neighbour of `site` one step forward (`+1`) or back (`-1`) along `d`.
    pub fn neighbor(&self, site: usize, d: usize, forward: bool) -> usize {
        let n = self.dims[d];
        let s = self.stride(d);
        let c = (site / s) % n;
        let c2 = if forward { (c + 1) % n } else { (c + n - 1) % n };
        site - c * s + c2 * s
    }

    /// `+1` for spatial axes, `-1` for the lorentzian time axis, in the
    /// operator `sum_d sign_d (-D_dd) + m^2`.
    fn axis_sign(&self, d: usize) -> f64 {
        if self.signature == Signature::Lorentzian && d == 0 {
            -1.0
        } else {
            1.0
        }
    }

    fn mass_term(&self) -> Complex64 {
        Complex64::new(self.mass * self.mass, -self.regulator.unwrap_or(0.0))
    }
}

/// Real values on every site.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub config: LatticeConfig,
    pub values: Vec<f64>,
}

impl LatticeField {
    pub fn new(config: LatticeConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != config.n_sites() {
            return Err(Error::Mismatch("field length differs from the lattice"));
        }
        if let Some(site) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::SiteCondition { what: "non-finite field value", site, value: values[site] });
        }
        Ok(Self { config, values })
    }

    pub fn constant(config: &LatticeConfig, c: f64) -> Self {
        Self { values: vec![c; config.n_sites()], config: config.clone() }
    }

    pub fn from_fn(config: &LatticeConfig, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let values = (0..config.n_sites()).map(|s| f(&config.coords(s))).collect();
        Self::new(config.clone(), values)
    }

    /// `(d phi)^2` per site from forward differences, mostly-minus in
    /// lorentzian signature (time squared minus space squared).
    pub fn gradient_squared(&self) -> Vec<f64> {
        let cfg = &self.config;
        let h = cfg.spacing;
        (0..cfg.n_sites())
            .map(|s| {
                (0..cfg.dims.len())
                    .map(|d| {
                        let diff = (self.values[cfg.neighbor(s, d, true)] - self.values[s]) / h;
                        let sign = if cfg.signature == Signature::Lorentzian && d != 0 { -1.0 } else { 1.0 };
                        sign * diff * diff
                    })
                    .sum()
            })
            .collect()
    }

    fn same_lattice(&self, other: &Self) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Mismatch("fields live on different lattices"));
        }
        Ok(())
    }
}

/// Lattice momentum `(2 pi n_d / L_d)` eigenvalue of the operator.
fn fourier_eigenvalue(cfg: &LatticeConfig, momentum: &[usize]) -> Complex64 {
    let h = cfg.spacing;
    let mut lam = cfg.mass_term();
    for (d, &n) in momentum.iter().enumerate() {
        let s = (PI * n as f64 / cfg.dims[d] as f64).sin();
        lam += cfg.axis_sign(d) * 4.0 / (h * h) * s * s;
    }
    lam
}

/// Dense lattice operator `sum_d sign_d (-D_dd) + m^2 (- i eps)`.
pub fn lattice_operator(cfg: &LatticeConfig) -> DenseMatrix<Complex64> {
    let n = cfg.n_sites();
    let h2 = cfg.spacing * cfg.spacing;
    let mut op = DenseMatrix::<Complex64>::zeros(n);
    for s in 0..n {
        op[(s, s)] += cfg.mass_term();
        for d in 0..cfg.dims.len() {
            let w = cfg.axis_sign(d) / h2;
            op[(s, s)] += 2.0 * w;
            op[(s, cfg.neighbor(s, d, true))] -= w;
            op[(s, cfg.neighbor(s, d, false))] -= w;
        }
    }
    op
}

/// `S[phi] = (1/2) sum phi G phi vol^2` with `G` the inverse lattice operator.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunctional {
    pub config: LatticeConfig,
    pub operator: DenseMatrix<Complex64>,
    pub g: DenseMatrix<Complex64>,
}

impl QuadraticFunctional {
    /// `max |operator G - I|`.
    pub fn identity_defect(&self) -> f64 {
        self.operator.mul(&self.g).distance_from_identity()
    }

    pub fn asymmetry(&self) -> f64 {
        self.g.asymmetry()
    }

    /// `G` has no imaginary part (no regulator).
    pub fn is_real(&self) -> bool {
        self.config.regulator.is_none()
    }
}

/// Relative size below which a Fourier eigenvalue counts as a null mode.
const NULL_MODE_TOLERANCE: f64 = 1e-12;

/// Inverse of the lattice operator by dense LU.
///
/// Before solving, every Fourier eigenvalue of the (translation-invariant)
/// operator is checked; a vanishing one is reported with its lattice
/// momentum.
pub fn lattice_greens_function(cfg: &LatticeConfig) -> Result<QuadraticFunctional> {
    let scale = cfg.mass * cfg.mass + 4.0 * cfg.dims.len() as f64 / (cfg.spacing * cfg.spacing);
    let n = cfg.n_sites();
    for site in 0..n {
        let momentum = cfg.coords(site);
        let lam = fourier_eigenvalue(cfg, &momentum);
        if lam.norm() <= NULL_MODE_TOLERANCE * scale {
            return Err(Error::SingularOperator { momentum, eigenvalue: lam.re });
        }
    }
    let operator = lattice_operator(cfg);
    let g = operator.inverse()?;
    Ok(QuadraticFunctional { config: cfg.clone(), operator, g })
}

/// `sum_x [ (1/2)(dS/dphi)^2 + (1/2)(d phi)^2 + (1/2) m^2 phi^2 ] vol`, with
/// `dS/dphi(x) = sum_y G(x, y) phi(y) vol`.
///
/// Complex only when `G` carries a regulator.
pub fn functional_hj_residual(q: &QuadraticFunctional, phi: &LatticeField) -> Result<Complex64> {
    if q.config != phi.config {
        return Err(Error::Mismatch("field and functional live on different lattices"));
    }
    let vol = q.config.cell_volume();
    let vals: Vec<Complex64> = phi.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let ds = q.g.mul_vec(&vals);
    let grad = phi.gradient_squared();
    let m2 = q.config.mass * q.config.mass;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in 0..vals.len() {
        let d = ds[s] * vol;
        acc += (d * d * 0.5 + 0.5 * grad[s] + 0.5 * m2 * phi.values[s] * phi.values[s]) * vol;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Klein-Gordon evolution

/// `Delta phi` on a purely spatial periodic lattice.
fn laplacian(cfg: &LatticeConfig, phi: &[f64], out: &mut [f64]) {
    let h2 = cfg.spacing * cfg.spacing;
    for s in 0..phi.len() {
        let mut acc = 0.0;
        for d in 0..cfg.dims.len() {
            acc += phi[cfg.neighbor(s, d, true)] + phi[cfg.neighbor(s, d, false)] - 2.0 * phi[s];
        }
        out[s] = acc / h2;
    }
}

/// Leapfrog history and the stencil residual along it.
#[derive(Debug, Clone, PartialEq)]
pub struct KleinGordonRun {
    /// Field at `t = 0, dt, 2 dt, ...`.
    pub history: Vec<Vec<f64>>,
    /// `max_x |(phi^{n+1} - 2 phi^n + phi^{n-1})/dt^2 - Delta phi^n + m^2 phi^n|`
    /// for every interior step `n`.
    pub residual: Vec<f64>,
}

impl KleinGordonRun {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Explicit evolution of `phi'' = Delta phi - m^2 phi` on the (all-spatial)
/// lattice of `phi0`.
///
/// The first step is the Taylor start
/// `phi^1 = phi^0 + dt v + (dt^2/2)(Delta phi^0 - m^2 phi^0)`; after that the
/// scheme is the standard three-level leapfrog.
pub fn lattice_klein_gordon_check(phi0: &LatticeField, velocity: &LatticeField, steps: usize, dt: f64) -> Result<KleinGordonRun> {
    phi0.same_lattice(velocity)?;
    let cfg = &phi0.config;
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    if dt > cfg.spacing {
        return Err(Error::CflViolation { dt, spacing: cfg.spacing });
    }
    let n = cfg.n_sites();
    let m2 = cfg.mass * cfg.mass;
    let mut lap = vec![0.0; n];
    let mut history = Vec::with_capacity(steps + 1);
    history.push(phi0.values.clone());
    if steps >= 1 {
        laplacian(cfg, &phi0.values, &mut lap);
        let first: Vec<f64> = (0..n)
            .map(|s| phi0.values[s] + dt * velocity.values[s] + 0.5 * dt * dt * (lap[s] - m2 * phi0.values[s]))
            .collect();
        history.push(first);
    }
    for k in 1..steps {
        laplacian(cfg, &history[k], &mut lap);
        let next: Vec<f64> = (0..n)
            .map(|s| 2.0 * history[k][s] - history[k - 1][s] + dt * dt * (lap[s] - m2 * history[k][s]))
            .collect();
        history.push(next);
    }
    let residual = stencil_kg_residual(cfg, &history, dt);
    if history.last().is_some_and(|h| h.iter().any(|v| !v.is_finite())) {
        return Err(invalid("dt", "evolution produced non-finite values"));
    }
    Ok(KleinGordonRun { history, residual })
}

/// Stencil residual of `phi_tt - Delta phi + m^2 phi` for a time series of
/// lattice fields spaced by `dt`.
pub fn stencil_kg_residual(cfg: &LatticeConfig, history: &[Vec<f64>], dt: f64) -> Vec<f64> {
    let n = cfg.n_sites();
    let m2 = cfg.mass * cfg.mass;
    let mut lap = vec![0.0; n];
    (1..history.len().saturating_sub(1))
        .map(|k| {
            laplacian(cfg, &history[k], &mut lap);
            (0..n)
                .map(|s| {
                    let tt = (history[k + 1][s] - 2.0 * history[k][s] + history[k - 1][s]) / (dt * dt);
                    (tt - lap[s] + m2 * history[k][s]).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Frequency `Omega` of the plane wave with integer wave numbers `modes` that
/// the leapfrog scheme propagates exactly:
/// `(2/dt^2)(1 - cos(Omega dt)) = sum_d (4/h^2) sin^2(k_d h/2) + m^2`.
pub fn lattice_dispersion(cfg: &LatticeConfig, modes: &[usize], dt: f64) -> Result<f64> {
    if modes.len() != cfg.dims.len() {
        return Err(Error::Mismatch("one wave number per lattice axis"));
    }
    let h = cfg.spacing;
    let mut rhs = cfg.mass * cfg.mass;
    for (d, &n) in modes.iter().enumerate() {
        let k = 2.0 * PI * n as f64 / (cfg.dims[d] as f64 * h);
        let s = (0.5 * k * h).sin();
        rhs += 4.0 / (h * h) * s * s;
    }
    let c = 1.0 - 0.5 * dt * dt * rhs;
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::CflViolation { dt, spacing: h });
    }
    Ok(c.acos() / dt)
}

/// `cos(k.x - Omega t + phase)` sampled on the lattice.
pub fn plane_wave(cfg: &LatticeConfig, modes: &[usize], omega: f64, t: f64, phase: f64) -> Result<LatticeField> {
    if modes.len() != cfg.dims.len() {
        return Err(Error::Mismatch("one wave number per lattice axis"));
    }
    LatticeField::from_fn(cfg, |c| {
        let kx: f64 = c
            .iter()
            .zip(modes)
            .enumerate()
            .map(|(d, (ci, n))| 2.0 * PI * *n as f64 * *ci as f64 / cfg.dims[d] as f64)
            .sum();
        (kx - omega * t + phase).cos()
    })
}

// ---------------------------------------------------------------------------
// Conformal factor

/// A real function of one variable with its first two derivatives.
pub trait PointFunction: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    fn second_derivative(&self, x: f64) -> f64;
}

/// `c0 + c1 x + c2 x^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Quadratic1d {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Quadratic1d {
    pub fn constant(c0: f64) -> Self {
        Self { c0, c1: 0.0, c2: 0.0 }
    }
}

impl PointFunction for Quadratic1d {
    fn value(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x + self.c2 * x * x
    }
    fn derivative(&self, x: f64) -> f64 {
        self.c1 + 2.0 * self.c2 * x
    }
    fn second_derivative(&self, _x: f64) -> f64 {
        2.0 * self.c2
    }
}

/// `amp exp(rate x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential1d {
    pub amp: f64,
    pub rate: f64,
}

impl PointFunction for Exponential1d {
    fn value(&self, x: f64) -> f64 {
        self.amp * (self.rate * x).exp()
    }
    fn derivative(&self, x: f64) -> f64 {
        self.rate * self.value(x)
    }
    fn second_derivative(&self, x: f64) -> f64 {
        self.rate * self.rate * self.value(x)
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn exp_checked(x: f64, what: &'static str, site: usize) -> Result<f64> {
    let v = x.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::SiteCondition { what, site, value: x })
    }
}

/// `R[sigma] = (Lambda/8) sum_x exp(2 sigma) vol`.
pub fn conformal_transport(sigma: &LatticeField, lambda: f64) -> Result<f64> {
    let vol = sigma.config.cell_volume();
    let terms = sigma
        .values
        .iter()
        .enumerate()
        .map(|(s, v)| exp_checked(2.0 * v, "exp(2 sigma) overflow", s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(lambda / 8.0 * compensated_sum(terms.into_iter()) * vol)
}

/// `dR/dsigma(x) = (Lambda/4) exp(2 sigma(x))`.
pub fn conformal_transport_derivative(sigma: &LatticeField, lambda: f64) -> Result<LatticeField> {
    let values = sigma
        .values
        .iter()
        .enumerate()
        .map(|(s, v)| Ok(lambda / 4.0 * exp_checked(2.0 * v, "exp(2 sigma) overflow", s)?))
        .collect::<Result<Vec<f64>>>()?;
    LatticeField::new(sigma.config.clone(), values)
}

/// Result of [`conformal_transport_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportCheck {
    pub value: f64,
    /// Largest relative gap between the central difference and the analytic
    /// functional derivative (absolute where the analytic value is zero).
    pub max_deviation: f64,
}

/// Perturbation used by [`conformal_transport_check`].
pub const FUNCTIONAL_EPS: f64 = 1e-6;

/// Evaluate `R[sigma]` and compare single-site central differences, divided by
/// the cell volume, with `(Lambda/4) exp(2 sigma)`.
pub fn conformal_transport_check(sigma: &LatticeField, lambda: f64) -> Result<TransportCheck> {
    let value = conformal_transport(sigma, lambda)?;
    let analytic = conformal_transport_derivative(sigma, lambda)?;
    let vol = sigma.config.cell_volume();
    let mut probe = sigma.clone();
    let mut worst: f64 = 0.0;
    for s in 0..sigma.values.len() {
        let base = sigma.values[s];
        probe.values[s] = base + FUNCTIONAL_EPS;
        let up = conformal_transport(&probe, lambda)?;
        probe.values[s] = base - FUNCTIONAL_EPS;
        let down = conformal_transport(&probe, lambda)?;
        probe.values[s] = base;
        let fd = (up - down) / (2.0 * FUNCTIONAL_EPS) / vol;
        let exact = analytic.values[s];
        let dev = if exact != 0.0 { ((fd - exact) / exact).abs() } else { fd.abs() };
        worst = worst.max(dev);
    }
    Ok(TransportCheck { value, max_deviation: worst })
}

/// Residual field of the real-part constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPartResidual {
    pub values: Vec<f64>,
    /// `W` vanished at some site, outside the regime where the constraint was
    /// derived.
    pub w_vanishes: bool,
}

/// `(d phi)^2 + f m^2 phi^2 + 4 e^{4 sigma} W^2 + (e^{4 sigma}/f) W'^2
///  - (d sigma)^2 - (Lambda^2/16) e^{4 sigma}` at every site, with
/// `W = W(phi)` and `f = f(sigma)`.
pub fn conformal_real_part_residual(
    phi: &LatticeField,
    sigma: &LatticeField,
    w: &dyn PointFunction,
    f: &dyn PointFunction,
    lambda: f64,
) -> Result<RealPartResidual> {
    phi.same_lattice(sigma)?;
    let m2 = phi.config.mass * phi.config.mass;
    let dphi = phi.gradient_squared();
    let dsigma = sigma.gradient_squared();
    let mut values = Vec::with_capacity(phi.values.len());
    let mut w_vanishes = false;
    for s in 0..phi.values.len() {
        let (p, sg) = (phi.values[s], sigma.values[s]);
        let fv = f.value(sg);
        if !(fv > 0.0) {
            return Err(Error::SiteCondition { what: "f(sigma) must be positive", site: s, value: fv });
        }
        let e4 = exp_checked(4.0 * sg, "exp(4 sigma) overflow", s)?;
        let (wv, wd) = (w.value(p), w.derivative(p));
        w_vanishes |= wv == 0.0;
        values.push(dphi[s] + fv * m2 * p * p + 4.0 * e4 * wv * wv + e4 / fv * wd * wd - dsigma[s] - lambda * lambda / 16.0 * e4);
    }
    Ok(RealPartResidual { values, w_vanishes })
}

/// `-2 (dR/dsigma)(2 e^{2 sigma} W) + Lambda W e^{4 sigma}` at every site.
///
/// `W(phi)` must not vanish anywhere: the imaginary-part equation was obtained
/// by dividing through by it.
pub fn conformal_imaginary_part_residual(
    sigma: &LatticeField,
    phi: &LatticeField,
    w: &dyn PointFunction,
    dr_dsigma: &LatticeField,
    lambda: f64,
) -> Result<Vec<f64>> {
    sigma.same_lattice(phi)?;
    sigma.same_lattice(dr_dsigma)?;
    let mut out = Vec::with_capacity(sigma.values.len());
    for s in 0..sigma.values.len() {
        let wv = w.value(phi.values[s]);
        if wv == 0.0 || !wv.is_finite() {
            return Err(Error::SiteCondition { what: "W(phi) must be non-zero", site: s, value: wv });
        }
        let e2 = exp_checked(2.0 * sigma.values[s], "exp(2 sigma) overflow", s)?;
        out.push(-2.0 * dr_dsigma.values[s] * (2.0 * e2 * wv) + lambda * wv * e2 * e2);
    }
    Ok(out)
}

/// Boxed point function, handy for configuration-driven callers.
pub type SharedPointFunction = Arc<dyn PointFunction>;

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg1(n: usize, m: f64) -> LatticeConfig {
        LatticeConfig::new(vec![n], 1.0, Signature::Euclidean, m).unwrap()
    }

    #[test]
    fn two_site_oracle() {
        let q = lattice_greens_function(&cfg1(2, 1.0)).unwrap();
        let want_op = [[3.0, -2.0], [-2.0, 3.0]];
        let want_g = [[0.6, 0.4], [0.4, 0.6]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((q.operator[(i, j)] - Complex64::new(want_op[i][j], 0.0)).norm() < 1e-12);
                assert!((q.g[(i, j)] - Complex64::new(want_g[i][j], 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn greens_function_properties() {
        let cfg = LatticeConfig::new(vec![4, 5], 0.5, Signature::Euclidean, 0.8).unwrap();
        let q = lattice_greens_function(&cfg).unwrap();
        assert!(q.identity_defect() < 1e-8);
        assert!(q.asymmetry() < 1e-12);

        let heavy = lattice_greens_function(&cfg1(6, 1e3)).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1e-6 } else { 0.0 };
                assert!((heavy.g[(i, j)].re - want).abs() <= 1e-2 * 1e-6);
            }
        }
    }

    #[test]
    fn massless_euclidean_zero_mode_is_reported() {
        let err = lattice_greens_function(&cfg1(4, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularOperator { ref momentum, .. } if momentum == &vec![0]));
    }

    #[test]
    fn lorentzian_null_mode_and_regulator() {
        // time and space with equal extents: the mode (n, n) is null when m = 0
        let cfg = LatticeConfig::new(vec![4, 4], 1.0, Signature::Lorentzian, 0.0).unwrap();
        assert!(matches!(lattice_greens_function(&cfg), Err(Error::SingularOperator { .. })));
        let cfg = LatticeConfig::new(vec![4, 4], 1.0, Signature::Lorentzian, 1.0).unwrap();
        let reg = cfg.clone().with_regulator(None);
        let q = lattice_greens_function(&reg).unwrap();
        assert!(q.identity_defect() < 1e-8);
        assert!(!q.is_real());
    }

    #[test]
    fn euclidean_functional_is_positive() {
        let cfg = LatticeConfig::new(vec![3, 3], 1.0, Signature::Euclidean, 1.0).unwrap();
        let q = lattice_greens_function(&cfg).unwrap();
        let zero = LatticeField::constant(&cfg, 0.0);
        assert_eq!(functional_hj_residual(&q, &zero).unwrap(), Complex64::new(0.0, 0.0));
        let phi = LatticeField::from_fn(&cfg, |c| (c[0] as f64 - 1.0) * 0.3 + c[1] as f64 * 0.1).unwrap();
        let v = functional_hj_residual(&q, &phi).unwrap();
        assert!(v.re > 0.0 && v.im == 0.0);
        let other = LatticeField::constant(&cfg1(9, 1.0), 1.0);
        assert!(functional_hj_residual(&q, &other).is_err());
    }

    #[test]
    fn plane_wave_oracle_has_no_residual() {
        let cfg = LatticeConfig::new(vec![16, 8], 0.5, Signature::Euclidean, 0.7).unwrap();
        let dt = 0.1;
        let modes = [2, 1];
        let omega = lattice_dispersion(&cfg, &modes, dt).unwrap();
        let history: Vec<Vec<f64>> = (0..20)
            .map(|k| plane_wave(&cfg, &modes, omega, k as f64 * dt, 0.3).unwrap().values)
            .collect();
        let res = stencil_kg_residual(&cfg, &history, dt);
        assert!(res.iter().all(|r| *r <= 1e-8));
    }

    #[test]
    fn leapfrog_tracks_plane_wave() {
        let cfg = LatticeConfig::new(vec![32], 0.25, Signature::Euclidean, 1.0).unwrap();
        let modes = [1];
        let dt = 0.01;
        let omega = lattice_dispersion(&cfg, &modes, dt).unwrap();
        let phi0 = plane_wave(&cfg, &modes, omega, 0.0, 0.0).unwrap();
        let vel = plane_wave(&cfg, &modes, omega, 0.0, -PI / 2.0).unwrap();
        let vel = LatticeField::new(cfg.clone(), vel.values.iter().map(|v| omega * v).collect()).unwrap();
        let run = lattice_klein_gordon_check(&phi0, &vel, 100, dt).unwrap();
        assert!(run.max_residual() <= 1e-8);
        let exact = plane_wave(&cfg, &modes, omega, 100.0 * dt, 0.0).unwrap();
        let gap = run.history[100].iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-4, "{gap}");
    }

    #[test]
    fn trivial_klein_gordon_cases() {
        let cfg = cfg1(8, 1.0);
        let zero = LatticeField::constant(&cfg, 0.0);
        let run = lattice_klein_gordon_check(&zero, &zero, 10, 0.5).unwrap();
        assert_eq!(run.max_residual(), 0.0);
        let massless = cfg1(8, 0.0);
        let c = LatticeField::constant(&massless, 0.7);
        let z = LatticeField::constant(&massless, 0.0);
        let run = lattice_klein_gordon_check(&c, &z, 10, 0.5).unwrap();
        assert_eq!(run.max_residual(), 0.0);
        assert!(run.history.iter().all(|h| h.iter().all(|v| *v == 0.7)));
        assert!(matches!(lattice_klein_gordon_check(&c, &z, 10, 2.0), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn transport_values() {
        let cfg = LatticeConfig::new(vec![4, 4], 1.0, Signature::Euclidean, 1.0).unwrap();
        let zero = LatticeField::constant(&cfg, 0.0);
        assert!((conformal_transport(&zero, 8.0).unwrap() - 16.0).abs() < 1e-12);
        let cfg2 = LatticeConfig::new(vec![4, 4], 0.5, Signature::Euclidean, 1.0).unwrap();
        let c = LatticeField::constant(&cfg2, 0.3);
        let want = 2.0 / 8.0 * 16.0 * (0.6f64).exp() * 0.25;
        assert!((conformal_transport(&c, 2.0).unwrap() - want).abs() < 1e-12);
        let check = conformal_transport_check(&c, 2.0).unwrap();
        assert!(check.max_deviation < 1e-6);
        let huge = LatticeField::constant(&cfg2, 400.0);
        assert!(matches!(conformal_transport(&huge, 1.0), Err(Error::SiteCondition { .. })));
    }

    #[test]
    fn real_part_examples() {
        let cfg = LatticeConfig::new(vec![3, 3], 1.0, Signature::Euclidean, 1.0).unwrap();
        let lambda = 1.7;
        let phi = LatticeField::constant(&cfg, 0.0);
        let sigma = LatticeField::constant(&cfg, 0.4);
        let w = Quadratic1d::constant(lambda / 8.0);
        let f = Quadratic1d::constant(1.0);
        let r = conformal_real_part_residual(&phi, &sigma, &w, &f, lambda).unwrap();
        assert!(r.values.iter().all(|v| v.abs() <= 1e-12));

        let sigma = LatticeField::from_fn(&cfg, |c| 0.1 * c[0] as f64).unwrap();
        let zero_w = Quadratic1d::constant(0.0);
        let r = conformal_real_part_residual(&phi, &sigma, &zero_w, &f, lambda).unwrap();
        assert!(r.w_vanishes);
        let ds = sigma.gradient_squared();
        for s in 0..9 {
            let want = -ds[s] - lambda * lambda / 16.0 * (4.0 * sigma.values[s]).exp();
            assert!((r.values[s] - want).abs() < 1e-14);
        }

        let flat = LatticeField::constant(&cfg, 0.2);
        let r = conformal_real_part_residual(&phi, &flat, &zero_w, &f, 0.0).unwrap();
        assert!(r.values.iter().all(|v| *v == 0.0));

        let bad_f = Quadratic1d::constant(-1.0);
        assert!(conformal_real_part_residual(&phi, &flat, &w, &bad_f, lambda).is_err());
    }

    #[test]
    fn imaginary_part_examples() {
        let cfg = LatticeConfig::new(vec![2, 3], 1.0, Signature::Euclidean, 1.0).unwrap();
        let lambda = 2.5;
        let sigma = LatticeField::from_fn(&cfg, |c| 0.2 * c[0] as f64 - 0.1 * c[1] as f64).unwrap();
        let phi = LatticeField::from_fn(&cfg, |c| 0.5 + c[1] as f64).unwrap();
        let w = Quadratic1d { c0: 1.0, c1: 0.3, c2: 0.0 };
        let dr = conformal_transport_derivative(&sigma, lambda).unwrap();
        let r = conformal_imaginary_part_residual(&sigma, &phi, &w, &dr, lambda).unwrap();
        assert!(r.iter().all(|v| v.abs() <= 1e-12));

        let zero = LatticeField::constant(&cfg, 0.0);
        let one = Quadratic1d::constant(1.0);
        let r = conformal_imaginary_part_residual(&sigma, &phi, &one, &zero, lambda).unwrap();
        for (v, s) in r.iter().zip(&sigma.values) {
            assert!((v - lambda * (4.0 * s).exp()).abs() < 1e-12);
        }
        let r = conformal_imaginary_part_residual(&sigma, &phi, &one, &zero, 0.0).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));

        let w0 = Quadratic1d::constant(0.0);
        assert!(matches!(
            conformal_imaginary_part_residual(&sigma, &phi, &w0, &dr, lambda),
            Err(Error::SiteCondition { .. })
        ));
    }

    #[test]
    fn neighbours_wrap() {
        let cfg = LatticeConfig::new(vec![3, 4], 1.0, Signature::Euclidean, 1.0).unwrap();
        let s = 4 * 2 + 3; // (2, 3)
        assert_eq!(cfg.coords(cfg.neighbor(s, 0, true)), vec![0, 3]);
        assert_eq!(cfg.coords(cfg.neighbor(s, 1, true)), vec![2, 0]);
        assert_eq!(cfg.coords(cfg.neighbor(0, 1, false)), vec![0, 3]);
        assert!(LatticeConfig::new(vec![1, 4], 1.0, Signature::Euclidean, 1.0).is_err());
        assert!(LatticeConfig::new(vec![128, 64], 1.0, Signature::Euclidean, 1.0).is_err());
    }
}
