//! Minisuperspace cosmology: scale factor `a` and a homogeneous scalar `phi`
//! with lapse `N = 1`, in units `G = c = 1`.
//!
//! Two sets of conventions live here side by side and are never reconciled.
//! The Hamiltonian constraint uses `(2 pi / 3a) p_a^2` and `(Lambda / 8 pi) a^3`;
//! the complex-action system uses unit-normalised `(dS_a/da)^2` and
//! `(Lambda / 3) a^2`. The Lagrangian display elsewhere carries the opposite
//! sign on the `a^3 Lambda` term; the constraint form is the one implemented.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::convergence::loglog_slope;
use crate::error::{invalid, Error, Result};
use crate::field::{derivative_samples, second_derivative_samples};
use crate::grid::Grid1d;
use crate::ode::rk4_step;

/// Scalar potential `V(phi)` with its derivative.
pub trait ScalarPotential: Send + Sync {
    fn value(&self, phi: f64) -> f64;
    fn derivative(&self, phi: f64) -> f64;
}

/// `V = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vacuum;

impl ScalarPotential for Vacuum {
    fn value(&self, _phi: f64) -> f64 {
        0.0
    }
    fn derivative(&self, _phi: f64) -> f64 {
        0.0
    }
}

/// `V = m^2 phi^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct MassiveScalar {
    pub mass: f64,
}

impl ScalarPotential for MassiveScalar {
    fn value(&self, phi: f64) -> f64 {
        0.5 * self.mass * self.mass * phi * phi
    }
    fn derivative(&self, phi: f64) -> f64 {
        self.mass * self.mass * phi
    }
}

/// Sign of the gravitational kinetic term in the constraint.
///
/// The sign depends on signature and lapse conventions; `Printed` is the one
/// consistent with the Friedmann equation used for evolution. `Flipped` only
/// changes [`hamiltonian_constraint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KineticSign {
    #[default]
    Printed,
    Flipped,
}

/// Curvature, cosmological constant, potential and `hbar`.
#[derive(Clone)]
pub struct CosmoParams {
    pub k: i8,
    pub lambda: f64,
    pub potential: Arc<dyn ScalarPotential>,
    pub hbar: f64,
    pub kinetic_sign: KineticSign,
}

impl core::fmt::Debug for CosmoParams {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CosmoParams")
            .field("k", &self.k)
            .field("lambda", &self.lambda)
            .field("hbar", &self.hbar)
            .field("kinetic_sign", &self.kinetic_sign)
            .finish_non_exhaustive()
    }
}

impl CosmoParams {
    pub fn new(k: i8, lambda: f64, potential: Arc<dyn ScalarPotential>, hbar: f64) -> Result<Self> {
        if !(-1..=1).contains(&k) {
            return Err(invalid("k", "spatial curvature must be -1, 0 or 1"));
        }
        if !lambda.is_finite() {
            return Err(invalid("Lambda", "must be finite"));
        }
        if !(hbar > 0.0) {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(Self { k, lambda, potential, hbar, kinetic_sign: KineticSign::Printed })
    }

    /// Flat, vacuum, `hbar = 1`.
    pub fn vacuum(lambda: f64) -> Self {
        Self { k: 0, lambda, potential: Arc::new(Vacuum), hbar: 1.0, kinetic_sign: KineticSign::Printed }
    }

    pub fn with_kinetic_sign(mut self, sign: KineticSign) -> Self {
        self.kinetic_sign = sign;
        self
    }
}

/// Phase-space point `(a, p_a, phi, p_phi)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosmoState {
    pub a: f64,
    pub p_a: f64,
    pub phi: f64,
    pub p_phi: f64,
    pub t: f64,
}

/// Velocity form `(a, a', phi, phi')` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub t: f64,
    pub a: f64,
    pub adot: f64,
    pub phi: f64,
    pub phidot: f64,
}

impl Kinematics {
    /// `p_a = -(3 / 4 pi) a a'`, `p_phi = a^3 phi'`.
    pub fn to_state(&self) -> CosmoState {
        CosmoState {
            a: self.a,
            p_a: -3.0 / (4.0 * PI) * self.a * self.adot,
            phi: self.phi,
            p_phi: self.a.powi(3) * self.phidot,
            t: self.t,
        }
    }

    pub fn from_state(s: &CosmoState) -> Self {
        Self {
            t: s.t,
            a: s.a,
            adot: -4.0 * PI * s.p_a / (3.0 * s.a),
            phi: s.phi,
            phidot: s.p_phi / s.a.powi(3),
        }
    }
}

/// `-(2 pi / 3a) p_a^2 - (3k / 8 pi) a + (Lambda / 8 pi) a^3 + p_phi^2 / (2a^3) + a^3 V`.
pub fn hamiltonian_constraint(state: &CosmoState, params: &CosmoParams) -> Result<f64> {
    Ok(constraint_terms(state, params)?.iter().sum())
}

/// The five terms of [`hamiltonian_constraint`] separately.
pub fn constraint_terms(state: &CosmoState, params: &CosmoParams) -> Result<[f64; 5]> {
    let a = state.a;
    if !(a > 0.0) {
        return Err(Error::NonPositiveScaleFactor { a });
    }
    let sign = match params.kinetic_sign {
        KineticSign::Printed => -1.0,
        KineticSign::Flipped => 1.0,
    };
    let a3 = a * a * a;
    Ok([
        sign * 2.0 * PI / (3.0 * a) * state.p_a * state.p_a,
        -3.0 * params.k as f64 / (8.0 * PI) * a,
        params.lambda / (8.0 * PI) * a3,
        state.p_phi * state.p_phi / (2.0 * a3),
        a3 * params.potential.value(state.phi),
    ])
}

/// `|H| / max |term|`, the constraint relative to its largest term.
pub fn relative_constraint(state: &CosmoState, params: &CosmoParams) -> Result<f64> {
    let terms = constraint_terms(state, params)?;
    let scale = terms.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sum: f64 = terms.iter().sum();
    Ok(if scale > 0.0 { sum.abs() / scale } else { sum.abs() })
}

fn friedmann_terms(s: &Kinematics, params: &CosmoParams) -> [f64; 5] {
    let h = s.adot / s.a;
    let v = params.potential.value(s.phi);
    [
        h * h,
        params.k as f64 / (s.a * s.a),
        -(8.0 * PI / 3.0) * 0.5 * s.phidot * s.phidot,
        -(8.0 * PI / 3.0) * v,
        -params.lambda / 3.0,
    ]
}

/// `(a'/a)^2 + k/a^2 - (8 pi/3)(phi'^2/2 + V) - Lambda/3`.
pub fn friedmann_residual_at(s: &Kinematics, params: &CosmoParams) -> f64 {
    friedmann_terms(s, params).iter().sum()
}

/// Friedmann residual over the largest of its terms.
pub fn friedmann_relative_at(s: &Kinematics, params: &CosmoParams) -> f64 {
    let terms = friedmann_terms(s, params);
    let scale = terms.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sum: f64 = terms.iter().sum();
    if scale > 0.0 {
        sum.abs() / scale
    } else {
        sum.abs()
    }
}

/// Samples of a classical solution, uniformly spaced in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Kinematics>,
    /// Relative Friedmann residual per sample.
    pub constraint_residual: Vec<f64>,
    /// Time at which `a` fell below the collapse threshold.
    pub collapse: Option<f64>,
    /// Some sample exceeded the drift tolerance.
    pub drift_flagged: bool,
}

impl Trajectory {
    /// Wrap externally built samples (e.g. a hand-made non-solution).
    pub fn from_samples(samples: Vec<Kinematics>, params: &CosmoParams) -> Self {
        let constraint_residual = samples.iter().map(|s| friedmann_relative_at(s, params)).collect();
        Self { samples, constraint_residual, collapse: None, drift_flagged: false }
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn p_phi(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.a.powi(3) * s.phidot).collect()
    }

    pub fn last(&self) -> Option<&Kinematics> {
        self.samples.last()
    }

    fn step(&self) -> Result<f64> {
        if self.samples.len() < 2 {
            return Err(Error::NoValidNodes);
        }
        Ok(self.samples[1].t - self.samples[0].t)
    }
}

/// Tolerances for [`evolve_classical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Allowed relative Friedmann residual of the initial data.
    pub initial_tolerance: f64,
    /// Relative residual along the run above which the trajectory is flagged.
    pub drift_tolerance: f64,
    /// Collapse threshold as a fraction of the initial scale factor.
    pub collapse_fraction: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { initial_tolerance: 1e-10, drift_tolerance: 1e-8, collapse_fraction: 1e-6 }
    }
}

/// `a'' = a [Lambda/3 - (8 pi/3)(phi'^2 - V)]`, `phi'' = -3 (a'/a) phi' - V'`.
fn acceleration(params: &CosmoParams, y: &[f64; 4]) -> [f64; 4] {
    let [a, adot, phi, phidot] = *y;
    let v = params.potential.value(phi);
    let add = a * (params.lambda / 3.0 - (8.0 * PI / 3.0) * (phidot * phidot - v));
    let pdd = -3.0 * adot / a * phidot - params.potential.derivative(phi);
    [adot, add, phidot, pdd]
}

/// RK4 integration of the second-order system from `init.t` to `t_end`.
///
/// The acceleration equation is the Raychaudhuri form, which leaves the
/// Friedmann constraint invariant; the relative constraint residual is
/// recorded at every sample. Initial data violating the constraint by more
/// than `initial_tolerance` are refused.
pub fn evolve_classical(init: Kinematics, params: &CosmoParams, t_end: f64, step: f64, opts: EvolveOptions) -> Result<Trajectory> {
    if !(init.a > 0.0) {
        return Err(Error::NonPositiveScaleFactor { a: init.a });
    }
    if !(step > 0.0) || !(t_end > init.t) {
        return Err(invalid("step", "need step > 0 and t_end > t0"));
    }
    let r0 = friedmann_relative_at(&init, params);
    if !(r0 <= opts.initial_tolerance) {
        return Err(Error::ConstraintViolated { residual: r0, tolerance: opts.initial_tolerance });
    }
    let n = ((t_end - init.t) / step).round().max(1.0) as usize;
    let h = (t_end - init.t) / n as f64;
    let a_min = opts.collapse_fraction * init.a;

    let mut rhs = |_t: f64, y: &[f64; 4]| acceleration(params, y);
    let mut samples = Vec::with_capacity(n + 1);
    let mut residual = Vec::with_capacity(n + 1);
    samples.push(init);
    residual.push(r0);
    let mut y = [init.a, init.adot, init.phi, init.phidot];
    let mut collapse = None;
    for k in 0..n {
        let t = init.t + k as f64 * h;
        let next = rk4_step(&mut rhs, t, &y, h);
        let t_next = if k + 1 == n { t_end } else { init.t + (k + 1) as f64 * h };
        if !(next[0] > a_min) || next.iter().any(|v| !v.is_finite()) {
            collapse = Some(t_next);
            break;
        }
        y = next;
        let s = Kinematics { t: t_next, a: y[0], adot: y[1], phi: y[2], phidot: y[3] };
        residual.push(friedmann_relative_at(&s, params));
        samples.push(s);
    }
    let drift_flagged = residual.iter().any(|r| !(*r <= opts.drift_tolerance));
    Ok(Trajectory { samples, constraint_residual: residual, collapse, drift_flagged })
}

/// Absolute Friedmann residual at every sample.
pub fn friedmann_residual(traj: &Trajectory, params: &CosmoParams) -> Result<Vec<f64>> {
    if traj.samples.is_empty() {
        return Err(Error::NoValidNodes);
    }
    Ok(traj.samples.iter().map(|s| friedmann_residual_at(s, params)).collect())
}

/// `2 a a'' + a'^2 + k - Lambda a^2 - (p_phi^2 / (16 pi a^3) + 8 pi a^3 V)` with
/// `a''` from the second-order stencil on the sampled `a`.
pub fn scale_factor_equation_residual(traj: &Trajectory, p_phi: &[f64], params: &CosmoParams) -> Result<Vec<f64>> {
    if p_phi.len() != traj.samples.len() {
        return Err(Error::Mismatch("p_phi series length differs from the trajectory"));
    }
    let h = traj.step()?;
    let a: Vec<f64> = traj.samples.iter().map(|s| s.a).collect();
    let add = second_derivative_samples(&a, h)?;
    Ok(traj
        .samples
        .iter()
        .zip(add)
        .zip(p_phi)
        .map(|((s, add), pp)| {
            let a3 = s.a.powi(3);
            let matter = pp * pp / (16.0 * PI * a3) + 8.0 * PI * a3 * params.potential.value(s.phi);
            2.0 * s.a * add + s.adot * s.adot + params.k as f64 - params.lambda * s.a * s.a - matter
        })
        .collect())
}

/// `phi'' + 3 (a'/a) phi' + V'(phi)` with `phi''` from the stencil on the
/// sampled `phi`.
pub fn klein_gordon_residual(traj: &Trajectory, params: &CosmoParams) -> Result<Vec<f64>> {
    let h = traj.step()?;
    let phi: Vec<f64> = traj.samples.iter().map(|s| s.phi).collect();
    let pdd = second_derivative_samples(&phi, h)?;
    Ok(traj
        .samples
        .iter()
        .zip(pdd)
        .map(|(s, pdd)| pdd + 3.0 * s.adot / s.a * s.phidot + params.potential.derivative(s.phi))
        .collect())
}

// ---------------------------------------------------------------------------
// Complex-action system

/// A real action component `S(q, t)` with first and second `q`-derivatives
/// and the time derivative.
pub trait ActionComponent: Send + Sync {
    fn value(&self, q: f64, t: f64) -> f64;
    fn d_q(&self, q: f64, t: f64) -> f64;
    fn d_qq(&self, q: f64, t: f64) -> f64;
    fn d_t(&self, q: f64, t: f64) -> f64;
}

/// `c0 + c_q q + c_qq q^2 / 2 + c_t t + c_qt q t`, enough for every hand
/// substitution in the tests and for building quick CLI inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PolynomialAction {
    pub c0: f64,
    pub c_q: f64,
    pub c_qq: f64,
    pub c_t: f64,
    pub c_qt: f64,
}

impl ActionComponent for PolynomialAction {
    fn value(&self, q: f64, t: f64) -> f64 {
        self.c0 + self.c_q * q + 0.5 * self.c_qq * q * q + self.c_t * t + self.c_qt * q * t
    }
    fn d_q(&self, q: f64, t: f64) -> f64 {
        self.c_q + self.c_qq * q + self.c_qt * t
    }
    fn d_qq(&self, _q: f64, _t: f64) -> f64 {
        self.c_qq
    }
    fn d_t(&self, q: f64, _t: f64) -> f64 {
        self.c_t + self.c_qt * q
    }
}

/// An action component sampled on a `(q, t)` grid; derivatives by
/// second-order stencils at the nodes. Queries must hit grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    q: Grid1d,
    t: Grid1d,
    values: Vec<f64>,
    d_q: Vec<f64>,
    d_qq: Vec<f64>,
    d_t: Vec<f64>,
}

impl SampledAction {
    /// `values[j * q.n + i]` is `S(q_i, t_j)`.
    pub fn new(q: Grid1d, t: Grid1d, values: Vec<f64>) -> Result<Self> {
        if values.len() != q.n * t.n {
            return Err(Error::Mismatch("sampled action has the wrong number of values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("S", "sampled action must be finite"));
        }
        let mut d_q = Vec::with_capacity(values.len());
        let mut d_qq = Vec::with_capacity(values.len());
        for row in values.chunks(q.n) {
            d_q.extend(derivative_samples(row, q.spacing())?);
            d_qq.extend(second_derivative_samples(row, q.spacing())?);
        }
        let mut d_t = alloc::vec![0.0; values.len()];
        let mut column = alloc::vec![0.0; t.n];
        for i in 0..q.n {
            for j in 0..t.n {
                column[j] = values[j * q.n + i];
            }
            for (j, d) in derivative_samples(&column, t.spacing())?.into_iter().enumerate() {
                d_t[j * q.n + i] = d;
            }
        }
        Ok(Self { q, t, values, d_q, d_qq, d_t })
    }

    pub fn from_fn(q: Grid1d, t: Grid1d, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(q.n * t.n);
        for tj in t.points() {
            for qi in q.points() {
                values.push(f(qi, tj));
            }
        }
        Self::new(q, t, values)
    }

    fn node(&self, q: f64, t: f64) -> Option<usize> {
        let locate = |g: &Grid1d, v: f64| {
            let r = (v - g.min) / g.spacing();
            let i = r.round();
            ((r - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < g.n).then_some(i as usize)
        };
        Some(locate(&self.t, t)? * self.q.n + locate(&self.q, q)?)
    }

    fn lookup(&self, table: &[f64], q: f64, t: f64) -> f64 {
        self.node(q, t).map_or(f64::NAN, |n| table[n])
    }
}

impl ActionComponent for SampledAction {
    fn value(&self, q: f64, t: f64) -> f64 {
        self.lookup(&self.values, q, t)
    }
    fn d_q(&self, q: f64, t: f64) -> f64 {
        self.lookup(&self.d_q, q, t)
    }
    fn d_qq(&self, q: f64, t: f64) -> f64 {
        self.lookup(&self.d_qq, q, t)
    }
    fn d_t(&self, q: f64, t: f64) -> f64 {
        self.lookup(&self.d_t, q, t)
    }
}

/// `S_a(a, t)`, `S_phi(phi, t)` and `S_g(a, t)`.
#[derive(Clone)]
pub struct ComplexActionFields {
    pub s_a: Arc<dyn ActionComponent>,
    pub s_phi: Arc<dyn ActionComponent>,
    pub s_g: Arc<dyn ActionComponent>,
}

impl core::fmt::Debug for ComplexActionFields {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("ComplexActionFields { .. }")
    }
}

/// The `(a, phi, t)` product grid the residuals are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductGrid {
    pub a: Grid1d,
    pub phi: Grid1d,
    pub t: Grid1d,
}

impl ProductGrid {
    /// Index of `(a_i, phi_k, t_j)` in a three-dimensional table.
    pub fn index3(&self, i: usize, k: usize, j: usize) -> usize {
        (j * self.phi.n + k) * self.a.n + i
    }

    /// Index of `(a_i, t_j)` in a two-dimensional table.
    pub fn index2(&self, i: usize, j: usize) -> usize {
        j * self.a.n + i
    }

    fn check_positive_a(&self) -> Result<()> {
        if self.a.min <= 0.0 {
            return Err(Error::NonPositiveScaleFactor { a: self.a.min });
        }
        Ok(())
    }
}

/// Residuals of the classical-limit complex-action system, split by sector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexActionResiduals {
    pub grid: ProductGrid,
    /// `dS_phi/dt + (dS_phi/dphi)^2 / (16 pi a^3) + 8 pi a^3 V`, indexed by
    /// [`ProductGrid::index3`].
    pub matter: Vec<f64>,
    /// `dS_a/dt + (dS_a/da)^2 + (Lambda/3) a^2 - k - (dS_g/da)^2`, indexed by
    /// [`ProductGrid::index2`]. Carries no `phi` dependence by construction.
    pub geometry: Vec<f64>,
    /// `dS_g/dt + 16 (dS_a/da)(dS_g/da)`, indexed by [`ProductGrid::index2`].
    pub transport: Vec<f64>,
}

impl ComplexActionResiduals {
    /// Residual A at `(a_i, phi_k, t_j)`: matter plus geometry.
    pub fn residual_a(&self, i: usize, k: usize, j: usize) -> f64 {
        self.matter[self.grid.index3(i, k, j)] + self.geometry[self.grid.index2(i, j)]
    }

    pub fn max_abs_a(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for j in 0..g.t.n {
            for k in 0..g.phi.n {
                for i in 0..g.a.n {
                    worst = worst.max(self.residual_a(i, k, j).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs_b(&self) -> f64 {
        self.transport.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Both residuals of the complex-action system on `grid`.
pub fn complex_action_residuals(fields: &ComplexActionFields, params: &CosmoParams, grid: &ProductGrid) -> Result<ComplexActionResiduals> {
    grid.check_positive_a()?;
    let mut matter = Vec::with_capacity(grid.a.n * grid.phi.n * grid.t.n);
    let mut geometry = Vec::with_capacity(grid.a.n * grid.t.n);
    let mut transport = Vec::with_capacity(grid.a.n * grid.t.n);
    for t in grid.t.points() {
        for phi in grid.phi.points() {
            let st = fields.s_phi.d_t(phi, t);
            let sp = fields.s_phi.d_q(phi, t);
            let v = params.potential.value(phi);
            for a in grid.a.points() {
                let a3 = a * a * a;
                matter.push(st + sp * sp / (16.0 * PI * a3) + 8.0 * PI * a3 * v);
            }
        }
        for a in grid.a.points() {
            let sa = fields.s_a.d_q(a, t);
            let sg = fields.s_g.d_q(a, t);
            geometry.push(fields.s_a.d_t(a, t) + sa * sa + params.lambda / 3.0 * a * a - params.k as f64 - sg * sg);
            transport.push(fields.s_g.d_t(a, t) + 16.0 * sa * sg);
        }
    }
    if matter.iter().chain(&geometry).chain(&transport).any(|v| !v.is_finite()) {
        return Err(invalid("fields", "non-finite derivative on the product grid"));
    }
    Ok(ComplexActionResiduals { grid: *grid, matter, geometry, transport })
}

/// `(d2S_g/da2)^2 - S_g/(4a) - (dS_a/dt + dS_phi/dt)` at every product-grid
/// node, indexed by [`ProductGrid::index3`]. Implemented exactly as stated,
/// squared second derivative included.
pub fn closure_check(fields: &ComplexActionFields, grid: &ProductGrid) -> Result<Vec<f64>> {
    grid.check_positive_a()?;
    let mut out = Vec::with_capacity(grid.a.n * grid.phi.n * grid.t.n);
    for t in grid.t.points() {
        for phi in grid.phi.points() {
            let sphi_t = fields.s_phi.d_t(phi, t);
            for a in grid.a.points() {
                let sgg = fields.s_g.d_qq(a, t);
                out.push(sgg * sgg - fields.s_g.value(a, t) / (4.0 * a) - (fields.s_a.d_t(a, t) + sphi_t));
            }
        }
    }
    Ok(out)
}

/// Outcome of [`entropy_scaling_probe`]; diagnostic only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyScaling {
    pub exponent: f64,
    /// `exponent - 2`.
    pub deviation_from_area_law: f64,
    /// Number of samples with `S_g <= 0`; the fit used `|S_g|`.
    pub non_positive_samples: usize,
}

/// Log-log slope of `|S_g|` against `a`.
pub fn entropy_scaling_probe(a: &[f64], s_g: &[f64]) -> Result<EntropyScaling> {
    if a.len() != s_g.len() {
        return Err(Error::Mismatch("a and S_g sample counts differ"));
    }
    let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = a.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(invalid("a", "need positive samples spanning at least one decade"));
    }
    let non_positive_samples = s_g.iter().filter(|v| !(**v > 0.0)).count();
    let mags: Vec<f64> = s_g.iter().map(|v| v.abs()).collect();
    let exponent = loglog_slope(a, &mags)?;
    Ok(EntropyScaling { exponent, deviation_from_area_law: exponent - 2.0, non_positive_samples })
}
