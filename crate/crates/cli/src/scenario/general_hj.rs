use std::sync::Arc;

use semiprop_core::general_hj::{
    build_s_from_r, imaginary_scaling_probe, nult_residual, recover_potential, CosLog, ExpPotential, GeneralAnsatz, TimeFunction,
};
use semiprop_core::quadratic::{hamilton_jacobi_residual, FreeAction, FreeTransport, HarmonicAction};
use semiprop_core::{assemble_propagator, Complex64, ComplexField, Factor, PropagatorFactors, SpacetimeFunction, SpacetimeGrid};

use super::{field_rows, max_abs, spacetime_grid, GridDefaults, PROPAGATOR_HEADER};
use crate::args::{param_error, CliResult, Params};
use crate::report::Run;

pub fn run(run: &mut Run, check: &str) -> CliResult<()> {
    match check {
        "nult" => nult(run),
        "exp-potential" => exp_potential(run),
        "build-s" => build_s(run),
        "recover-potential" => recover(run),
        "imaginary-scaling" => scaling(run),
        _ => unreachable!("checked by the dispatcher"),
    }
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn cos_log(p: &Params) -> CliResult<CosLog> {
    let fam = CosLog {
        c2: p.f64("c2", 1.3)?,
        c3: p.f64("c3", 0.4)?,
        c4: p.f64("c4", 0.2)?,
        hbar: p.positive("hbar", 0.9)?,
        mass: p.positive("mass", 1.7)?,
    };
    if fam.c2 == 0.0 {
        return Err(param_error("c2", "must be non-zero"));
    }
    Ok(fam)
}

fn exponential(p: &Params) -> CliResult<ExpPotential> {
    let a = p.positive("a", 1.0)?;
    let b = p.f64("b", 1.0)?;
    let hbar = p.positive("hbar", 1.0)?;
    let mass = p.positive("mass", 1.0)?;
    ExpPotential::new(a, b, hbar, mass).map_err(|e| param_error("b", e.to_string()))
}

fn nult(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let family = p.choice("family", &["cos-log", "exponential"])?;
    let grid = spacetime_grid(p, GridDefaults { x: (-1.0, 1.0, 41), t: (0.0, 2.0, 21) })?;
    let tol = p.tolerance("tolerance", 1e-8)?;
    let (r, mass, hbar): (Arc<dyn SpacetimeFunction>, f64, f64) = match family {
        "cos-log" => {
            let f = cos_log(p)?;
            (Arc::new(f), f.mass, f.hbar)
        }
        _ => {
            let f = exponential(p)?;
            (Arc::new(f.transport()), f.mass, f.hbar)
        }
    };
    let analytic = nult_residual(&Factor::Closed(r.clone()), mass, hbar, &grid)?;
    let sampled = semiprop_core::general_hj::unwrap_phase_along_space(&ComplexField::sample(&grid, "R", r.as_ref())?);
    let stencil = nult_residual(&Factor::Gridded(sampled), mass, hbar, &grid)?;
    run.at_most("constraint-residual", analytic.max_abs().unwrap_or(f64::NAN), tol);
    run.diagnostic("stencil-constraint-residual", stencil.max_abs().unwrap_or(f64::NAN));
    Ok(())
}

fn exp_potential(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let fam = exponential(p)?;
    let grid = spacetime_grid(p, GridDefaults { x: (-1.0, 1.0, 41), t: (0.0, 2.0, 21) })?;
    let tol = p.tolerance("tolerance", 1e-10)?;
    let s = fam.action();
    let mut hj = Vec::new();
    for j in 0..grid.n_t() {
        for i in 0..grid.n_x() {
            let (x, t) = (grid.x(i), grid.t(j));
            hj.push(hamilton_jacobi_residual(&s, c(fam.potential(x)), fam.mass, x, t).norm());
        }
    }
    let constraint = nult_residual(&Factor::Closed(Arc::new(fam.transport())), fam.mass, fam.hbar, &grid)?;
    let factors = PropagatorFactors::new(Factor::Closed(Arc::new(fam.transport())), Factor::Closed(Arc::new(s)), fam.hbar, fam.mass)?;
    let k = assemble_propagator(&factors, &grid)?;
    let rows = field_rows(&grid, &k, &factors.transport.sample(&grid, "R")?, &factors.action.sample(&grid, "S")?);
    run.at_most("hj-residual", max_abs(hj), tol);
    run.at_most("constraint-residual", constraint.max_abs().unwrap_or(f64::NAN), tol);
    run.table("propagator.csv", PROPAGATOR_HEADER, rows);
    Ok(())
}

/// `R`, exact `S`, and the integration functions matched to it.
type Case = (Arc<dyn SpacetimeFunction>, Arc<dyn SpacetimeFunction>, TimeFunction, TimeFunction, f64, f64);

fn build_case(p: &Params, grid: &SpacetimeGrid) -> CliResult<Case> {
    let x_min = grid.space.min;
    Ok(match p.choice("family", &["cos-log", "exponential", "free"])? {
        "cos-log" => {
            let fam = cos_log(p)?;
            let (big_f1, big_f0) = (Complex64::new(p.f64("f1", 0.7)?, 0.0), Complex64::new(p.f64("f0", 0.2)?, p.f64("f0-im", -0.1)?));
            let (f0, f1) = fam.matched_integration_functions(big_f1, big_f0, x_min);
            (Arc::new(fam), Arc::new(fam.action(big_f1, big_f0)), f0, f1, fam.hbar, fam.mass)
        }
        "exponential" => {
            let fam = exponential(p)?;
            let (f0, f1) = fam.matched_integration_functions(x_min);
            (Arc::new(fam.transport()), Arc::new(fam.action()), f0, f1, fam.hbar, fam.mass)
        }
        _ => {
            let m = p.positive("mass", 1.0)?;
            let hbar = p.positive("hbar", 1.0)?;
            let x0 = p.f64("x0", 0.3)?;
            if grid.time.min <= 0.0 {
                return Err(param_error("t-min", "the free particle needs t > 0"));
            }
            let f1: TimeFunction = Arc::new(move |t| c(m * (x_min - x0) / (t * t)));
            let f0: TimeFunction = Arc::new(move |t| c(m * (x_min - x0).powi(2) / (2.0 * t)));
            (Arc::new(FreeTransport { offset: 0.0 }), Arc::new(FreeAction { mass: m, x0 }), f0, f1, hbar, m)
        }
    })
}

fn build_s(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let grid = spacetime_grid(p, GridDefaults { x: (-1.0, 1.0, 41), t: (0.5, 1.5, 6) })?;
    let (r, exact, f0, f1, hbar, mass) = build_case(p, &grid)?;
    let panels = p.usize("panels", 1)?;
    let tol = p.tolerance("tolerance", 1e-6)?;
    let ansatz = GeneralAnsatz::new(r.clone(), f0, f1, hbar, mass)?
        .with_panels(panels)
        .map_err(|e| param_error("panels", e.to_string()))?;
    let s = build_s_from_r(&ansatz, &grid)?;
    let want = ComplexField::sample(&grid, "S", exact.as_ref())?;
    let gap = s.zip_with(&want, |a, b| a - b)?.max_abs().unwrap_or(f64::NAN);
    let r_field = ComplexField::sample(&grid, "R", r.as_ref())?;
    let k = semiprop_core::propagator::assemble_from_fields(&r_field, &s, hbar)?;
    run.at_most("max-gap-to-closed-form", gap, tol);
    run.table("propagator.csv", PROPAGATOR_HEADER, field_rows(&grid, &k, &r_field, &s));
    Ok(())
}

fn recover(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let grid = spacetime_grid(p, GridDefaults { x: (-1.0, 1.0, 81), t: (0.5, 1.5, 81) })?;
    let source = p.choice("source", &["gridded", "closed"])?;
    let tol = p.tolerance("tolerance", if source == "gridded" { 5e-3 } else { 1e-10 })?;
    let family = p.choice("family", &["harmonic", "free", "cos-log", "exponential"])?;
    type Exact = (Arc<dyn SpacetimeFunction>, Box<dyn Fn(f64) -> Complex64>, f64);
    let (s, v, mass): Exact = match family {
        "harmonic" => {
            let mass = p.positive("mass", 1.0)?;
            let omega = p.positive("omega", 1.0)?;
            let x0 = p.f64("x0", 0.2)?;
            if omega * grid.time.max >= std::f64::consts::PI || grid.time.min <= 0.0 {
                return Err(param_error("t-max", "times must lie strictly between 0 and the caustic at pi/omega"));
            }
            (Arc::new(HarmonicAction { mass, omega, x0 }), Box::new(move |x| c(0.5 * mass * omega * omega * x * x)), mass)
        }
        "free" => {
            let mass = p.positive("mass", 1.0)?;
            let x0 = p.f64("x0", 0.2)?;
            if grid.time.min <= 0.0 {
                return Err(param_error("t-min", "the free particle needs t > 0"));
            }
            (Arc::new(FreeAction { mass, x0 }), Box::new(|_| c(0.0)), mass)
        }
        "cos-log" => {
            let fam = cos_log(p)?;
            let f1 = c(p.f64("f1", 0.6)?);
            (Arc::new(fam.action(f1, c(0.0))), Box::new(move |x| fam.potential(f1, x)), fam.mass)
        }
        _ => {
            let fam = exponential(p)?;
            (Arc::new(fam.action()), Box::new(move |x| c(fam.potential(x))), fam.mass)
        }
    };
    let factor = if source == "closed" { Factor::Closed(s) } else { Factor::Gridded(ComplexField::sample(&grid, "S", s.as_ref())?) };
    let recovered = recover_potential(&factor, mass, &grid)?;
    let gap = recovered.map_with_coords(|x, _, val| val - v(x)).max_abs().unwrap_or(f64::NAN);
    let mut rows = Vec::new();
    for j in 0..grid.n_t() {
        for i in 0..grid.n_x() {
            if recovered.is_valid(i, j) {
                let val = recovered.at(i, j);
                rows.push(vec![grid.x(i), grid.t(j), val.re, val.im]);
            }
        }
    }
    run.at_most("max-gap-to-potential", gap, tol);
    run.table("potential.csv", &["x", "t", "re_V", "im_V"], rows);
    Ok(())
}

/// `R = -r2 x^2 + r1 x`, real.
struct RealQuadratic {
    r2: f64,
    r1: f64,
}

impl SpacetimeFunction for RealQuadratic {
    fn value(&self, x: f64, _t: f64) -> Complex64 {
        c(-self.r2 * x * x + self.r1 * x)
    }
    fn d_t(&self, _x: f64, _t: f64) -> Complex64 {
        c(0.0)
    }
    fn d_x(&self, x: f64, _t: f64) -> Complex64 {
        c(-2.0 * self.r2 * x + self.r1)
    }
    fn d_xx(&self, _x: f64, _t: f64) -> Complex64 {
        c(-2.0 * self.r2)
    }
}

fn scaling(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let grid = spacetime_grid(p, GridDefaults { x: (-1.0, 1.0, 41), t: (0.5, 1.5, 6) })?;
    let hbars = p.f64_list("hbar-list", &[0.5, 1.0, 2.0])?;
    let mass = p.positive("mass", 1.0)?;
    let r = RealQuadratic { r2: p.f64("r2", 0.25)?, r1: p.f64("r1", 0.1)? };
    let tol = p.tolerance("tolerance", 0.01)?;
    let report = imaginary_scaling_probe(Arc::new(r), &hbars, mass, &grid).map_err(|e| param_error("hbar-list", e.to_string()))?;
    for (h, n) in &report.points {
        run.diagnostic(&format!("im-s-norm-hbar-{h}"), *n);
    }
    match report.slope {
        Some(s) => run.within("im-s-slope", s, 1.0, tol),
        None => run.diagnostic("vacuous", 1.0),
    }
    Ok(())
}
