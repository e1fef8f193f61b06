use std::f64::consts::PI;
use std::sync::Arc;

use semiprop_core::convergence::loglog_slope;
use semiprop_core::cosmo::{
    closure_check, complex_action_residuals, entropy_scaling_probe, evolve_classical, hamiltonian_constraint,
    klein_gordon_residual, relative_constraint, scale_factor_equation_residual, ActionComponent, ComplexActionFields,
    CosmoParams, EvolveOptions, Kinematics, MassiveScalar, PolynomialAction, ProductGrid, ScalarPotential, Trajectory,
    Vacuum,
};

use super::{axis, max_abs};
use crate::args::{param_error, CliResult, Params};
use crate::report::Run;

pub fn run(run: &mut Run, check: &str) -> CliResult<()> {
    match check {
        "constraint" => constraint(run),
        "de-sitter" => de_sitter(run),
        "stiff-fluid" => stiff_fluid(run),
        "complex-action" => complex_action(run),
        "closure" => closure(run),
        "scale-factor" => scale_factor(run),
        "entropy-scaling" => entropy(run),
        "rk4-convergence" => rk4_convergence(run),
        _ => unreachable!("checked by the dispatcher"),
    }
}

fn cosmo_params(p: &Params, lambda_default: f64) -> CliResult<CosmoParams> {
    let k = p.f64("k", 0.0)?;
    if ![-1.0, 0.0, 1.0].contains(&k) {
        return Err(param_error("k", "spatial curvature must be -1, 0 or 1"));
    }
    let lambda = p.f64("lambda", lambda_default)?;
    let potential: Arc<dyn ScalarPotential> = match p.choice("potential", &["none", "massive"])? {
        "none" => Arc::new(Vacuum),
        _ => Arc::new(MassiveScalar { mass: p.positive("scalar-mass", 1.0)? }),
    };
    Ok(CosmoParams::new(k as i8, lambda, potential, p.positive("hbar", 1.0)?)?)
}

/// Initial data; `adot` defaults to the expanding root of the Friedmann
/// equation.
fn initial(p: &Params, params: &CosmoParams, t0: f64) -> CliResult<Kinematics> {
    let a = p.positive("a0", 1.0)?;
    let phi = p.f64("phi0", 0.0)?;
    let phidot = p.f64("phidot0", 0.0)?;
    let h2 = (8.0 * PI / 3.0) * (0.5 * phidot * phidot + params.potential.value(phi)) + params.lambda / 3.0
        - params.k as f64 / (a * a);
    let adot = match p.text("adot0") {
        Some(_) => p.f64("adot0", 0.0)?,
        None if h2 >= 0.0 => a * h2.sqrt(),
        None => return Err(param_error("adot0", "no real expansion rate solves the Friedmann equation for this data")),
    };
    Ok(Kinematics { t: p.f64("t0", t0)?, a, adot, phi, phidot })
}

fn trajectory_rows(tr: &Trajectory) -> Vec<Vec<f64>> {
    tr.samples
        .iter()
        .zip(&tr.constraint_residual)
        .map(|(s, r)| vec![s.t, s.a, s.adot, s.phi, s.phidot, *r])
        .collect()
}

const TRAJECTORY_HEADER: &[&str] = &["t", "a", "adot", "phi", "phidot", "constraint_residual"];

fn evolve(init: Kinematics, params: &CosmoParams, t_end: f64, step: f64) -> CliResult<Trajectory> {
    let tr = evolve_classical(init, params, t_end, step, EvolveOptions::default())?;
    if let Some(t) = tr.collapse {
        return Err(param_error("t-end", format!("the scale factor collapses at t = {t}")));
    }
    Ok(tr)
}

fn constraint(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let params = cosmo_params(p, 0.0)?;
    let init = initial(p, &params, 0.0)?;
    let tol = p.tolerance("tolerance", 1e-8)?;
    let state = init.to_state();
    let h = hamiltonian_constraint(&state, &params)?;
    let rel = relative_constraint(&state, &params)?;
    run.diagnostic("hamiltonian-constraint", h);
    run.at_most("relative-constraint", rel, tol);
    run.diagnostic("adot0", init.adot);
    Ok(())
}

fn de_sitter(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let lambda = p.positive("lambda", 3.0)?;
    let params = CosmoParams::vacuum(lambda);
    let a0 = p.positive("a0", 1.0)?;
    let t_end = p.positive("t-end", 1.0)?;
    let step = p.positive("step", 1e-3)?;
    let tol = p.tolerance("tolerance", 1e-6)?;
    let c_tol = p.tolerance("constraint-tolerance", 1e-8)?;
    let hubble = (lambda / 3.0).sqrt();
    let init = Kinematics { t: 0.0, a: a0, adot: a0 * hubble, phi: 0.0, phidot: 0.0 };
    let tr = evolve(init, &params, t_end, step)?;
    let exact = a0 * (hubble * t_end).exp();
    let last = tr.last().map_or(f64::NAN, |s| s.a);
    run.at_most("relative-error-a", (last - exact).abs() / exact, tol);
    run.at_most("max-relative-constraint", max_abs(tr.constraint_residual.iter().copied()), c_tol);
    let levels: Vec<(f64, f64)> = [8.0, 4.0, 2.0]
        .iter()
        .map(|m| {
            let h = 0.01 * m;
            evolve(init, &params, t_end, h).map(|t| (h, (t.last().map_or(f64::NAN, |s| s.a) - exact).abs() / exact))
        })
        .collect::<CliResult<_>>()?;
    let order = run.convergence("a_error", &levels)?;
    run.within("rk4-order", order.unwrap_or(f64::NAN), 4.0, 0.5);
    run.table("trajectory.csv", TRAJECTORY_HEADER, trajectory_rows(&tr));
    Ok(())
}

/// Massless scalar, no curvature or `Lambda`: `a ~ t^(1/3)`.
fn stiff_fluid(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let params = CosmoParams::vacuum(0.0);
    let t0 = p.positive("t0", 1.0)?;
    let t_end = p.positive("t-end", 10.0)?;
    let step = p.positive("step", 1e-3)?;
    let tol = p.tolerance("tolerance", 1e-3)?;
    if t_end <= t0 {
        return Err(param_error("t-end", "must exceed t0"));
    }
    // a = t^(1/3) scaled to a(t0) = 1; phi' follows from the constraint
    let adot = 1.0 / (3.0 * t0);
    let phidot = (adot * adot * 3.0 / (4.0 * PI)).sqrt();
    let init = Kinematics { t: t0, a: 1.0, adot, phi: 0.0, phidot };
    let tr = evolve(init, &params, t_end, step)?;
    let a: Vec<f64> = tr.samples.iter().map(|s| s.a).collect();
    let slope = loglog_slope(&tr.times(), &a)?;
    run.within("scale-factor-exponent", slope, 1.0 / 3.0, tol);
    run.diagnostic("max-relative-constraint", max_abs(tr.constraint_residual.iter().copied()));
    run.table("trajectory.csv", TRAJECTORY_HEADER, trajectory_rows(&tr));
    Ok(())
}

fn polynomial(p: &Params, prefix: &str, d: [f64; 5]) -> CliResult<Arc<dyn ActionComponent>> {
    let get = |name: &str, v: f64| p.f64(&format!("{prefix}-{name}"), v);
    Ok(Arc::new(PolynomialAction {
        c0: get("c0", d[0])?,
        c_q: get("cq", d[1])?,
        c_qq: get("cqq", d[2])?,
        c_t: get("ct", d[3])?,
        c_qt: get("cqt", d[4])?,
    }))
}

fn custom_fields(p: &Params) -> CliResult<ComplexActionFields> {
    Ok(ComplexActionFields {
        s_a: polynomial(p, "sa", [0.3, 1.2, -0.7, 0.4, 0.9])?,
        s_phi: polynomial(p, "sphi", [0.0, 1.0, 0.0, 0.0, 0.0])?,
        s_g: polynomial(p, "sg", [4.0, 0.0, 0.0, 0.0, 0.0])?,
    })
}

fn product_grid(p: &Params) -> CliResult<ProductGrid> {
    let g = ProductGrid { a: axis(p, "a", (0.5, 2.0, 16))?, phi: axis(p, "phi", (-1.0, 1.0, 5))?, t: axis(p, "t", (0.0, 1.0, 11))? };
    if g.a.min <= 0.0 {
        return Err(param_error("a-min", "scale factor must be positive"));
    }
    Ok(g)
}

fn poly(c0: f64, c_q: f64, c_qq: f64, c_t: f64, c_qt: f64) -> Arc<dyn ActionComponent> {
    Arc::new(PolynomialAction { c0, c_q, c_qq, c_t, c_qt })
}

fn complex_action(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let family = p.choice("family", &["constant-g", "hand", "custom"])?;
    let params = cosmo_params(p, 0.0)?;
    let grid = product_grid(p)?;
    match family {
        "constant-g" => {
            let tol = p.tolerance("tolerance", 1e-12)?;
            let fields = ComplexActionFields {
                s_a: polynomial(p, "sa", [0.3, 1.2, -0.7, 0.4, 0.9])?,
                s_phi: polynomial(p, "sphi", [0.0, 1.0, 0.0, 0.0, 0.0])?,
                s_g: poly(p.f64("sg-c0", 4.0)?, 0.0, 0.0, 0.0, 0.0),
            };
            let r = complex_action_residuals(&fields, &params, &grid)?;
            run.at_most("max-residual-b", r.max_abs_b(), tol);
            run.diagnostic("max-residual-a", r.max_abs_a());
        }
        "hand" => {
            // S_a = a, S_phi = 0, S_g = a t: residual B is a + 16 t
            let tol = p.tolerance("tolerance", 1e-10)?;
            let fields = ComplexActionFields {
                s_a: poly(0.0, 1.0, 0.0, 0.0, 0.0),
                s_phi: poly(0.0, 0.0, 0.0, 0.0, 0.0),
                s_g: poly(0.0, 0.0, 0.0, 0.0, 1.0),
            };
            let r = complex_action_residuals(&fields, &params, &grid)?;
            let mut gap: f64 = 0.0;
            for (j, t) in grid.t.points().enumerate() {
                for (i, a) in grid.a.points().enumerate() {
                    gap = gap.max((r.transport[grid.index2(i, j)] - (a + 16.0 * t)).abs());
                }
            }
            run.at_most("hand-derived-gap-b", gap, tol);
        }
        _ => {
            let fields = custom_fields(p)?;
            let r = complex_action_residuals(&fields, &params, &grid)?;
            run.diagnostic("max-residual-a", r.max_abs_a());
            run.diagnostic("max-residual-b", r.max_abs_b());
            let mut rows = Vec::new();
            for (j, t) in grid.t.points().enumerate() {
                for (k, phi) in grid.phi.points().enumerate() {
                    for (i, a) in grid.a.points().enumerate() {
                        rows.push(vec![a, phi, t, r.residual_a(i, k, j), r.transport[grid.index2(i, j)]]);
                    }
                }
            }
            run.table("residuals.csv", &["a", "phi", "t", "residual_a", "residual_b"], rows);
        }
    }
    Ok(())
}

fn closure(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let fields = custom_fields(p)?;
    let grid = product_grid(p)?;
    let values = closure_check(&fields, &grid)?;
    run.diagnostic("max-closure-residual", max_abs(values.iter().copied()));
    let mut rows = Vec::new();
    for (j, t) in grid.t.points().enumerate() {
        for (k, phi) in grid.phi.points().enumerate() {
            for (i, a) in grid.a.points().enumerate() {
                rows.push(vec![a, phi, t, values[grid.index3(i, k, j)]]);
            }
        }
    }
    run.table("closure.csv", &["a", "phi", "t", "closure"], rows);
    Ok(())
}

fn scale_factor(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let params = cosmo_params(p, 3.0)?;
    let init = initial(p, &params, 0.0)?;
    let t_end = p.positive("t-end", 1.0)?;
    let step = p.positive("step", 1e-4)?;
    let tol = p.tolerance("tolerance", 1e-6)?;
    let tr = evolve(init, &params, init.t + t_end, step)?;
    let r = max_abs(scale_factor_equation_residual(&tr, &tr.p_phi(), &params)?);
    // the matter terms carry their own normalisation, so with a scalar
    // present the equation is not an identity along our trajectories
    let vacuum = tr.samples.iter().all(|s| s.phidot == 0.0 && params.potential.value(s.phi) == 0.0);
    if vacuum {
        run.at_most("max-scale-factor-residual", r, tol);
    } else {
        run.diagnostic("max-scale-factor-residual", r);
    }
    run.table("trajectory.csv", TRAJECTORY_HEADER, trajectory_rows(&tr));
    Ok(())
}

fn entropy(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let a = axis(p, "a", (0.5, 5.0, 41))?;
    let t = p.f64("t", 1.0)?;
    let s_g = polynomial(p, "sg", [0.0, 0.0, 2.0, 0.0, 0.0])?;
    let samples: Vec<f64> = a.points().collect();
    let values: Vec<f64> = samples.iter().map(|&x| s_g.value(x, t)).collect();
    let e = entropy_scaling_probe(&samples, &values).map_err(|e| param_error("a-max", e.to_string()))?;
    run.diagnostic("exponent", e.exponent);
    run.diagnostic("deviation-from-area-law", e.deviation_from_area_law);
    run.diagnostic("non-positive-samples", e.non_positive_samples as f64);
    Ok(())
}

fn rk4_convergence(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let steps = p.f64_list("steps", &[0.02, 0.01, 0.005])?;
    if steps.len() < 3 || steps.iter().any(|h| !(*h > 0.0)) || steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(param_error("steps", "need at least three positive, decreasing steps"));
    }
    let t_end = p.positive("t-end", 1.0)?;
    let lambda = p.positive("lambda", 3.0)?;
    let scalar_mass = p.positive("scalar-mass", 1.0)?;

    let ds = CosmoParams::vacuum(lambda);
    let hubble = (lambda / 3.0).sqrt();
    let exact = (hubble * t_end).exp();
    let ds_init = Kinematics { t: 0.0, a: 1.0, adot: hubble, phi: 0.0, phidot: 0.0 };
    // coarser steps for the a error so the finest level stays above round-off
    let a_levels: Vec<(f64, f64)> = steps
        .iter()
        .map(|&h| {
            let h = 4.0 * h;
            evolve(ds_init, &ds, t_end, h).map(|t| (h, (t.last().map_or(f64::NAN, |s| s.a) - exact).abs()))
        })
        .collect::<CliResult<_>>()?;

    let massive = CosmoParams::new(0, 0.0, Arc::new(MassiveScalar { mass: scalar_mass }), 1.0)?;
    let phi0 = 1.0;
    let adot = ((8.0 * PI / 3.0) * 0.5 * scalar_mass * scalar_mass * phi0 * phi0).sqrt();
    let kg_init = Kinematics { t: 0.0, a: 1.0, adot, phi: phi0, phidot: 0.0 };
    let kg_levels: Vec<(f64, f64)> = steps
        .iter()
        .map(|&h| {
            let tr = evolve(kg_init, &massive, t_end, h)?;
            Ok((h, max_abs(klein_gordon_residual(&tr, &massive)?)))
        })
        .collect::<CliResult<_>>()?;

    let a_order = run.convergence("a_error", &a_levels)?;
    let kg_order = run.convergence("klein_gordon", &kg_levels)?;
    run.within("a-error-order", a_order.unwrap_or(f64::NAN), 4.0, 0.5);
    run.within("klein-gordon-order", kg_order.unwrap_or(f64::NAN), 2.0, 0.3);
    Ok(())
}
