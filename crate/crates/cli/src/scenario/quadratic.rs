use std::f64::consts::PI;
use std::sync::Arc;

use semiprop_core::oracle::{schrodinger_residual, PotentialSpec};
use semiprop_core::quadratic::{
    curvature_residual, free_particle_factors, hamilton_jacobi_residual, harmonic_factors, quadratic_necessity_probe,
    solve_prefactor_odes, van_vleck_check, DrivenOscillator, FreeAction, FreeParticle, FreeTransport, HarmonicAction,
    HarmonicOscillator, HarmonicTransport, PrefactorInit, PrefactorOptions, QuadraticPotential, ScaledAction,
};
use semiprop_core::{assemble_propagator, PropagatorFactors, SpacetimeFunction, SpacetimeGrid, TwoPointAction};

use super::{axis, max_abs, propagator_rows, spacetime_grid, GridDefaults, PROPAGATOR_HEADER};
use crate::args::{param_error, CliResult, Params};
use crate::report::Run;

pub fn run(run: &mut Run, check: &str) -> CliResult<()> {
    match check {
        "hj-closed-form" => hj_closed_form(run),
        "prefactor-ode" => prefactor_ode(run),
        "van-vleck" => van_vleck(run),
        "necessity" => necessity(run),
        "schrodinger-residual" => schrodinger(run),
        _ => unreachable!("checked by the dispatcher"),
    }
}

#[derive(Clone, Copy)]
enum Family {
    Free,
    Harmonic { omega: f64 },
}

struct Physical {
    family: Family,
    mass: f64,
    hbar: f64,
    x0: f64,
}

fn physical(p: &Params) -> CliResult<Physical> {
    let family = match p.choice("family", &["free", "harmonic"])? {
        "free" => Family::Free,
        _ => Family::Harmonic { omega: p.positive("omega", 1.0)? },
    };
    Ok(Physical { family, mass: p.positive("mass", 1.0)?, hbar: p.positive("hbar", 1.0)?, x0: p.f64("x0", 0.0)? })
}

/// Closed-form factors; oscillator caustics get exclusion windows of
/// half-width `caustic-half`.
fn factors(p: &Params, ph: &Physical, grid: SpacetimeGrid) -> CliResult<(PropagatorFactors, SpacetimeGrid)> {
    match ph.family {
        Family::Free => Ok((free_particle_factors(ph.mass, ph.x0, ph.hbar, &grid)?, grid)),
        Family::Harmonic { omega } => {
            let half = p.positive("caustic-half", 0.05)?;
            let grid = grid.with_periodic_exclusions(PI / omega, half)?;
            Ok((harmonic_factors(ph.mass, omega, ph.x0, ph.hbar, &grid)?, grid))
        }
    }
}

fn potential(ph: &Physical) -> PotentialSpec {
    match ph.family {
        Family::Free => PotentialSpec::Zero,
        Family::Harmonic { omega } => PotentialSpec::Quadratic(QuadraticPotential::harmonic(ph.mass, omega)),
    }
}

fn hj_closed_form(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let ph = physical(p)?;
    let grid = spacetime_grid(p, GridDefaults { x: (-4.0, 4.0, 81), t: (0.5, 2.0, 31) })?;
    let tol = p.tolerance("tolerance", 1e-8)?;
    let (f, grid) = factors(p, &ph, grid)?;
    let (action, transport): (Box<dyn SpacetimeFunction>, Box<dyn SpacetimeFunction>) = match ph.family {
        Family::Free => (Box::new(FreeAction { mass: ph.mass, x0: ph.x0 }), Box::new(FreeTransport { offset: 0.0 })),
        Family::Harmonic { omega } => (
            Box::new(HarmonicAction { mass: ph.mass, omega, x0: ph.x0 }),
            Box::new(HarmonicTransport { omega, offset: 0.0 }),
        ),
    };
    let pot = potential(&ph);
    let (mut hj, mut curv) = (Vec::new(), Vec::new());
    for j in 0..grid.n_t() {
        if grid.is_excluded(j) {
            continue;
        }
        for i in 0..grid.n_x() {
            let (x, t) = (grid.x(i), grid.t(j));
            hj.push(hamilton_jacobi_residual(action.as_ref(), pot.eval(x, t), ph.mass, x, t).norm());
            curv.push(curvature_residual(action.as_ref(), transport.as_ref(), ph.mass, x, t).norm());
        }
    }
    let rows = propagator_rows(&f, &grid)?;
    run.at_most("hj-residual", max_abs(hj), tol);
    run.at_most("curvature-residual", max_abs(curv), tol);
    run.table("propagator.csv", PROPAGATOR_HEADER, rows);
    Ok(())
}

/// `(R, f1, f0)` of a family as functions of time.
type Exact = Box<dyn Fn(f64) -> [f64; 3]>;

fn prefactor_ode(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let family = p.choice("family", &["free", "harmonic", "driven"])?;
    let mass = p.positive("mass", 1.0)?;
    let x0 = p.f64("x0", 0.4)?;
    let step = p.positive("step", 1e-4)?;
    let tol = p.tolerance("tolerance", 1e-8)?;
    let order_tol = p.tolerance("order-tolerance", 0.5)?;
    let conv = p.f64_list("conv-steps", &[0.1, 0.05, 0.025])?;
    let (pot, init, window, exact): (QuadraticPotential, PrefactorInit, (f64, f64), Exact) = match family {
        "free" => {
            let t0 = p.positive("t0", 1.0)?;
            let t1 = p.f64("t1", 2.0)?;
            let fp = FreeParticle::new(mass);
            (
                QuadraticPotential::free(),
                fp.init_at(x0, t0),
                (t0, t1),
                Box::new(move |t: f64| [-0.5 * t.ln(), -mass * x0 / t, mass * x0 * x0 / (2.0 * t)]),
            )
        }
        "harmonic" => {
            let omega = p.positive("omega", 1.0)?;
            let t0 = p.positive("t0", 0.5)?;
            let t1 = p.f64("t1", 2.5)?;
            if omega * t1 >= PI {
                return Err(param_error("t1", "window must end before the first caustic at pi/omega"));
            }
            let osc = HarmonicOscillator::new(mass, omega);
            (
                QuadraticPotential::harmonic(mass, omega),
                osc.init_at(x0, t0),
                (t0, t1),
                Box::new(move |t: f64| {
                    let (s, c) = (omega * t).sin_cos();
                    [-0.5 * s.ln(), -mass * omega * x0 / s, 0.5 * mass * omega * x0 * x0 * c / s]
                }),
            )
        }
        _ => {
            let omega = p.positive("omega", 1.0)?;
            let c0 = p.f64("c0", 0.3)?;
            let c1 = p.f64("c1", 0.8)?;
            let drive = p.f64("drive", 0.3)?;
            let t0 = p.f64("t0", 0.2)?;
            let t1 = p.f64("t1", 1.0)?;
            let f0_init = p.f64("f0", 0.1)?;
            let d = DrivenOscillator { mass, omega, c0, c1 };
            // f0' = -g0 - f1^2/(2m) with g0 = drive sin t, f1 = c1 sec(w t + c0)
            let antideriv = move |t: f64| -c1 * c1 / (2.0 * mass * omega) * (omega * t + c0).tan() + drive * t.cos();
            (
                QuadraticPotential::driven(mass, omega, Arc::new(move |t: f64| drive * t.sin())),
                d.init_at(t0, f0_init),
                (t0, t1),
                Box::new(move |t: f64| [d.r(t), d.f1(t), f0_init + antideriv(t) - antideriv(t0)]),
            )
        }
    };
    if !(window.1 > window.0) {
        return Err(param_error("t1", "must exceed t0"));
    }
    let solve = |h: f64| solve_prefactor_odes(&pot, mass, init, window, PrefactorOptions { step: h, ..Default::default() });
    let error = |sol: &semiprop_core::quadratic::PrefactorSolution| {
        let mut worst: f64 = 0.0;
        for k in 0..sol.len() {
            let [r, f1, f0] = exact(sol.times[k]);
            worst = worst.max((sol.r[k] - r).abs()).max((sol.f1[k] - f1).abs()).max((sol.f0[k] - f0).abs());
        }
        worst
    };
    let sol = solve(step)?;
    let fine = error(&sol);
    let mut levels = Vec::new();
    for h in conv {
        levels.push((h, error(&solve(h)?)));
    }
    let order = run.convergence("prefactor", &levels)?;
    run.at_most("max-error", fine, tol);
    run.within("observed-order", order.unwrap_or(f64::NAN), 4.0, order_tol);
    if let Some(b) = sol.blow_up {
        run.diagnostic("blow-up-time", b);
    }
    let rows = (0..sol.len()).map(|k| vec![sol.times[k], sol.r[k], sol.dr[k], sol.f1[k], sol.f0[k]]).collect();
    run.table("prefactor.csv", &["t", "R", "dR", "f1", "f0"], rows);
    Ok(())
}

fn van_vleck(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let ph = physical(p)?;
    let grid = spacetime_grid(p, GridDefaults { x: (-2.0, 2.0, 21), t: (0.2, 3.0, 15) })?;
    let x0s = axis(p, "x0", (-1.0, 1.0, 11))?;
    let scale = p.f64("action-scale", 1.0)?;
    let tol = p.tolerance("tolerance", 1e-8)?;
    let (f, grid) = factors(p, &ph, grid)?;
    let base = van_vleck_check(&f, &grid, &x0s, None)?;
    let report = if scale == 1.0 {
        base.clone()
    } else {
        // keep the constant fitted to the unscaled family
        let family: Arc<dyn TwoPointAction> = match ph.family {
            Family::Free => Arc::new(ScaledAction { inner: FreeParticle::new(ph.mass), factor: scale }),
            Family::Harmonic { omega } => Arc::new(ScaledAction { inner: HarmonicOscillator::new(ph.mass, omega), factor: scale }),
        };
        let scaled = f.clone().with_two_point(family, ph.x0);
        van_vleck_check(&scaled, &grid, &x0s, Some(base.constant))?
    };
    run.at_most("max-deviation", report.max_deviation, tol);
    run.diagnostic("fitted-constant", report.constant);
    run.diagnostic("breakdown-nodes", report.breakdowns.len() as f64);
    let rows = report.per_time.iter().map(|(t, d)| vec![*t, *d]).collect();
    run.table("van_vleck.csv", &["t", "max_deviation"], rows);
    Ok(())
}

fn necessity(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let mass = p.positive("mass", 1.0)?;
    let omega = p.positive("omega", 1.0)?;
    let quartic = p.f64("quartic", 0.1)?;
    let x0 = p.f64("x0", 0.0)?;
    let tol = p.tolerance("tolerance", 1e-8)?;
    let grid = spacetime_grid(p, GridDefaults { x: (-1.0, 1.0, 21), t: (0.2, 1.2, 101) })?;
    if omega * grid.time.max >= PI {
        return Err(param_error("t-max", "the probe window must end before the caustic at pi/omega"));
    }
    let g2 = 0.5 * mass * omega * omega;
    let v = move |x: f64, _t: f64| g2 * x * x + quartic * x.powi(4);
    let init = HarmonicOscillator::new(mass, omega).init_at(x0, grid.time.min);
    let report = quadratic_necessity_probe(v, mass, &grid, init)?;
    if quartic == 0.0 {
        run.at_most("quadratic-control-residual", report.residual, tol);
    } else {
        run.diagnostic("non-quadratic-residual", report.residual);
    }
    Ok(())
}

fn schrodinger(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let ph = physical(p)?;
    let base = spacetime_grid(p, GridDefaults { x: (-4.0, 4.0, 512), t: (0.5, 2.0, 256) })?;
    let levels = p.usize("levels", 3)?;
    let order_tol = p.tolerance("order-tolerance", 0.3)?;
    if levels < 3 {
        return Err(param_error("levels", "a convergence table needs at least three levels"));
    }
    let pot = potential(&ph);
    let mut rows = Vec::new();
    for k in 0..levels {
        let scale = 1usize << k;
        let g = SpacetimeGrid::from_extents(
            base.space.min,
            base.space.max,
            base.space.n * scale,
            base.time.min,
            base.time.max,
            base.time.n * scale,
        )?;
        let (f, g) = factors(p, &ph, g)?;
        let kf = assemble_propagator(&f, &g)?;
        let res = schrodinger_residual(&kf, &pot, ph.hbar, ph.mass)?;
        rows.push((g.hx(), res.relative));
    }
    let order = run.convergence("schrodinger", &rows)?;
    run.within("observed-order", order.unwrap_or(f64::NAN), 2.0, order_tol);
    run.diagnostic("finest-relative-residual", rows.last().map(|r| r.1).unwrap_or(f64::NAN));
    Ok(())
}

