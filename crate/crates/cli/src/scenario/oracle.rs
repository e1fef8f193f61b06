use std::f64::consts::PI;
use std::sync::Arc;

use semiprop_core::oracle::{cn_evolve, kernel_propagate, schrodinger_residual, Kernel, PotentialSpec, Tilted, WaveState, REFERENCE_TAU};
use semiprop_core::quadratic::{FreeParticle, HarmonicOscillator, QuadraticPotential};
use semiprop_core::{Complex64, ComplexField, SpacetimeGrid, TwoPointAction};

use super::axis;
use crate::args::{param_error, CliResult, Params};
use crate::report::Run;

pub fn run(run: &mut Run, check: &str) -> CliResult<()> {
    match check {
        "cn-gaussian" => cn_gaussian(run),
        "cn-coherent" => cn_coherent(run),
        "kernel-vs-cn" => kernel_vs_cn(run),
        "residual-negative" => residual_negative(run),
        _ => unreachable!("checked by the dispatcher"),
    }
}

fn state_rows(s: &WaveState) -> Vec<Vec<f64>> {
    s.space.points().zip(&s.psi).map(|(x, v)| vec![x, v.re, v.im, v.norm_sqr()]).collect()
}

const STATE_HEADER: &[&str] = &["x", "re_psi", "im_psi", "density"];

/// Step count and step size reaching `t_end` exactly.
fn steps(p: &Params, t_end: f64) -> CliResult<(usize, f64)> {
    let dt = p.positive("dt", 1e-3)?;
    let n = (t_end / dt).round().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

fn cn_gaussian(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let space = axis(p, "x", (-16.0, 16.0, 512))?;
    let (hbar, mass) = (p.positive("hbar", 1.0)?, p.positive("mass", 1.0)?);
    let sigma = p.positive("sigma", 1.0)?;
    let centre = p.f64("centre", 0.0)?;
    let k = p.f64("wavenumber", 0.0)?;
    let t_end = p.positive("t-end", 1.0)?;
    let (n, dt) = steps(p, t_end)?;
    let tol = p.tolerance("tolerance", 1e-3)?;
    let norm_tol = p.tolerance("norm-tolerance", 1e-10)?;
    let s0 = WaveState::gaussian(space, centre, sigma, k, 0.0, hbar, mass)?;
    let ev = cn_evolve(&s0, &PotentialSpec::Zero, dt, n)?;
    let want = sigma * (1.0 + (hbar * t_end / (2.0 * mass * sigma * sigma)).powi(2)).sqrt();
    let mean = centre + hbar * k * t_end / mass;
    run.at_most("width-error", (ev.state.width() - want).abs(), tol);
    run.at_most("mean-position-error", (ev.state.mean_position() - mean).abs(), tol);
    run.at_most("norm-drift", (ev.state.norm() - s0.norm()).abs(), norm_tol);
    run.diagnostic("boundary-amplitude", ev.boundary_warning.unwrap_or(0.0));
    run.table("state.csv", STATE_HEADER, state_rows(&ev.state));
    Ok(())
}

fn cn_coherent(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let space = axis(p, "x", (-10.0, 10.0, 512))?;
    let (hbar, mass) = (p.positive("hbar", 1.0)?, p.positive("mass", 1.0)?);
    let omega = p.positive("omega", 1.0)?;
    let xc = p.f64("centre", 1.0)?;
    let t_end = p.positive("t-end", PI / 2.0)?;
    let (n, dt) = steps(p, t_end)?;
    let tol = p.tolerance("tolerance", 1e-3)?;
    let sigma = (hbar / (2.0 * mass * omega)).sqrt();
    let s0 = WaveState::gaussian(space, xc, sigma, 0.0, 0.0, hbar, mass)?;
    let pot = PotentialSpec::Quadratic(QuadraticPotential::harmonic(mass, omega));
    let ev = cn_evolve(&s0, &pot, dt, n)?;
    run.at_most("mean-position-error", (ev.state.mean_position() - xc * (omega * t_end).cos()).abs(), tol);
    run.at_most("width-error", (ev.state.width() - sigma).abs(), tol);
    run.diagnostic("boundary-amplitude", ev.boundary_warning.unwrap_or(0.0));
    run.table("state.csv", STATE_HEADER, state_rows(&ev.state));
    Ok(())
}

fn kernel_vs_cn(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let family = p.choice("family", &["free", "harmonic"])?;
    let (hbar, mass) = (p.positive("hbar", 1.0)?, p.positive("mass", 1.0)?);
    let tilt = p.f64("tilt", 0.01)?;
    let tol = p.tolerance("tolerance", 1e-3)?;
    let threshold = p.tolerance("perturbed-threshold", 1e-2)?;
    type Pair = (Arc<dyn TwoPointAction>, Arc<dyn TwoPointAction>);
    let ((exact, tilted), space, centre, sigma, t_end, pot): (Pair, _, _, _, _, _) = match family {
        "free" => (
            (Arc::new(FreeParticle::new(mass)), Arc::new(Tilted { inner: FreeParticle::new(mass), coefficient: tilt })),
            axis(p, "x", (-16.0, 16.0, 512))?,
            p.f64("centre", 0.0)?,
            p.positive("sigma", 1.0)?,
            p.positive("t-end", 1.0)?,
            PotentialSpec::Zero,
        ),
        _ => {
            let omega = p.positive("omega", 1.0)?;
            let t_end = p.positive("t-end", PI / 2.0)?;
            if (t_end * omega / PI).fract() == 0.0 {
                return Err(param_error("t-end", "lands on a caustic"));
            }
            let osc = HarmonicOscillator::new(mass, omega);
            (
                (Arc::new(osc), Arc::new(Tilted { inner: osc, coefficient: tilt })),
                axis(p, "x", (-10.0, 10.0, 512))?,
                p.f64("centre", 1.0)?,
                p.positive("sigma", 0.5)?,
                t_end,
                PotentialSpec::Quadratic(QuadraticPotential::harmonic(mass, omega)),
            )
        }
    };
    let (n, dt) = steps(p, t_end)?;
    let s0 = WaveState::gaussian(space, centre, sigma, 0.0, 0.0, hbar, mass)?;
    let cn = cn_evolve(&s0, &pot, dt, n)?.state;
    let kernel = |fam: Arc<dyn TwoPointAction>| Kernel::new(fam, hbar, mass).normalized_at(REFERENCE_TAU);
    let good = kernel_propagate(&s0, &kernel(exact), t_end)?;
    let bad = kernel_propagate(&s0, &kernel(tilted), t_end)?;
    run.at_most("l2-kernel-vs-cn", good.l2_distance(&cn)?, tol);
    run.at_least("l2-perturbed-kernel-vs-cn", bad.l2_distance(&cn)?, threshold);
    run.table("state.csv", &["x", "re_psi_kernel", "im_psi_kernel", "re_psi_cn", "im_psi_cn"], {
        let mut rows = Vec::new();
        for ((x, a), b) in good.space.points().zip(&good.psi).zip(&cn.psi) {
            rows.push(vec![x, a.re, a.im, b.re, b.im]);
        }
        rows
    });
    Ok(())
}

/// `K = exp(x + t)` is not a solution, so its relative residual must stay
/// order one under refinement.
fn residual_negative(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let levels = p.usize_list("levels", &[33, 65, 129])?;
    let threshold = p.tolerance("threshold", 0.1)?;
    if levels.len() < 3 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param_error("levels", "need at least three increasing node counts"));
    }
    let mut table = Vec::new();
    for &n in &levels {
        let g = SpacetimeGrid::from_extents(-1.0, 1.0, n, 0.0, 1.0, n).map_err(|e| param_error("levels", e.to_string()))?;
        let k = ComplexField::from_fn(&g, "K", |x, t| Complex64::new(x + t, 0.0).exp())?;
        table.push((g.hx(), schrodinger_residual(&k, &PotentialSpec::Zero, 1.0, 1.0)?.relative));
    }
    let smallest = table.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    run.at_least("min-relative-residual", smallest, threshold);
    run.convergence("non_solution", &table)?;
    Ok(())
}
