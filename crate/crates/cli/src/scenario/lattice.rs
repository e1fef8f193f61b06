use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semiprop_core::lattice::{
    conformal_imaginary_part_residual, conformal_real_part_residual, conformal_transport_check,
    conformal_transport_derivative, functional_hj_residual, lattice_dispersion, lattice_greens_function,
    lattice_klein_gordon_check, plane_wave, stencil_kg_residual, LatticeConfig, LatticeField, Quadratic1d, Signature,
};

use super::max_abs;
use crate::args::{param_error, CliResult, Params};
use crate::report::Run;

const DEFAULT_SEED: u64 = 0x5eed_2024;

pub fn run(run: &mut Run, check: &str) -> CliResult<()> {
    match check {
        "greens" => greens(run),
        "functional-hj" => functional_hj(run),
        "klein-gordon" => klein_gordon(run),
        "conformal-transport" => transport(run),
        "conformal-real" => real_part(run),
        "conformal-imaginary" => imaginary_part(run),
        _ => unreachable!("checked by the dispatcher"),
    }
}

struct Defaults {
    dims: &'static [usize],
    spacing: f64,
    mass: f64,
}

fn config(p: &Params, d: Defaults) -> CliResult<LatticeConfig> {
    let dims = p.usize_list("dims", d.dims)?;
    let spacing = p.positive("spacing", d.spacing)?;
    let mass = p.f64("mass", d.mass)?;
    let signature = match p.choice("signature", &["euclidean", "lorentzian"])? {
        "euclidean" => Signature::Euclidean,
        _ => Signature::Lorentzian,
    };
    let cfg = LatticeConfig::new(dims, spacing, signature, mass)?;
    let default_regulator = if signature == Signature::Lorentzian { "auto" } else { "none" };
    let regulator = p.text("regulator");
    Ok(match regulator.as_deref().unwrap_or(default_regulator) {
        "none" => cfg,
        "auto" => cfg.with_regulator(None),
        v => {
            let eps: f64 = v.parse().map_err(|_| param_error("regulator", format!("`{v}` is not none, auto or a number")))?;
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(param_error("regulator", "must be non-negative"));
            }
            cfg.with_regulator(Some(eps))
        }
    })
}

fn rng(p: &Params) -> CliResult<(u64, ChaCha8Rng)> {
    let seed = p.u64("seed", DEFAULT_SEED)?;
    Ok((seed, ChaCha8Rng::seed_from_u64(seed)))
}

fn random_field(cfg: &LatticeConfig, rng: &mut ChaCha8Rng) -> CliResult<LatticeField> {
    Ok(LatticeField::new(cfg.clone(), (0..cfg.n_sites()).map(|_| rng.random_range(-1.0..1.0)).collect())?)
}

/// One row per site: coordinates, then the given columns.
fn site_rows(cfg: &LatticeConfig, columns: &[&[f64]]) -> Vec<Vec<f64>> {
    (0..cfg.n_sites())
        .map(|s| {
            let mut row: Vec<f64> = cfg.coords(s).into_iter().map(|c| c as f64).collect();
            row.extend(columns.iter().map(|c| c[s]));
            row
        })
        .collect()
}

fn site_header(cfg: &LatticeConfig, columns: &[&str]) -> Vec<String> {
    (0..cfg.dims().len()).map(|d| format!("i{d}")).chain(columns.iter().map(|c| c.to_string())).collect()
}

fn push_site_table(run: &mut Run, file: &str, cfg: &LatticeConfig, names: &[&str], columns: &[&[f64]]) {
    let header = site_header(cfg, names);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.table(file, &header, site_rows(cfg, columns));
}

fn greens(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let cfg = config(p, Defaults { dims: &[6, 6], spacing: 0.5, mass: 0.7 })?;
    let tol = p.tolerance("tolerance", 1e-8)?;
    let sym_tol = p.tolerance("symmetry-tolerance", 1e-12)?;
    let q = lattice_greens_function(&cfg)?;
    run.at_most("identity-defect", q.identity_defect(), tol);
    run.at_most("asymmetry", q.asymmetry(), sym_tol);
    let re: Vec<f64> = (0..cfg.n_sites()).map(|s| q.g[(s, 0)].re).collect();
    let im: Vec<f64> = (0..cfg.n_sites()).map(|s| q.g[(s, 0)].im).collect();
    push_site_table(run, "greens.csv", &cfg, &["re_G", "im_G"], &[&re, &im]);
    Ok(())
}

fn functional_hj(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let cfg = config(p, Defaults { dims: &[6, 6], spacing: 0.5, mass: 0.7 })?;
    let draws = p.usize("draws", 100)?;
    let (seed, mut rng) = rng(p)?;
    if draws == 0 {
        return Err(param_error("draws", "need at least one draw"));
    }
    let q = lattice_greens_function(&cfg)?;
    run.seed = Some(seed);
    if cfg.signature == Signature::Euclidean && q.is_real() {
        let mut min = f64::INFINITY;
        for _ in 0..draws {
            let v = functional_hj_residual(&q, &random_field(&cfg, &mut rng)?)?;
            min = min.min(if v.im == 0.0 { v.re } else { f64::NAN });
        }
        run.at_least("euclidean-minimum", min, f64::MIN_POSITIVE);
    } else {
        let (mut re_min, mut re_max, mut im_max) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for _ in 0..draws {
            let v = functional_hj_residual(&q, &random_field(&cfg, &mut rng)?)?;
            re_min = re_min.min(v.re);
            re_max = re_max.max(v.re);
            im_max = im_max.max(v.im.abs());
        }
        run.diagnostic("real-part-min", re_min);
        run.diagnostic("real-part-max", re_max);
        run.diagnostic("max-abs-imaginary-part", im_max);
    }
    Ok(())
}

fn klein_gordon(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let cfg = config(p, Defaults { dims: &[16, 16], spacing: 0.5, mass: 0.7 })?;
    if cfg.signature != Signature::Euclidean {
        return Err(param_error("signature", "evolution runs on an all-spatial lattice"));
    }
    let dt = p.positive("dt", 0.1)?;
    let steps = p.usize("steps", 40)?;
    let modes = p.usize_list("modes", &[2, 1])?;
    let phase = p.f64("phase", 0.3)?;
    let tol = p.tolerance("tolerance", 1e-8)?;
    if modes.len() != cfg.dims().len() {
        return Err(param_error("modes", "need one mode number per lattice axis"));
    }
    if steps < 3 {
        return Err(param_error("steps", "need at least three steps"));
    }
    let omega = lattice_dispersion(&cfg, &modes, dt)?;
    let exact: Vec<Vec<f64>> =
        (0..=steps).map(|k| plane_wave(&cfg, &modes, omega, k as f64 * dt, phase).map(|f| f.values)).collect::<Result<_, _>>()?;
    let oracle = max_abs(stencil_kg_residual(&cfg, &exact, dt));
    let phi0 = plane_wave(&cfg, &modes, omega, 0.0, phase)?;
    let vel = plane_wave(&cfg, &modes, omega, 0.0, phase - PI / 2.0)?;
    let vel = LatticeField::new(cfg.clone(), vel.values.iter().map(|v| omega * v).collect())?;
    let evolved = lattice_klein_gordon_check(&phi0, &vel, steps, dt)?;
    let drift = max_abs(evolved.history.iter().zip(&exact).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y)));
    run.at_most("leapfrog-stencil-residual", evolved.max_residual(), tol);
    run.at_most("plane-wave-stencil-residual", oracle, tol);
    run.diagnostic("deviation-from-plane-wave", drift);
    run.diagnostic("omega", omega);
    if let Some(last) = evolved.history.last() {
        let last = last.clone();
        push_site_table(run, "field.csv", &cfg, &["value"], &[&last]);
    }
    Ok(())
}

fn transport(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let cfg = config(p, Defaults { dims: &[4, 4], spacing: 1.0, mass: 1.0 })?;
    let lambda = p.f64("lambda", 8.0)?;
    let tol = p.tolerance("tolerance", 1e-6)?;
    let sigma = match p.choice("sigma-mode", &["constant", "random"])? {
        "constant" => {
            let c = p.f64("sigma", 0.0)?;
            (LatticeField::constant(&cfg, c), Some(lambda / 8.0 * (2.0 * c).exp() * cfg.n_sites() as f64 * cfg.cell_volume()))
        }
        _ => {
            let (seed, mut rng) = rng(p)?;
            run.seed = Some(seed);
            (random_field(&cfg, &mut rng)?, None)
        }
    };
    let (sigma, closed) = sigma;
    let check = conformal_transport_check(&sigma, lambda)?;
    match closed {
        Some(want) => run.within("transport-value", check.value, want, 1e-12 * want.abs().max(1.0)),
        None => run.diagnostic("transport-value", check.value),
    }
    run.at_most("functional-derivative-deviation", check.max_deviation, tol);
    let dr = conformal_transport_derivative(&sigma, lambda)?;
    push_site_table(run, "transport.csv", &cfg, &["sigma", "dR_dsigma"], &[&sigma.values, &dr.values]);
    Ok(())
}

/// Constant fields with `W = Lambda/8`, `f = 1`; the residual vanishes.
fn real_part(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let cfg = config(p, Defaults { dims: &[4, 4], spacing: 0.5, mass: 1.0 })?;
    let lambda = p.f64("lambda", 1.7)?;
    let phi = LatticeField::constant(&cfg, p.f64("phi", 0.0)?);
    let sigma = LatticeField::constant(&cfg, p.f64("sigma", 0.4)?);
    let w = Quadratic1d { c0: p.f64("w-c0", lambda / 8.0)?, c1: p.f64("w-c1", 0.0)?, c2: p.f64("w-c2", 0.0)? };
    let f = Quadratic1d { c0: p.f64("f-c0", 1.0)?, c1: p.f64("f-c1", 0.0)?, c2: p.f64("f-c2", 0.0)? };
    let tol = p.tolerance("tolerance", 1e-12)?;
    let r = conformal_real_part_residual(&phi, &sigma, &w, &f, lambda)?;
    run.at_most("max-real-part-residual", max_abs(r.values.iter().copied()), tol);
    run.diagnostic("w-vanishes", if r.w_vanishes { 1.0 } else { 0.0 });
    push_site_table(run, "real_part.csv", &cfg, &["residual"], &[&r.values]);
    Ok(())
}

/// Random `sigma`, `phi` and `Lambda`, with `dR/dsigma` from the closed-form
/// transport functional.
fn imaginary_part(run: &mut Run) -> CliResult<()> {
    let p = &run.params;
    let cfg = config(p, Defaults { dims: &[4, 4], spacing: 0.5, mass: 1.0 })?;
    let draws = p.usize("draws", 100)?;
    let w = Quadratic1d { c0: p.f64("w-c0", 1.0)?, c1: p.f64("w-c1", 0.0)?, c2: p.f64("w-c2", 0.5)? };
    let tol = p.tolerance("tolerance", 1e-12)?;
    let (seed, mut rng) = rng(p)?;
    run.seed = Some(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let lambda = rng.random_range(0.1..3.0);
        let sigma = random_field(&cfg, &mut rng)?;
        let phi = random_field(&cfg, &mut rng)?;
        let dr = conformal_transport_derivative(&sigma, lambda)?;
        worst = worst.max(max_abs(conformal_imaginary_part_residual(&sigma, &phi, &w, &dr, lambda)?));
    }
    run.at_most("max-imaginary-part-residual", worst, tol);
    Ok(())
}
