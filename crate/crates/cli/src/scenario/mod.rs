//! Dispatch from `(scenario, check)` to the library, plus shared helpers.

mod cosmo;
mod general_hj;
mod lattice;
mod oracle;
mod quadratic;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use semiprop_core::{assemble_propagator, Grid1d, PropagatorFactors, SpacetimeGrid};

use crate::args::{param_error, CliError, CliResult, Params};
use crate::report::{write_convergence_csv, write_csv, write_report, Report, Run, ScenarioEcho, VERSION};

type CheckFn = fn(&mut Run, &str) -> CliResult<()>;

const SCENARIOS: &[(&str, &[&str], CheckFn)] = &[
    (
        "quadratic",
        &["hj-closed-form", "prefactor-ode", "van-vleck", "necessity", "schrodinger-residual"],
        quadratic::run,
    ),
    (
        "general-hj",
        &["nult", "exp-potential", "build-s", "recover-potential", "imaginary-scaling"],
        general_hj::run,
    ),
    ("oracle", &["cn-gaussian", "cn-coherent", "kernel-vs-cn", "residual-negative"], oracle::run),
    (
        "cosmo",
        &[
            "constraint",
            "de-sitter",
            "stiff-fluid",
            "complex-action",
            "closure",
            "scale-factor",
            "entropy-scaling",
            "rk4-convergence",
        ],
        cosmo::run,
    ),
    (
        "lattice",
        &["greens", "functional-hj", "klein-gordon", "conformal-transport", "conformal-real", "conformal-imaginary"],
        lattice::run,
    ),
];

/// Everything a finished check produced.
pub struct Completed {
    pub report: Report,
    pub run: Run,
}

/// Run one check in memory. Unknown scenario or check names are usage errors;
/// parameters that no part of the check read are refused.
pub fn run_scenario(scenario: &str, check: &str, params: BTreeMap<String, String>) -> CliResult<Completed> {
    let (_, checks, f) = SCENARIOS
        .iter()
        .find(|(name, _, _)| *name == scenario)
        .ok_or_else(|| CliError::Usage(format!("unknown scenario `{scenario}`")))?;
    if !checks.contains(&check) {
        return Err(CliError::Usage(format!("scenario `{scenario}` has no check `{check}` (known: {})", checks.join(", "))));
    }
    let echo = params.clone();
    let mut run = Run::new(Params::new(params));
    let start = Instant::now();
    f(&mut run, check)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    let unused = run.params.unused();
    if !unused.is_empty() {
        return Err(param_error(&unused.join(", "), format!("not used by {scenario} {check}")));
    }
    let report = Report {
        scenario: ScenarioEcho { name: scenario.to_string(), check: check.to_string(), parameters: echo },
        checks: run.checks.clone(),
        convergence: if run.convergence.is_empty() { None } else { Some(run.convergence.clone()) },
        seed: run.seed,
        runtime_seconds,
        version: VERSION,
        pass: run.pass(),
    };
    Ok(Completed { report, run })
}

pub fn write_outputs(dir: &Path, done: &Completed) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    for t in &done.run.tables {
        write_csv(dir, t)?;
    }
    for t in &done.run.convergence {
        write_convergence_csv(dir, t)?;
    }
    write_report(dir, &done.report)
}

// ---------------------------------------------------------------------------
// Shared helpers

/// Default extents of a spacetime grid.
#[derive(Clone, Copy)]
pub(crate) struct GridDefaults {
    pub x: (f64, f64, usize),
    pub t: (f64, f64, usize),
}

pub(crate) fn spacetime_grid(p: &Params, d: GridDefaults) -> CliResult<SpacetimeGrid> {
    let space = axis(p, "x", d.x)?;
    let time = axis(p, "t", d.t)?;
    Ok(SpacetimeGrid::new(space, time))
}

/// `<name>-min`, `<name>-max`, `n<name>`.
pub(crate) fn axis(p: &Params, name: &str, d: (f64, f64, usize)) -> CliResult<Grid1d> {
    let lo = p.f64(&format!("{name}-min"), d.0)?;
    let hi = p.f64(&format!("{name}-max"), d.1)?;
    let n = p.usize(&format!("n{name}"), d.2)?;
    Grid1d::new(lo, hi, n).map_err(|e| param_error(&format!("n{name}"), e.to_string()))
}

/// `x, t, re_K, im_K, re_R, im_R, re_S, im_S` for every valid node.
pub(crate) fn propagator_rows(factors: &PropagatorFactors, grid: &SpacetimeGrid) -> CliResult<Vec<Vec<f64>>> {
    let k = assemble_propagator(factors, grid)?;
    let r = factors.transport.sample(grid, "R")?;
    let s = factors.action.sample(grid, "S")?;
    Ok(field_rows(grid, &k, &r, &s))
}

pub(crate) fn field_rows(
    grid: &SpacetimeGrid,
    k: &semiprop_core::ComplexField,
    r: &semiprop_core::ComplexField,
    s: &semiprop_core::ComplexField,
) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for j in 0..grid.n_t() {
        for i in 0..grid.n_x() {
            if !(k.is_valid(i, j) && r.is_valid(i, j) && s.is_valid(i, j)) {
                continue;
            }
            let (kv, rv, sv) = (k.at(i, j), r.at(i, j), s.at(i, j));
            rows.push(vec![grid.x(i), grid.t(j), kv.re, kv.im, rv.re, rv.im, sv.re, sv.im]);
        }
    }
    rows
}

pub(crate) const PROPAGATOR_HEADER: &[&str] = &["x", "t", "re_K", "im_K", "re_R", "im_R", "re_S", "im_S"];

/// Largest magnitude; NaN if any entry is NaN.
pub(crate) fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for v in it {
        if v.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(v.abs());
    }
    worst
}
