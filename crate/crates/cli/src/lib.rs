//! Command-line driver: parses `<scenario> <check>` invocations, runs them
//! against `semiprop-core`, and writes `report.json` plus CSV artifacts.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod report;
pub mod scenario;
pub mod sweep;

use std::collections::BTreeMap;
use std::io::Write;

use args::{parse_args, parse_key_values, read_file, CliError, CliResult, Command, Invocation};
use scenario::{run_scenario, write_outputs, Completed};

/// Process exit status.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Config file first, then command-line flags on top.
pub fn merged_params(inv: &Invocation) -> CliResult<BTreeMap<String, String>> {
    let mut params = match &inv.config {
        Some(path) => parse_key_values(&read_file(path)?, path)?,
        None => BTreeMap::new(),
    };
    params.extend(inv.flags.clone());
    Ok(params)
}

fn exit_code(e: &CliError) -> i32 {
    match e {
        CliError::Usage(_) | CliError::Param { .. } | CliError::Core(_) => EXIT_INVALID,
        CliError::Io { .. } | CliError::Output(_) => EXIT_FAIL,
    }
}

fn summary(done: &Completed, out: &mut impl Write) -> std::io::Result<()> {
    let r = &done.report;
    writeln!(out, "{} {}", r.scenario.name, r.scenario.check)?;
    for c in &r.checks {
        let verdict = if c.diagnostic {
            "info"
        } else if c.pass {
            "pass"
        } else {
            "FAIL"
        };
        let bound = match (c.target, c.tolerance) {
            (Some(t), Some(tol)) => format!(" (target {t:e} +- {tol:e})"),
            (None, Some(tol)) => format!(" ({:?} {tol:e})", c.criterion),
            _ => String::new(),
        };
        writeln!(out, "  [{verdict}] {} = {:e}{bound}", c.name, c.value)?;
    }
    writeln!(out, "{}", if r.pass { "PASS" } else { "FAIL" })
}

/// Run the command line `args` (without the program name); returns the exit
/// status.
pub fn execute<I: IntoIterator<Item = String>>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32 {
    match try_execute(args, stdout) {
        Ok(pass) => {
            if pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn try_execute<I: IntoIterator<Item = String>>(args: I, stdout: &mut impl Write) -> CliResult<bool> {
    let inv = match parse_args(args)? {
        Command::Help => {
            let _ = write!(stdout, "{}", args::USAGE);
            return Ok(true);
        }
        Command::Run(inv) => inv,
    };
    let params = merged_params(&inv)?;
    if let Some(path) = &inv.sweep {
        let sets = sweep::parse_sweep(&read_file(path)?, path)?;
        let results = sweep::run_sweep(&inv.scenario, &inv.check, &params, &sets, &inv.out)?;
        for (i, done) in results.iter().enumerate() {
            let _ = writeln!(stdout, "run_{i}: {}", if done.report.pass { "PASS" } else { "FAIL" });
        }
        let pass = results.iter().all(|d| d.report.pass);
        let _ = writeln!(stdout, "sweep {}", if pass { "PASS" } else { "FAIL" });
        return Ok(pass);
    }
    let done = run_scenario(&inv.scenario, &inv.check, params)?;
    write_outputs(&inv.out, &done)?;
    let _ = summary(&done, stdout);
    Ok(done.report.pass)
}
