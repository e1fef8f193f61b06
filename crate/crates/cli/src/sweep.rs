//! Parameter sweeps: one parameter set per line, run concurrently.

use std::collections::BTreeMap;
use std::path::Path;

use crate::args::{CliError, CliResult};
use crate::scenario::{run_scenario, write_outputs, Completed};

/// Each non-blank line is whitespace-separated `key=value` tokens; `#`
/// starts a comment.
pub fn parse_sweep(text: &str, origin: &Path) -> CliResult<Vec<BTreeMap<String, String>>> {
    let mut sets = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut set = BTreeMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value, got `{tok}`", origin.display(), n + 1)))?;
            set.insert(k.to_string(), v.to_string());
        }
        sets.push(set);
    }
    if sets.is_empty() {
        return Err(CliError::Usage(format!("{}: no parameter sets", origin.display())));
    }
    Ok(sets)
}

/// Run every set (over `base`) on its own thread, writing `out/run_<i>`.
/// The first error in line order is returned.
pub fn run_sweep(
    scenario: &str,
    check: &str,
    base: &BTreeMap<String, String>,
    sets: &[BTreeMap<String, String>],
    out: &Path,
) -> CliResult<Vec<Completed>> {
    let results: Vec<CliResult<Completed>> = std::thread::scope(|s| {
        let handles: Vec<_> = sets
            .iter()
            .enumerate()
            .map(|(i, set)| {
                s.spawn(move || {
                    let mut params = base.clone();
                    params.extend(set.clone());
                    let done = run_scenario(scenario, check, params)?;
                    write_outputs(&out.join(format!("run_{i}")), &done)?;
                    Ok(done)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Output("a sweep worker panicked".into()))))
            .collect()
    });
    results.into_iter().collect()
}
