use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn semiprop(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_semiprop"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn free_van_vleck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = semiprop(&["quadratic", "van-vleck", "--family", "free"], dir.path());
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path());
    assert_eq!(r["pass"], true);
    assert_eq!(r["scenario"]["parameters"]["family"], "free");
    assert!(dir.path().join("van_vleck.csv").exists());
}

#[test]
fn de_sitter_tracks_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = semiprop(&["cosmo", "de-sitter", "--lambda", "3"], dir.path());
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path());
    assert!(check(&r, "relative-error-a")["value"].as_f64().unwrap() <= 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,a,adot,phi,phidot,constraint_residual");
    let conv = std::fs::read_to_string(dir.path().join("convergence_a_error.csv")).unwrap();
    assert!(conv.lines().nth(1).unwrap().ends_with(",n/a"));
}

#[test]
fn zero_conformal_factor_gives_sixteen() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = semiprop(&["lattice", "conformal-transport", "--lambda", "8", "--dims", "[4,4]"], dir.path());
    assert_eq!(code, 0, "{err}");
    let v = check(&report(dir.path()), "transport-value")["value"].as_f64().unwrap();
    assert!((v - 16.0).abs() < 1e-12, "{v}");
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = semiprop(&["warp-drive", "engage"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("warp-drive"), "{err}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn bad_parameters_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = semiprop(&["oracle", "cn-gaussian", "--sigma", "-1"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("`sigma`"), "{err}");
    let (code, _, err) = semiprop(&["oracle", "cn-gaussian", "--sigmaa", "1"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("`sigmaa`"), "{err}");
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // far too few nodes for the width to be resolved
    let (code, out, _) = semiprop(&["oracle", "cn-gaussian", "--nx", "16", "--tolerance", "1e-9"], dir.path());
    assert_eq!(code, 1, "{out}");
    assert_eq!(report(dir.path())["pass"], false);
}

#[test]
fn seeded_runs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let (code, _, err) = semiprop(&["lattice", "conformal-transport", "--sigma-mode", "random", "--seed", "11"], d.path());
        assert_eq!(code, 0, "{err}");
    }
    let read = |d: &Path| std::fs::read_to_string(d.join("transport.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let (ra, rb) = (report(a.path()), report(b.path()));
    assert_eq!(ra["checks"], rb["checks"]);
    assert_eq!(ra["seed"], 11);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# stiff matter\nt-end = 4\nstep = 0.5\n").unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = semiprop(&["cosmo", "stiff-fluid", "--config", cfg.to_str().unwrap(), "--step", "1e-3"], &out);
    assert_eq!(code, 0, "{err}");
    let params = &report(&out)["scenario"]["parameters"];
    assert_eq!(params["t-end"], "4");
    assert_eq!(params["step"], "1e-3");
}

#[test]
fn sweep_writes_one_directory_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("lambdas.txt");
    std::fs::write(&sweep, "lambda=3\nlambda=6 a0=2\n\n# comment\nlambda=0.75\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, err) = semiprop(&["cosmo", "de-sitter", "--sweep", sweep.to_str().unwrap()], &out);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("sweep PASS"), "{stdout}");
    for (i, lambda) in ["3", "6", "0.75"].iter().enumerate() {
        let r = report(&out.join(format!("run_{i}")));
        assert_eq!(r["scenario"]["parameters"]["lambda"], *lambda);
    }
}

#[test]
fn sweep_fails_if_any_set_fails() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sets.txt");
    std::fs::write(&sweep, "nx=512\nnx=16 tolerance=1e-9\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, _) = semiprop(&["oracle", "cn-gaussian", "--sweep", sweep.to_str().unwrap()], &out);
    assert_eq!(code, 1);
    assert!(stdout.contains("run_0: PASS") && stdout.contains("run_1: FAIL"), "{stdout}");
}

#[test]
fn in_process_help() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(semiprop::execute(["--help".to_string()], &mut out, &mut err), 0);
    assert!(String::from_utf8(out).unwrap().contains("conformal-transport"));
}
