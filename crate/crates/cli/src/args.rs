//! Command-line grammar and the key=value parameter store.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

pub const USAGE: &str = "\
usage: semiprop <scenario> <check> [--param value]... [--config path] [--out dir] [--sweep path]

scenarios and checks:
  quadratic   hj-closed-form prefactor-ode van-vleck necessity schrodinger-residual
  general-hj  nult exp-potential build-s recover-potential imaginary-scaling
  oracle      cn-gaussian cn-coherent kernel-vs-cn residual-negative
  cosmo       constraint de-sitter stiff-fluid complex-action closure scale-factor
              entropy-scaling rk4-convergence
  lattice     greens functional-hj klein-gordon conformal-transport conformal-real
              conformal-imaginary

--config reads key=value lines ('#' starts a comment); flags override it.
--out defaults to ./semiprop-out. --sweep reads one parameter set per line
(whitespace-separated key=value pairs) and runs the sets concurrently.
";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Param { name: String, reason: String },
    Core(semiprop_core::Error),
    Io { path: PathBuf, source: std::io::Error },
    Output(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}\n\n{USAGE}"),
            CliError::Param { name, reason } => write!(f, "parameter `{name}`: {reason}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Output(msg) => write!(f, "output: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<semiprop_core::Error> for CliError {
    fn from(e: semiprop_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn param_error(name: &str, reason: impl Into<String>) -> CliError {
    CliError::Param { name: name.to_string(), reason: reason.into() }
}

/// Parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub scenario: String,
    pub check: String,
    pub flags: BTreeMap<String, String>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub sweep: Option<PathBuf>,
}

pub enum Command {
    Help,
    Run(Invocation),
}

pub fn parse_args<I: IntoIterator<Item = String>>(args: I) -> CliResult<Command> {
    let mut positional = Vec::new();
    let mut flags = BTreeMap::new();
    let (mut config, mut out, mut sweep) = (None, None, None);
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        if arg == "-h" || arg == "--help" || arg == "help" {
            return Ok(Command::Help);
        }
        let Some(key) = arg.strip_prefix("--") else {
            positional.push(arg);
            continue;
        };
        let value = it.next().ok_or_else(|| CliError::Usage(format!("flag --{key} needs a value")))?;
        match key {
            "config" => config = Some(PathBuf::from(value)),
            "out" => out = Some(PathBuf::from(value)),
            "sweep" => sweep = Some(PathBuf::from(value)),
            "" => return Err(CliError::Usage("empty flag name".into())),
            _ => {
                if flags.insert(key.to_string(), value).is_some() {
                    return Err(CliError::Usage(format!("flag --{key} given twice")));
                }
            }
        }
    }
    let [scenario, check]: [String; 2] = positional
        .try_into()
        .map_err(|p: Vec<String>| CliError::Usage(format!("expected <scenario> <check>, got {} positional argument(s)", p.len())))?;
    Ok(Command::Run(Invocation {
        scenario,
        check,
        flags,
        config,
        out: out.unwrap_or_else(|| PathBuf::from("semiprop-out")),
        sweep,
    }))
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str, origin: &Path) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{}:{}: expected key=value, got `{line}`", origin.display(), n + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Merged parameters with typed getters. Every key that is read is
/// remembered so that leftovers can be reported as unknown.
#[derive(Debug)]
pub struct Params {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Params {
    pub fn new(values: BTreeMap<String, String>) -> Self {
        Self { values, used: RefCell::new(BTreeSet::new()) }
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    pub fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.values.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }

    /// Raw text, marking the key as used.
    pub fn text(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    pub fn f64(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => {
                let v: f64 = s.parse().map_err(|_| param_error(key, format!("`{s}` is not a number")))?;
                if !v.is_finite() {
                    return Err(param_error(key, "must be finite"));
                }
                Ok(v)
            }
        }
    }

    pub fn positive(&self, key: &str, default: f64) -> CliResult<f64> {
        let v = self.f64(key, default)?;
        if !(v > 0.0) {
            return Err(param_error(key, "must be positive"));
        }
        Ok(v)
    }

    /// A tolerance: positive, defaulting to `default`.
    pub fn tolerance(&self, key: &str, default: f64) -> CliResult<f64> {
        self.positive(key, default)
    }

    pub fn usize(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| param_error(key, format!("`{s}` is not a non-negative integer"))),
        }
    }

    pub fn u64(&self, key: &str, default: u64) -> CliResult<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| param_error(key, format!("`{s}` is not a non-negative integer"))),
        }
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => split_list(s)
                .map(|t| t.parse::<f64>().map_err(|_| param_error(key, format!("`{t}` is not a number"))))
                .collect(),
        }
    }

    pub fn usize_list(&self, key: &str, default: &[usize]) -> CliResult<Vec<usize>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => split_list(s)
                .map(|t| t.parse::<usize>().map_err(|_| param_error(key, format!("`{t}` is not an integer"))))
                .collect(),
        }
    }

    /// One of `allowed`; the first entry is the default.
    pub fn choice(&self, key: &str, allowed: &[&'static str]) -> CliResult<&'static str> {
        match self.raw(key) {
            None => Ok(allowed[0]),
            Some(s) => allowed
                .iter()
                .find(|a| **a == s)
                .copied()
                .ok_or_else(|| param_error(key, format!("`{s}` is not one of {}", allowed.join(", ")))),
        }
    }
}

/// `[1, 2, 3]`, `1,2,3` and `1 2 3` are all accepted.
fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.trim_matches(|c| c == '[' || c == ']')
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn grammar() {
        let Command::Run(inv) = parse_args(args("cosmo de-sitter --lambda 3 --out /tmp/x")).unwrap() else {
            panic!("expected a run")
        };
        assert_eq!((inv.scenario.as_str(), inv.check.as_str()), ("cosmo", "de-sitter"));
        assert_eq!(inv.flags["lambda"], "3");
        assert_eq!(inv.out, PathBuf::from("/tmp/x"));
        assert!(matches!(parse_args(args("cosmo")), Err(CliError::Usage(_))));
        assert!(matches!(parse_args(args("cosmo de-sitter --lambda")), Err(CliError::Usage(_))));
        assert!(matches!(parse_args(args("--help")), Ok(Command::Help)));
    }

    #[test]
    fn key_value_files() {
        let m = parse_key_values("# comment\nmass = 2\n\ndims=[4, 4] # trailing\n", Path::new("c")).unwrap();
        assert_eq!(m["mass"], "2");
        assert_eq!(m["dims"], "[4, 4]");
        assert!(parse_key_values("nonsense", Path::new("c")).is_err());
    }

    #[test]
    fn typed_getters_name_the_parameter() {
        let p = Params::new(BTreeMap::from([
            ("mass".to_string(), "-1".to_string()),
            ("dims".to_string(), "[4, 4]".to_string()),
            ("family".to_string(), "harmonic".to_string()),
            ("stray".to_string(), "1".to_string()),
        ]));
        let err = p.positive("mass", 1.0).unwrap_err().to_string();
        assert!(err.contains("`mass`"), "{err}");
        assert_eq!(p.usize_list("dims", &[2]).unwrap(), vec![4, 4]);
        assert_eq!(p.choice("family", &["free", "harmonic"]).unwrap(), "harmonic");
        assert_eq!(p.f64("hbar", 1.0).unwrap(), 1.0);
        assert_eq!(p.unused(), vec!["stray".to_string()]);
    }
}
