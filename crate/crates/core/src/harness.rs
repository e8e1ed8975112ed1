//! Suite registry, configuration and report emission for the `cq` binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{CqError, Result};

mod suites;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Registered suites with a one-line description, in listing order.
pub const SUITES: [(&str, &str); 10] = [
    ("darboux", "flat connection on the Darboux chart"),
    ("r3", "rotation-invariant contact form on R³"),
    ("hamsys", "Hamiltonian systems: flatness, charges, Schrödinger transport"),
    ("s3-strict", "Holstein–Primakoff su(2), truncation and strict S³ flatness"),
    ("s3-ambient", "ambient R⁵ geometry and R⁺-equivariance"),
    ("s3-reduction", "ambient connection reduced to the strict S³ model"),
    ("contactization", "contactization over Darboux and R³ bases"),
    ("metaplectic", "generalized Fourier transforms and the conjugation law"),
    ("contractor", "rescaling cocycle, pairing, D-operator and parabolic lifts"),
    ("transport", "parallel transport: path independence and unitarity"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = CqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(CqError::Config(format!("unknown format {s:?}"))),
        }
    }
}

/// Parameters of one suite run. `None` means the suite default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: String,
    pub hbar: Option<Vec<f64>>,
    pub dim: Option<usize>,
    /// Grid points and half-width.
    pub grid: Option<(usize, f64)>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub tol: BTreeMap<String, f64>,
    /// Restricts the run to these checks, by full name or by the name before
    /// its `[…]` qualifier. Empty means all.
    pub only: Vec<String>,
    pub report: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    verify: FileVerify,
    #[serde(default)]
    tol: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileVerify {
    suite: Option<String>,
    hbar: Option<Vec<f64>>,
    dim: Option<usize>,
    grid: Option<String>,
    samples: Option<usize>,
    seed: Option<u64>,
    only: Vec<String>,
    report: Option<PathBuf>,
    format: Option<String>,
}

impl SuiteConfig {
    pub fn new(suite: &str) -> Self {
        Self { suite: suite.into(), ..Default::default() }
    }

    /// Reads a TOML file with a `[verify]` section and a `[tol]` table.
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: ConfigFile = toml::from_str(text).map_err(|e| CqError::Config(e.to_string()))?;
        let v = f.verify;
        Ok(Self {
            suite: v.suite.unwrap_or_default(),
            hbar: v.hbar,
            dim: v.dim,
            grid: v.grid.as_deref().map(parse_grid).transpose()?,
            samples: v.samples,
            seed: v.seed.unwrap_or(0),
            tol: f.tol,
            only: v.only,
            report: v.report,
            format: v.format.as_deref().map(str::parse).transpose()?.unwrap_or_default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CqError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// `"N,L"` as grid points and half-width.
pub fn parse_grid(s: &str) -> Result<(usize, f64)> {
    let bad = || CqError::Config(format!("grid must be N,L: {s:?}"));
    let (n, l) = s.split_once(',').ok_or_else(bad)?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    let l: f64 = l.trim().parse().map_err(|_| bad())?;
    if n < 8 || !(l > 0.0) {
        return Err(bad());
    }
    Ok((n, l))
}

/// `"name=value"` tolerance override.
pub fn parse_tol(s: &str) -> Result<(String, f64)> {
    let bad = || CqError::Config(format!("tolerance must be name=value: {s:?}"));
    let (k, v) = s.split_once('=').ok_or_else(bad)?;
    let v: f64 = v.trim().parse().map_err(|_| bad())?;
    if !(v > 0.0) {
        return Err(bad());
    }
    Ok((k.trim().to_string(), v))
}

/// Comma-separated list of floats; accepts `p/q` fractions.
pub fn parse_hbars(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let v = match t.split_once('/') {
                Some((a, b)) => a.trim().parse::<f64>().ok().zip(b.trim().parse::<f64>().ok()).map(|(a, b)| a / b),
                None => t.parse().ok(),
            };
            v.filter(|h| *h > 0.0 && h.is_finite()).ok_or_else(|| CqError::Config(format!("bad hbar {t:?}")))
        })
        .collect()
}

/// Controls are prefixed with this and pass when their residual exceeds the
/// tolerance.
pub const CONTROL_PREFIX: &str = "control/";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn is_control(&self) -> bool {
        self.name.starts_with(CONTROL_PREFIX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub suite: String,
    pub params: BTreeMap<String, Value>,
    pub checks: Vec<CheckResult>,
    pub runtime_ms: u64,
    pub version: String,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| CqError::Config(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| CqError::Config(e.to_string()))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CqError::Config(e.to_string());
        w.write_record(["name", "residual", "tolerance", "pass"]).map_err(err)?;
        for c in &self.checks {
            w.write_record([c.name.clone(), format!("{:e}", c.residual), format!("{:e}", c.tolerance), c.pass.to_string()])
                .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CqError::Config(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CqError::Config(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Writes the report; a missing path means standard output.
pub fn emit_report(report: &VerificationReport, format: Format, path: Option<&Path>) -> Result<()> {
    let text = report.render(format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CqError::Config(format!("{}: {e}", p.display()))),
        None => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            Ok(())
        }
    }
}

type CheckFn = Box<dyn Fn() -> Result<f64> + Send + Sync>;

/// One registered check. Names may carry a `[…]` qualifier; tolerance
/// overrides match the part before it.
pub(crate) struct CheckSpec {
    name: String,
    tol: f64,
    control: bool,
    f: CheckFn,
}

impl CheckSpec {
    pub(crate) fn new(name: impl Into<String>, tol: f64, f: impl Fn() -> Result<f64> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), tol, control: false, f: Box::new(f) }
    }

    pub(crate) fn control(name: impl Into<String>, tol: f64, f: impl Fn() -> Result<f64> + Send + Sync + 'static) -> Self {
        let name = name.into();
        debug_assert!(name.starts_with(CONTROL_PREFIX));
        Self { control: true, ..Self::new(name, tol, f) }
    }

    fn key(&self) -> &str {
        self.name.split('[').next().unwrap_or(&self.name)
    }
}

pub(crate) struct SuitePlan {
    pub params: BTreeMap<String, Value>,
    pub checks: Vec<CheckSpec>,
}

/// Thread pool capped by `CQ_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CQ_THREADS") {
        let n: usize = v.parse().map_err(|_| CqError::Config(format!("CQ_THREADS={v:?}")))?;
        if n == 0 {
            return Err(CqError::Config("CQ_THREADS must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CqError::Config(e.to_string()))
}

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.0).collect()
}

/// Names of the checks the configured suite would run, without running them.
pub fn check_names(config: &SuiteConfig) -> Result<Vec<String>> {
    Ok(suites::plan(config)?.checks.into_iter().map(|c| c.name).collect())
}

/// Runs every check of the configured suite. Checks run in parallel and are
/// reported in declaration order.
pub fn run_suite(config: &SuiteConfig) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut plan = suites::plan(config)?;
    for key in config.tol.keys() {
        if !plan.checks.iter().any(|c| c.key() == key) {
            return Err(CqError::Config(format!("no check named {key:?} in suite {}", config.suite)));
        }
    }
    let selected = |c: &CheckSpec, o: &String| c.name == *o || c.key() == o;
    for o in &config.only {
        if !plan.checks.iter().any(|c| selected(c, o)) {
            return Err(CqError::Config(format!("no check named {o:?} in suite {}", config.suite)));
        }
    }
    if !config.only.is_empty() {
        plan.checks.retain(|c| config.only.iter().any(|o| selected(c, o)));
    }
    let results: Vec<Result<CheckResult>> = plan
        .checks
        .par_iter()
        .map(|c| {
            let tol = config.tol.get(c.key()).copied().unwrap_or(c.tol);
            let r = (c.f)().map_err(|e| CqError::Precondition(format!("{}: {e}", c.name)))?;
            let residual = if r.is_finite() { r } else { f64::MAX };
            let pass = if c.control { residual > tol } else { residual < tol };
            Ok(CheckResult { name: c.name.clone(), residual, tolerance: tol, pass })
        })
        .collect();
    let checks = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut params = plan.params;
    params.insert("seed".into(), Value::from(config.seed));
    Ok(VerificationReport {
        suite: config.suite.clone(),
        params,
        checks,
        runtime_ms: start.elapsed().as_millis() as u64,
        version: VERSION.into(),
    })
}
