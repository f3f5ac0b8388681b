//! Run configuration, subcommand dispatch, exponent fitting and report emission.

mod commands;
mod fit;

pub use commands::{
    sample_counts, seeded_points, AccumulateParams, EtaCountParams, EtaMethod, ExponentFitParams, GaugeParams,
    HardyExpectation, HardyParams, LandauParams, Reduce3dParams, ShallowParams, SlowDecayParams,
};
pub use fit::{exponent_fit, ExponentSample, FitResult, Verdict};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "MAGSPEC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subcommand {
    GaugeCheck,
    OnedShallow,
    OnedSlowdecay,
    OnedHardy,
    Landau,
    Accumulate,
    EtaCount,
    ExponentFit,
    Reduce3d,
}

impl Subcommand {
    pub const ALL: [Subcommand; 9] = [
        Subcommand::GaugeCheck,
        Subcommand::OnedShallow,
        Subcommand::OnedSlowdecay,
        Subcommand::OnedHardy,
        Subcommand::Landau,
        Subcommand::Accumulate,
        Subcommand::EtaCount,
        Subcommand::ExponentFit,
        Subcommand::Reduce3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::GaugeCheck => "gauge-check",
            Subcommand::OnedShallow => "oned-shallow",
            Subcommand::OnedSlowdecay => "oned-slowdecay",
            Subcommand::OnedHardy => "oned-hardy",
            Subcommand::Landau => "landau",
            Subcommand::Accumulate => "accumulate",
            Subcommand::EtaCount => "eta-count",
            Subcommand::ExponentFit => "exponent-fit",
            Subcommand::Reduce3d => "reduce3d",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = RunError;
    fn from_str(s: &str) -> Result<Self, RunError> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| RunError::Config(format!("unknown subcommand {s:?}")))
    }
}

/// Top-level config document. `params` is parsed per subcommand.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must name the subcommand being run.
    #[serde(default)]
    pub subcommand: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Value,
}

impl RunConfig {
    /// Parses JSON, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            RunError::Config(format!("{path}: {}", e.inner()))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// Malformed or inconsistent configuration.
    Config(String),
    Numerical(Error),
    Io(String),
}

impl RunError {
    /// 1 for numerical failures, 2 for configuration problems (including
    /// parameters the algorithms reject), 3 for resource caps.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Numerical(Error::ResourceCap(_)) => 3,
            RunError::Numerical(Error::Invalid(_) | Error::UnknownRegime { .. } | Error::Unsupported(_)) => 2,
            RunError::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(e) => write!(f, "{e}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numerical(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Check { name: name.to_string(), pass, detail }
    }
}

/// Result of one subcommand before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub summary: Value,
    /// `(file name, contents)` in emission order.
    pub csv: Vec<(String, String)>,
}

impl Outcome {
    pub(crate) fn new(checks: Vec<Check>, summary: Value) -> Self {
        Outcome { checks, warnings: Vec::new(), summary, csv: Vec::new() }
    }

    pub(crate) fn with_csv(mut self, name: &str, body: String) -> Self {
        self.csv.push((name.to_string(), body));
        self
    }

    pub(crate) fn with_warnings(mut self, w: Vec<String>) -> Self {
        self.warnings.extend(w);
        self
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub subcommand: String,
    pub seed: u64,
    pub exit_code: i32,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub summary: Value,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the config seed.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// `--threads` if given, else `MAGSPEC_THREADS`, else rayon's default.
pub fn resolve_threads(cli: Option<usize>) -> Result<Option<usize>, RunError> {
    if let Some(n) = cli {
        return if n == 0 { Err(RunError::Config("--threads must be positive".into())) } else { Ok(Some(n)) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Config(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Parses `config_text` and runs `sub` in a pool of the requested width.
pub fn execute(sub: Subcommand, config_text: &str, opts: RunOptions) -> Result<(u64, Outcome), RunError> {
    let cfg = RunConfig::from_json(config_text)?;
    if let Some(named) = &cfg.subcommand {
        if named != sub.name() {
            return Err(RunError::Config(format!("subcommand: config is for {named:?}, invoked as {:?}", sub.name())));
        }
    }
    let seed = opts.seed.unwrap_or(cfg.seed);
    let run = || commands::execute(sub, &cfg.params, seed);
    let outcome = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok((seed, outcome))
}

/// Files written by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunStatus {
    pub exit_code: i32,
    pub report: Report,
    pub report_path: PathBuf,
}

/// Runs a subcommand and writes `report.json` plus its CSV files into
/// `out_dir`. The exit code is 0 iff every check passes.
pub fn run(sub: Subcommand, config_text: &str, out_dir: &Path, opts: RunOptions) -> Result<RunStatus, RunError> {
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::Io(format!("{}: {e}", out_dir.display())))?;
    let write = |name: &str, body: &str| {
        std::fs::write(out_dir.join(name), body).map_err(|e| RunError::Io(format!("{name}: {e}")))
    };
    let report = match execute(sub, config_text, opts) {
        Ok((seed, outcome)) => {
            for (name, body) in &outcome.csv {
                write(name, body)?;
            }
            let mut artifacts: Vec<String> = outcome.csv.iter().map(|(n, _)| n.clone()).collect();
            if !outcome.warnings.is_empty() {
                let mut w = String::from("warning\n");
                for line in &outcome.warnings {
                    w += &format!("\"{}\"\n", line.replace('"', "\"\""));
                }
                write("warnings.csv", &w)?;
                artifacts.push("warnings.csv".into());
            }
            let exit_code = if outcome.all_pass() { 0 } else { 1 };
            Report {
                schema_version: SCHEMA_VERSION,
                subcommand: sub.name().into(),
                seed,
                exit_code,
                checks: outcome.checks,
                warnings: outcome.warnings,
                artifacts,
                error: None,
                summary: outcome.summary,
            }
        }
        Err(e) => Report {
            schema_version: SCHEMA_VERSION,
            subcommand: sub.name().into(),
            seed: opts.seed.unwrap_or(0),
            exit_code: e.exit_code(),
            checks: Vec::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
            error: Some(e.to_string()),
            summary: Value::Null,
        },
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| RunError::Io(e.to_string()))?;
    write("report.json", &(text + "\n"))?;
    Ok(RunStatus { exit_code: report.exit_code, report, report_path: out_dir.join("report.json") })
}

/// 17 significant digits.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}
