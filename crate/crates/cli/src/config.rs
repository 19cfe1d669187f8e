//! Resolution of experiment parameters.
//!
//! Precedence, highest first: command-line flags, the `--config` key-value
//! file, the `QZENO_SEED` environment variable (seed only), built-in
//! defaults.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const SEED_ENV: &str = "QZENO_SEED";
pub const DEFAULT_SEED: u64 = 1234;

/// Keys accepted in a config file. `seed`, `format`, `output` and `threads`
/// are common to all experiments.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "format",
    "output",
    "threads",
    "n-max",
    "omega",
    "dt-divisors",
    "t-max",
    "gamma-min",
    "gamma-max",
    "gamma-steps",
    "runs",
    "stepping",
    "step",
    "n-probes",
    "epsilon0",
    "eta",
    "omega-pulsed",
    "dt-max",
    "dt-points",
    "decades",
    "rk4-steps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Fig2,
    Fig3,
    Fig4,
    PulsedSim,
    Equivalence,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::PulsedSim => "pulsed-sim",
            Experiment::Equivalence => "equivalence",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::InvalidArgument(format!(
                "format must be csv or json, got {other:?}"
            ))),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| {
                CliError::Configuration(format!(
                    "line {}: expected key = value, got {raw:?}",
                    lineno + 1
                ))
            })?;
        let key = key.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Configuration(format!(
                "line {}: unknown key {key:?}",
                lineno + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub experiment: Experiment,
    pub seed: u64,
    /// Where the seed came from: flag, config, env or default.
    pub seed_source: &'static str,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Merges config-file values with flag values (flags win).
    pub fn resolve(
        experiment: Experiment,
        config: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
        env_seed: Option<String>,
    ) -> Result<Self, CliError> {
        let (seed_text, seed_source) = if let Some(s) = flags.get("seed") {
            (Some(s.clone()), "flag")
        } else if let Some(s) = config.get("seed") {
            (Some(s.clone()), "config")
        } else if let Some(s) = env_seed {
            (Some(s), "env")
        } else {
            (None, "default")
        };
        let seed = match seed_text {
            Some(s) => s.trim().parse::<u64>().map_err(|_| {
                CliError::InvalidArgument(format!("seed must be an unsigned 64-bit integer, got {s:?}"))
            })?,
            None => DEFAULT_SEED,
        };

        let mut values = config;
        values.extend(flags);

        let format = match values.get("format") {
            Some(f) => Format::parse(f)?,
            None => Format::Csv,
        };
        let output = values.get("output").map(PathBuf::from);
        let threads = match values.get("threads") {
            Some(t) => {
                let n = t.trim().parse::<usize>().map_err(|_| {
                    CliError::InvalidArgument(format!("threads must be a positive integer, got {t:?}"))
                })?;
                if n == 0 {
                    return Err(CliError::InvalidArgument("threads must be at least 1".into()));
                }
                Some(n)
            }
            None => None,
        };

        Ok(Settings {
            experiment,
            seed,
            seed_source,
            format,
            output,
            threads,
            values,
        })
    }

    /// Settings with defaults only; handy for library callers and tests.
    pub fn defaults(experiment: Experiment) -> Self {
        Settings::resolve(experiment, BTreeMap::new(), BTreeMap::new(), None)
            .expect("defaults are valid")
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.values.insert(key.to_string(), value.to_string());
        self
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            Some(s) => parse_real(s).ok_or_else(|| bad_value(key, s, "a real number")),
            None => Ok(default),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key)
            .map(|s| parse_real(s).ok_or_else(|| bad_value(key, s, "a real number")))
            .transpose()
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.raw(key) {
            Some(s) => s
                .trim()
                .parse()
                .map_err(|_| bad_value(key, s, "a non-negative integer")),
            None => Ok(default),
        }
    }

    pub fn list_f64_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|x| parse_real(x).ok_or_else(|| bad_value(key, s, "a comma-separated list of numbers")))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }
}

fn bad_value(key: &str, value: &str, expected: &str) -> CliError {
    CliError::InvalidArgument(format!("{key} must be {expected}, got {value:?}"))
}

/// Parses a real number; a trailing `pi` multiplies by π (`2pi`, `0.5pi`, `pi`).
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let lower = s.to_ascii_lowercase();
    let x = if let Some(head) = lower.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let k = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
        k * PI
    } else {
        lower.parse::<f64>().ok()?
    };
    x.is_finite().then_some(x)
}
