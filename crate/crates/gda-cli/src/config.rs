//! Experiment configuration: one TOML or JSON document per experiment,
//! sectioned by subcommand, with command-line flags taking precedence over
//! file values. Only the sections of the selected subcommand are consulted;
//! unknown keys are rejected so typos surface as configuration errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    /// External SDP solver command line. The `PEP_SDP_SOLVER` environment
    /// variable overrides both this value and the `--solver` flag.
    pub solver: Option<String>,
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub pep: PepSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub reproduce: ReproduceSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    /// Named built-in instance: `rps` or `noninterior3x3`.
    pub builtin: Option<String>,
    /// Path to a plain-text payoff matrix file.
    pub matrix: Option<PathBuf>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    /// uniform01 | randint | binary | normal | lognormal | exponential
    pub dist: Option<String>,
    pub game_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub algorithm: Option<String>,
    pub eta: Option<f64>,
    pub steps: Option<usize>,
    pub repeats: Option<usize>,
    /// `uniform` (uniform-random simplex point) or `vertex` (random vertex).
    pub init: Option<String>,
    pub record_per_decade: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PepSection {
    pub algorithm: Option<String>,
    pub horizon: Option<usize>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    pub points: Option<usize>,
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub max_rounds: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub algorithm: Option<String>,
    pub eta: Option<f64>,
    pub steps: Option<usize>,
    pub init: Option<String>,
    /// Probe pairs drawn per recorded step for the descent inequalities.
    pub probes: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceSection {
    pub steps: Option<usize>,
    pub repeats: Option<usize>,
    pub horizons: Option<Vec<usize>>,
    pub algorithms: Option<Vec<String>>,
}

impl FileConfig {
    /// Loads a config document, deciding the format by extension and
    /// falling back to trying both parsers for anything else.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "json" => serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("config {}: {e}", path.display()))),
            "toml" => toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("config {}: {e}", path.display()))),
            _ => toml::from_str(&text).or_else(|toml_err| {
                serde_json::from_str(&text).map_err(|json_err| {
                    CliError::Config(format!(
                        "config {} parses as neither TOML ({toml_err}) nor JSON ({json_err})",
                        path.display()
                    ))
                })
            }),
        }
    }
}

/// Flag value if given, else the config-file value, else the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value if given, else the config-file value, else a configuration
/// error naming the missing parameter.
pub fn need<T>(flag: Option<T>, file: Option<T>, what: &str) -> CliResult<T> {
    flag.or(file)
        .ok_or_else(|| CliError::Config(format!("missing required parameter: {what}")))
}
