use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mosci_core::bootstrap::DEFAULT_RESAMPLES;
use mosci_core::simharness::{
    ScenarioKind, ScenarioSpec, DEFAULT_CONDITIONS, DEFAULT_RUNS, DEFAULT_SUBJECTS,
};
use mosci_core::{BootstrapSpec, ConfidenceSpec, EstimatorId, RngStream, Scale};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const SEED_ENV: &str = "MOSCI_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(CliError::Config(format!("unknown output format '{other}'"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

/// Fully resolved settings of one invocation. Every report embeds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scale_k: u32,
    pub alpha: f64,
    pub estimators: Vec<EstimatorId>,
    pub scenario: ScenarioKind,
    pub subjects: u32,
    pub conditions: u32,
    pub runs: u32,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u32>>,
    /// Destination of the report; not part of the embedded configuration.
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scale_k: 5,
            alpha: 0.05,
            estimators: EstimatorId::ALL.to_vec(),
            scenario: ScenarioKind::Binomial,
            subjects: DEFAULT_SUBJECTS,
            conditions: DEFAULT_CONDITIONS,
            runs: DEFAULT_RUNS,
            seed: 0,
            bootstrap_resamples: DEFAULT_RESAMPLES,
            format: OutputFormat::Json,
            n_list: None,
            out: None,
        }
    }
}

/// Partial settings from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub scale_k: Option<u32>,
    pub alpha: Option<f64>,
    pub estimators: Option<Vec<String>>,
    pub scenario: Option<String>,
    pub subjects: Option<u32>,
    pub conditions: Option<u32>,
    pub runs: Option<u32>,
    pub seed: Option<u64>,
    pub bootstrap_resamples: Option<usize>,
    pub format: Option<String>,
    pub n_list: Option<Vec<u32>>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over `other`.
    pub fn or(self, other: Overrides) -> Overrides {
        Overrides {
            scale_k: self.scale_k.or(other.scale_k),
            alpha: self.alpha.or(other.alpha),
            estimators: self.estimators.or(other.estimators),
            scenario: self.scenario.or(other.scenario),
            subjects: self.subjects.or(other.subjects),
            conditions: self.conditions.or(other.conditions),
            runs: self.runs.or(other.runs),
            seed: self.seed.or(other.seed),
            bootstrap_resamples: self.bootstrap_resamples.or(other.bootstrap_resamples),
            format: self.format.or(other.format),
            n_list: self.n_list.or(other.n_list),
            out: self.out.or(other.out),
        }
    }
}

fn seed_from_env(value: Option<String>) -> Result<Option<u64>> {
    value
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer")))
        })
        .transpose()
}

impl RunConfig {
    /// Resolves settings: explicit overrides first, then the `MOSCI_SEED`
    /// fallback for the seed, then defaults. The result is validated.
    pub fn resolve(overrides: Overrides, env_seed: Option<String>) -> Result<Self> {
        let d = RunConfig::default();
        let estimators = match overrides.estimators {
            Some(list) => {
                let parsed = list
                    .iter()
                    .flat_map(|s| s.split(','))
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<EstimatorId>())
                    .collect::<Result<Vec<_>, _>>()?;
                if parsed.is_empty() {
                    return Err(CliError::Config("estimator list is empty".into()));
                }
                parsed
            }
            None => d.estimators,
        };
        let scenario = match overrides.scenario {
            Some(s) => s.parse()?,
            None => d.scenario,
        };
        let format = match overrides.format {
            Some(f) => f.parse()?,
            None => d.format,
        };
        let seed = match overrides.seed {
            Some(s) => s,
            None => seed_from_env(env_seed)?.unwrap_or(d.seed),
        };
        let mut conditions = overrides.conditions.unwrap_or(d.conditions);
        if scenario == ScenarioKind::Uniform {
            conditions = 1;
        }
        let config = RunConfig {
            scale_k: overrides.scale_k.unwrap_or(d.scale_k),
            alpha: overrides.alpha.unwrap_or(d.alpha),
            estimators,
            scenario,
            subjects: overrides.subjects.unwrap_or(d.subjects),
            conditions,
            runs: overrides.runs.unwrap_or(d.runs),
            seed,
            bootstrap_resamples: overrides.bootstrap_resamples.unwrap_or(d.bootstrap_resamples),
            format,
            n_list: overrides.n_list,
            out: overrides.out,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.scale()?;
        self.conf()?;
        BootstrapSpec::new(self.bootstrap_resamples, self.conf()?, RngStream::new(0, 0, 0))
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.subjects < 2 {
            return Err(CliError::Config("subjects must be >= 2".into()));
        }
        self.scenario_spec()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn scale(&self) -> Result<Scale> {
        Scale::new(self.scale_k).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn conf(&self) -> Result<ConfidenceSpec> {
        ConfidenceSpec::new(self.alpha).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn scenario_spec(&self) -> Result<ScenarioSpec> {
        Ok(ScenarioSpec::new(self.scenario, self.scale()?)
            .with_subjects(self.subjects)
            .with_conditions(self.conditions)
            .with_runs(self.runs)
            .with_seed(self.seed))
    }
}
