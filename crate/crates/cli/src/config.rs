//! Experiment configuration: a JSON file with command-line overrides.

use std::path::{Path, PathBuf};

use funcsel_core::selector::{Criterion, SelectorConfig};
use funcsel_core::sim::{BetaKind, LinkKind, SimScenario};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub selector: SelectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<SimScenario>,
    /// Scenario variations crossed with `scenario` by `reproduce`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_grid: Option<ScenarioGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_path: Option<PathBuf>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_replicates() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            selector: SelectorConfig::default(),
            scenario: Some(SimScenario::default()),
            scenario_grid: None,
            dataset_path: None,
            replicates: default_replicates(),
            output_dir: default_output_dir(),
        }
    }
}

/// Lists of values to cross; an empty list keeps the base scenario's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioGrid {
    pub beta: Vec<BetaKind>,
    pub link: Vec<LinkKind>,
    pub response_snr: Vec<f64>,
}

impl ScenarioGrid {
    /// All combinations, beta varying slowest.
    pub fn expand(&self, base: &SimScenario) -> Vec<SimScenario> {
        let betas = if self.beta.is_empty() { vec![base.beta] } else { self.beta.clone() };
        let links = if self.link.is_empty() { vec![base.link] } else { self.link.clone() };
        let snrs = if self.response_snr.is_empty() {
            vec![base.response_snr]
        } else {
            self.response_snr.clone()
        };
        let mut out = Vec::with_capacity(betas.len() * links.len() * snrs.len());
        for &beta in &betas {
            for &link in &links {
                for &response_snr in &snrs {
                    out.push(SimScenario {
                        beta,
                        link,
                        response_snr,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

/// Command-line values that replace fields of the loaded configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Sets both the training seed and the scenario seed.
    pub seed: Option<u64>,
    pub criterion: Option<Criterion>,
    pub j_candidates: Option<Vec<usize>>,
    pub output_dir: Option<PathBuf>,
    pub replicates: Option<usize>,
}

impl ExperimentConfig {
    /// Read a JSON config. A relative `dataset_path` is resolved against the
    /// directory holding the config file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(json_err(path))?;
        if let Some(p) = &config.dataset_path {
            if p.is_relative() {
                let dir = path.parent().unwrap_or(Path::new("."));
                config.dataset_path = Some(dir.join(p));
            }
        }
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.selector.train.seed = seed;
            if let Some(s) = self.scenario.as_mut() {
                s.seed = seed;
            }
        }
        if let Some(c) = o.criterion {
            self.selector.criterion = c;
        }
        if let Some(j) = &o.j_candidates {
            self.selector.j_candidates = j.clone();
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(r) = o.replicates {
            self.replicates = r;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        match (&self.scenario, &self.dataset_path) {
            (Some(s), None) => s.validate()?,
            (None, Some(_)) => {}
            _ => {
                return Err(CliError::Config(
                    "exactly one of `scenario` and `dataset_path` must be given".into(),
                ))
            }
        }
        if self.scenario_grid.is_some() && self.scenario.is_none() {
            return Err(CliError::Config("`scenario_grid` requires `scenario`".into()));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("`replicates` must be positive".into()));
        }
        self.selector.validate()?;
        Ok(())
    }

    pub fn scenario(&self) -> CliResult<&SimScenario> {
        self.scenario
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a `scenario`".into()))
    }

    /// Scenarios run by `reproduce`.
    pub fn scenarios(&self) -> CliResult<Vec<SimScenario>> {
        let base = self.scenario()?;
        Ok(match &self.scenario_grid {
            Some(grid) => grid.expand(base),
            None => vec![base.clone()],
        })
    }
}
