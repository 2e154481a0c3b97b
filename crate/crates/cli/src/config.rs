//! Experiment configuration, read from TOML. Every field has a default, and
//! the fully resolved config is echoed into `manifest.json`.

use std::path::{Path, PathBuf};

use afc_core::{PoolMode, RealizationModel, Uncertainty};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random draw in a run derives from it.
    pub seed: u64,
    /// Realizations per anchor row.
    pub samples: usize,
    /// Rescale rows with no observed absorption instead of failing.
    pub stabilize: bool,
    /// Initial distribution; uniform when absent.
    pub initial: Option<Vec<f64>>,
    pub graph: GraphSource,
    pub model: ModelConfig,
    pub baseline: BaselineConfig,
    pub robust: RobustConfig,
    pub reward: RewardConfig,
    pub constrained: ConstrainedConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            samples: 60,
            stabilize: true,
            initial: None,
            graph: GraphSource::default(),
            model: ModelConfig::default(),
            baseline: BaselineConfig::default(),
            robust: RobustConfig::default(),
            reward: RewardConfig::default(),
            constrained: ConstrainedConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    ErdosRenyi { n: usize, p: f64 },
    WattsStrogatz { n: usize, ring_degree: usize, rewire_p: f64 },
    /// Edge list or GML file; relative paths resolve against the config file.
    File { path: PathBuf, format: Option<FileFormat>, weighted: Option<bool> },
    /// A built-in graph: `two_cliques` or `les_miserables`.
    Fixture { name: String },
}

impl Default for GraphSource {
    fn default() -> Self {
        GraphSource::ErdosRenyi { n: 100, p: 0.08 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    EdgeList,
    Gml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    EdgeBernoulli,
    WeightResample,
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub noise: NoiseKind,
    pub p_on: f64,
    pub alpha: f64,
    pub k_min: usize,
    pub rho_mu: f64,
    pub rho_sigma: f64,
    /// Weight cap; the largest base weight when absent.
    pub w_max: Option<f64>,
    pub r_hop: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            noise: NoiseKind::EdgeBernoulli,
            p_on: 0.85,
            alpha: 0.15,
            k_min: 5,
            rho_mu: 0.2,
            rho_sigma: 0.1,
            w_max: None,
            r_hop: None,
        }
    }
}

impl ModelConfig {
    pub fn realization_model(&self, max_base_weight: f64) -> RealizationModel {
        let w_max = self.w_max.unwrap_or(max_base_weight);
        let uncertainty = match self.noise {
            NoiseKind::EdgeBernoulli => Uncertainty::EdgeBernoulli { p_on: self.p_on },
            NoiseKind::WeightResample => {
                Uncertainty::WeightResample { rho_mu: self.rho_mu, rho_sigma: self.rho_sigma, w_max }
            }
            NoiseKind::Composite => {
                Uncertainty::Composite { p_on: self.p_on, rho_mu: self.rho_mu, rho_sigma: self.rho_sigma, w_max }
            }
        };
        RealizationModel { uncertainty, alpha: self.alpha, k_min: self.k_min, r_hop: self.r_hop }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub enabled: bool,
    /// Length of the Top-k table and bar-chart data.
    pub top: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { enabled: true, top: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Kl,
    W1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustConfig {
    pub enabled: bool,
    pub delta_rel: f64,
    pub leak_floor: f64,
    pub samples: usize,
    pub metrics: Vec<MetricName>,
}

impl Default for RobustConfig {
    fn default() -> Self {
        RobustConfig { enabled: false, delta_rel: 0.5, leak_floor: 0.05, samples: 100, metrics: vec![MetricName::Kl, MetricName::W1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub enabled: bool,
    /// One level per hub; hubs are the highest-degree nodes.
    pub levels: Vec<f64>,
    pub beta: f64,
    /// Depth of the valued Top-k reward.
    pub k: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig { enabled: false, levels: vec![10.0, 10.0, 10.0], beta: 0.6, k: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstrainedConfig {
    pub enabled: bool,
    /// Number of triangles in the pool.
    pub pool_size: usize,
    pub mode: PoolMode,
    pub k: usize,
}

impl Default for ConstrainedConfig {
    fn default() -> Self {
        ConstrainedConfig { enabled: false, pool_size: 8, mode: PoolMode::Fallback, k: 3 }
    }
}

/// A malformed or inconsistent configuration (exit code 2).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn unit(name: &str, x: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(ConfigError(format!("{name} = {x} must lie in [0, 1]")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a TOML config, or the `config` object of a previous run's
    /// `manifest.json`. Relative graph paths are resolved against the file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut config = if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            let inner = manifest.get("config").cloned().unwrap_or(manifest);
            let config: ExperimentConfig = serde_json::from_value(inner).map_err(|e| ConfigError(e.to_string()))?;
            config.validate()?;
            config
        } else {
            Self::from_toml(&text)?
        };
        if let GraphSource::File { path: graph, .. } = &mut config.graph {
            if graph.is_relative() {
                if let Some(dir) = path.parent() {
                    *graph = dir.join(&*graph);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(ConfigError("samples must be at least 1".into()));
        }
        match &self.graph {
            GraphSource::ErdosRenyi { n, p } => {
                unit("graph.p", *p)?;
                if *n < 2 {
                    return Err(ConfigError("graph.n must be at least 2".into()));
                }
            }
            GraphSource::WattsStrogatz { n, ring_degree, rewire_p } => {
                unit("graph.rewire_p", *rewire_p)?;
                if *n < 2 || *ring_degree >= *n {
                    return Err(ConfigError(format!("ring degree {ring_degree} does not fit {n} nodes")));
                }
            }
            GraphSource::Fixture { name } => {
                if !matches!(name.as_str(), "two_cliques" | "les_miserables") {
                    return Err(ConfigError(format!("unknown fixture {name:?}")));
                }
            }
            GraphSource::File { .. } => {}
        }
        let m = &self.model;
        unit("model.p_on", m.p_on)?;
        unit("model.alpha", m.alpha)?;
        unit("model.rho_mu", m.rho_mu)?;
        if !(m.rho_sigma >= 0.0 && m.rho_sigma.is_finite()) {
            return Err(ConfigError(format!("model.rho_sigma = {} must be nonnegative", m.rho_sigma)));
        }
        if m.k_min == 0 {
            return Err(ConfigError("model.k_min must be at least 1".into()));
        }
        if self.baseline.top == 0 {
            return Err(ConfigError("baseline.top must be at least 1".into()));
        }
        if self.robust.enabled {
            unit("robust.delta_rel", self.robust.delta_rel)?;
            unit("robust.leak_floor", self.robust.leak_floor)?;
            if self.robust.samples == 0 || self.robust.metrics.is_empty() {
                return Err(ConfigError("robust search needs samples and at least one metric".into()));
            }
        }
        if self.reward.enabled {
            if self.reward.levels.is_empty() || self.reward.levels.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(ConfigError("reward.levels must be nonnegative and nonempty".into()));
            }
            if !(self.reward.beta > 0.0 && self.reward.beta < 1.0) {
                return Err(ConfigError(format!("reward.beta = {} must lie in (0, 1)", self.reward.beta)));
            }
            if self.reward.k == 0 {
                return Err(ConfigError("reward.k must be at least 1".into()));
            }
        }
        if self.constrained.enabled && (self.constrained.pool_size == 0 || self.constrained.k == 0) {
            return Err(ConfigError("constrained.pool_size and constrained.k must be at least 1".into()));
        }
        if let Some(s) = &self.initial {
            afc_core::kernel::check_distribution(s).map_err(|e| ConfigError(format!("initial: {e}")))?;
        }
        Ok(())
    }

    /// Ranking depth the step draws must carry for the enabled analyses.
    pub fn step_depth(&self) -> usize {
        let mut depth = 1;
        if self.reward.enabled {
            depth = depth.max(self.reward.k);
        }
        if self.constrained.enabled {
            depth = depth.max(self.constrained.k);
        }
        depth
    }
}
