use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::DiscretizationGrid;
use crate::cost::CostCoefficients;
use crate::dqn::{DqnConfig, StateEncoder};
use crate::env::{EnvParams, TrafficConfig, UtilizationConfig, UtilizationModel};
use crate::error::{Error, Result};
use crate::omega::OmegaConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Held-out episodes per evaluation.
    pub episodes: usize,
    pub bootstrap_resamples: usize,
    /// Two-sided confidence level of the bootstrap intervals.
    pub confidence: f64,
    /// Apply utilization noise when running the learned policy.
    pub noise: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            episodes: 20,
            bootstrap_resamples: 2000,
            confidence: 0.95,
            noise: false,
        }
    }
}

/// Every knob of an experiment. Missing TOML keys fall back to the defaults,
/// which equal [`ExperimentConfig::full`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base seed; every random stream is derived from it.
    pub seed: u64,
    /// Training episodes.
    pub episodes: usize,
    pub traffic: TrafficConfig,
    pub costs: CostCoefficients,
    pub utilization: UtilizationConfig,
    /// xHaul link capacity, Mbps.
    pub xhaul_capacity: f64,
    /// Apply utilization noise during training episodes.
    pub training_noise: bool,
    pub dqn: DqnConfig,
    pub omega: OmegaConfig,
    /// Resource step of the baseline search grid, RC.
    pub grid_step: f64,
    pub evaluation: EvaluationConfig,
    /// Episode window for smoothed cost reporting.
    pub smoothing_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            episodes: 5000,
            traffic: TrafficConfig::default(),
            costs: CostCoefficients::default(),
            utilization: UtilizationConfig::default(),
            xhaul_capacity: 3000.0,
            training_noise: true,
            dqn: DqnConfig::default(),
            omega: OmegaConfig::default(),
            grid_step: 0.5,
            evaluation: EvaluationConfig::default(),
            smoothing_window: 50,
        }
    }
}

impl ExperimentConfig {
    /// Full-scale settings: 5000 episodes of 120 stages, 512-wide Q-network.
    pub fn full() -> Self {
        Self::default()
    }

    /// Reduced scale for a single machine: 500 episodes of 60 stages,
    /// 128-wide Q-network.
    pub fn desk() -> Self {
        let mut c = Self::default();
        c.episodes = 500;
        c.traffic.stages = 60;
        c.dqn.hidden = vec![128, 128, 128];
        c
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "full" => Ok(Self::full()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::InvalidConfig(format!("unknown preset {other:?} (full, desk)"))),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Loads `path` on top of a preset: keys present in the file win.
    pub fn load_over(base: &Self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let patch: toml::Table = toml::from_str(&text)?;
        let mut merged = base.to_table()?;
        merge(&mut merged, patch);
        let cfg: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    fn to_table(&self) -> Result<toml::Table> {
        match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => Ok(t),
            Ok(_) => Err(Error::InvalidConfig("config did not serialize to a table".into())),
            Err(e) => Err(Error::InvalidConfig(e.to_string())),
        }
    }

    /// Applies `dotted.key=value`; the value is read as a TOML literal and
    /// falls back to a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("override {assignment:?} is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        let mut table = self.to_table()?;
        let parts: Vec<&str> = key.split('.').collect();
        let mut cursor = &mut table;
        for part in &parts[..parts.len() - 1] {
            cursor = match cursor.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default())) {
                toml::Value::Table(t) => t,
                _ => return Err(Error::InvalidConfig(format!("{key}: {part} is not a table"))),
            };
        }
        cursor.insert(parts[parts.len() - 1].to_string(), value);
        let updated: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(format!("override {key}: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.traffic.stages == 0 || self.smoothing_window == 0 {
            return Err(Error::InvalidConfig("episodes, stages and smoothing window must be positive".into()));
        }
        if self.evaluation.episodes == 0 || self.evaluation.bootstrap_resamples == 0 {
            return Err(Error::InvalidConfig("evaluation episodes and resamples must be positive".into()));
        }
        if !(self.evaluation.confidence > 0.0 && self.evaluation.confidence < 1.0) {
            return Err(Error::InvalidConfig("confidence must be in (0, 1)".into()));
        }
        if !(self.xhaul_capacity > 0.0) {
            return Err(Error::InvalidConfig("xhaul capacity must be positive".into()));
        }
        self.traffic.profile.validate()?;
        self.costs.validate()?;
        self.dqn.validate()?;
        self.omega.validate()?;
        DiscretizationGrid::new(self.grid_step)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn utilization_model(&self) -> Result<UtilizationModel> {
        UtilizationModel::from_config(&self.utilization)
    }

    pub fn env_params(&self) -> Result<EnvParams> {
        Ok(EnvParams::new(self.costs, self.utilization_model()?, self.xhaul_capacity))
    }

    pub fn grid(&self) -> DiscretizationGrid {
        DiscretizationGrid { step: self.grid_step }
    }

    pub fn encoder(&self) -> StateEncoder {
        StateEncoder {
            demand_scale: self.omega.demand_scale,
            vdu_cap: self.utilization.vdu_cap,
            vcu_cap: self.utilization.vcu_cap,
        }
    }
}

fn merge(base: &mut toml::Table, patch: toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
