use serde::{Deserialize, Serialize};

use super::evaluation::{run_evaluation, EvaluationReport};
use super::export::RunMetrics;
use super::training::run_training;
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::omega::OmegaModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepSpec {
    /// Reconfiguration coefficient values; the instantiation coefficient is
    /// set to the same value. One training per point.
    Reconfiguration { values: Vec<f64> },
    /// Stage counts evaluated with a single agent trained at the base horizon.
    Horizon { stages: Vec<usize> },
}

impl SweepSpec {
    pub fn len(&self) -> usize {
        match self {
            Self::Reconfiguration { values } => values.len(),
            Self::Horizon { stages } => stages.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub learned_mean: f64,
    pub learned_low: f64,
    pub learned_high: f64,
    pub stao_mean: f64,
    pub dyno_mean: f64,
    pub learned_over_stao: f64,
    pub learned_over_dyno: f64,
    /// Mean reconfigurations per evaluation episode of the learned policy.
    pub reconfigurations: f64,
}

impl SweepRow {
    fn from_report(parameter: &str, value: f64, r: &EvaluationReport) -> Self {
        Self {
            parameter: parameter.to_string(),
            value,
            learned_mean: r.learned.cost.mean,
            learned_low: r.learned.cost.low,
            learned_high: r.learned.cost.high,
            stao_mean: r.stao.cost.mean,
            dyno_mean: r.dyno.cost.mean,
            learned_over_stao: r.learned_over_stao,
            learned_over_dyno: r.learned_over_dyno,
            reconfigurations: r.learned.reconfigurations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<EvaluationReport>,
    /// Training metrics, one run per trained point.
    pub runs: Vec<RunMetrics>,
}

pub fn run_sweep(cfg: &ExperimentConfig, spec: &SweepSpec, omega: &OmegaModel) -> Result<SweepResult> {
    run_sweep_with(cfg, spec, omega, |_, _| {})
}

/// `on_point(index, row)` fires after each point finishes.
pub fn run_sweep_with(
    cfg: &ExperimentConfig,
    spec: &SweepSpec,
    omega: &OmegaModel,
    mut on_point: impl FnMut(usize, &SweepRow),
) -> Result<SweepResult> {
    if spec.is_empty() {
        return Err(Error::EmptySweep);
    }
    cfg.validate()?;
    let mut result = SweepResult { rows: Vec::new(), reports: Vec::new(), runs: Vec::new() };
    match spec {
        SweepSpec::Reconfiguration { values } => {
            for (i, &v) in values.iter().enumerate() {
                let mut point = cfg.clone();
                point.costs.reconfiguration = v;
                point.costs.instantiation = v;
                point.validate()?;
                let run = run_training(&point, omega)?;
                let report = run_evaluation(&run.agent, omega, &point)?;
                let row = SweepRow::from_report("reconfiguration", v, &report);
                on_point(i, &row);
                result.rows.push(row);
                result.reports.push(report);
                result.runs.push(RunMetrics::new(format!("reconfiguration={v}"), &point, run.episodes));
            }
        }
        SweepSpec::Horizon { stages } => {
            let run = run_training(cfg, omega)?;
            for (i, &n) in stages.iter().enumerate() {
                let mut point = cfg.clone();
                point.traffic.stages = n;
                point.validate()?;
                let report = run_evaluation(&run.agent, omega, &point)?;
                let row = SweepRow::from_report("stages", n as f64, &report);
                on_point(i, &row);
                result.rows.push(row);
                result.reports.push(report);
            }
            result.runs.push(RunMetrics::new("horizon-base".into(), cfg, run.episodes));
        }
    }
    Ok(result)
}
