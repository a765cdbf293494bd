use rand::Rng;
use serde::{Deserialize, Serialize};

use super::training::{rollout, EpisodeMetrics};
use super::ExperimentConfig;
use crate::baselines::{run_baseline_episode, BaselinePolicy};
use crate::cost::CostBreakdown;
use crate::dqn::DqnAgent;
use crate::env::{generate_traffic, Environment, TrafficTrace};
use crate::error::{Error, Result};
use crate::omega::OmegaModel;
use crate::seed::{self, stream};

/// Sample mean with a percentile bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl Interval {
    /// True when this interval lies entirely below `other`.
    pub fn strictly_below(&self, other: &Interval) -> bool {
        self.high < other.low
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Percentile bootstrap of the mean.
pub fn bootstrap_mean<R: Rng + ?Sized>(
    values: &[f64],
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<Interval> {
    if values.is_empty() || resamples == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let pick = |q: f64| means[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok(Interval {
        mean: mean(values),
        low: pick(tail),
        high: pick(1.0 - tail),
    })
}

/// Held-out traces shared by every policy in an evaluation.
pub fn evaluation_traces(cfg: &ExperimentConfig) -> Result<Vec<TrafficTrace>> {
    (1..=cfg.evaluation.episodes)
        .map(|e| generate_traffic(&cfg.traffic, &mut seed::rng(cfg.seed, stream::EVAL_TRAFFIC, e as u64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub cost: Interval,
    /// Mean per-component episode costs.
    pub components: CostBreakdown,
    pub reconfigurations: f64,
    pub episode_totals: Vec<f64>,
}

fn summarize<R: Rng + ?Sized>(
    episodes: &[(CostBreakdown, usize)],
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> Result<PolicySummary> {
    let totals: Vec<f64> = episodes.iter().map(|(c, _)| c.total).collect();
    let k = episodes.len() as f64;
    let mut components = CostBreakdown::default();
    for (c, _) in episodes {
        components.accumulate(c);
    }
    let components = CostBreakdown::from_components(
        components.overprovisioning / k,
        components.declined / k,
        components.instantiation / k,
        components.reconfiguration / k,
        components.xhaul / k,
    );
    Ok(PolicySummary {
        cost: bootstrap_mean(&totals, cfg.evaluation.bootstrap_resamples, cfg.evaluation.confidence, rng)?,
        components,
        reconfigurations: episodes.iter().map(|(_, r)| *r as f64).sum::<f64>() / k,
        episode_totals: totals,
    })
}

/// Learned policy against both oracles on the same held-out traces; every
/// ratio is a ratio of mean episode costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub episodes: usize,
    pub stages: usize,
    pub epsilon: f64,
    pub learned: PolicySummary,
    pub stao: PolicySummary,
    pub dyno: PolicySummary,
    pub learned_over_stao: f64,
    pub learned_over_dyno: f64,
    pub dyno_over_stao: f64,
    pub learned_episodes: Vec<EpisodeMetrics>,
}

/// Runs the learned policy at `epsilon = epsilon_min` on held-out traces.
pub fn evaluate_learned(
    agent: &DqnAgent,
    omega: &OmegaModel,
    cfg: &ExperimentConfig,
    traces: &[TrafficTrace],
) -> Result<Vec<EpisodeMetrics>> {
    let params = cfg.env_params()?;
    let encoder = cfg.encoder();
    let epsilon = cfg.dqn.epsilon_min;
    traces
        .iter()
        .enumerate()
        .map(|(k, trace)| {
            let e = k as u64 + 1;
            let noise = cfg.evaluation.noise.then(|| seed::rng(cfg.seed, stream::NOISE, u64::MAX - e));
            let env = Environment::new(params.clone(), trace.clone(), noise)?;
            let mut rng = seed::rng(cfg.seed, stream::EVAL_AGENT, e);
            rollout(agent, omega, &encoder, env, epsilon, k + 1, &mut rng)
        })
        .collect()
}

pub fn evaluate_baseline(
    policy: BaselinePolicy,
    cfg: &ExperimentConfig,
    traces: &[TrafficTrace],
) -> Result<Vec<(CostBreakdown, usize)>> {
    let params = cfg.env_params()?;
    let grid = cfg.grid();
    traces
        .iter()
        .map(|t| run_baseline_episode(policy, &params, t, &grid).map(|ep| (ep.total, ep.reconfigurations)))
        .collect()
}

pub fn run_evaluation(agent: &DqnAgent, omega: &OmegaModel, cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    let traces = evaluation_traces(cfg)?;
    let learned = evaluate_learned(agent, omega, cfg, &traces)?;
    let stao = evaluate_baseline(BaselinePolicy::Stao, cfg, &traces)?;
    let dyno = evaluate_baseline(BaselinePolicy::Dyno, cfg, &traces)?;
    let mut rng = seed::rng(cfg.seed, stream::BOOTSTRAP, 0);
    let learned_pairs: Vec<(CostBreakdown, usize)> = learned.iter().map(|m| (m.cost, m.reconfigurations)).collect();
    let learned_summary = summarize(&learned_pairs, cfg, &mut rng)?;
    let stao = summarize(&stao, cfg, &mut rng)?;
    let dyno = summarize(&dyno, cfg, &mut rng)?;
    Ok(EvaluationReport {
        episodes: traces.len(),
        stages: cfg.traffic.stages,
        epsilon: cfg.dqn.epsilon_min,
        learned_over_stao: learned_summary.cost.mean / stao.cost.mean,
        learned_over_dyno: learned_summary.cost.mean / dyno.cost.mean,
        dyno_over_stao: dyno.cost.mean / stao.cost.mean,
        learned: learned_summary,
        stao,
        dyno,
        learned_episodes: learned,
    })
}
