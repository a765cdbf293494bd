use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::cost::CostBreakdown;
use crate::dqn::{DqnAgent, ReplayBuffer, StateEncoder, Transition};
use crate::env::{generate_traffic, Action, EnvParams, Environment, NetworkState, Step, TrafficTrace};
use crate::error::Result;
use crate::omega::{evaluate_omega, generate_dataset, train_omega, OmegaModel, OmegaReport, OmegaSample, TrainSettings};
use crate::seed::{self, stream};
use crate::types::{ConfigChoice, Deployment};

/// Per-episode record of a training or evaluation rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// 1-based episode number.
    pub episode: usize,
    pub cost: CostBreakdown,
    pub epsilon: f64,
    /// Stages whose configuration choice was not "keep".
    pub reconfigurations: usize,
    /// Stages spent on S1..S4.
    pub split_occupancy: [usize; 4],
}

impl EpisodeMetrics {
    pub fn stages(&self) -> usize {
        self.split_occupancy.iter().sum()
    }
}

pub struct TrainingRun {
    pub agent: DqnAgent,
    pub episodes: Vec<EpisodeMetrics>,
}

/// The action the learned orchestrator takes for configuration `o`.
pub fn orchestrate(omega: &OmegaModel, demand: f64, choice: ConfigChoice, prev: Deployment) -> Action {
    match choice {
        ConfigChoice::Keep => Action::keep(prev),
        ConfigChoice::Deploy(split) => {
            let (x, xh) = omega.predict(demand, choice, &prev);
            Action::deploy(split, x, xh)
        }
    }
}

/// Runs one episode with a fixed (non-learning) agent.
pub(crate) fn rollout<R: rand::Rng + ?Sized>(
    agent: &DqnAgent,
    omega: &OmegaModel,
    encoder: &StateEncoder,
    mut env: Environment,
    epsilon: f64,
    episode: usize,
    rng: &mut R,
) -> Result<EpisodeMetrics> {
    let mut tally = Tally::new(episode, epsilon);
    while !env.is_done() {
        let state = *env.state();
        let o = agent.select(&encoder.encode(&state), epsilon, rng)?;
        let (choice, step) = execute(&mut env, omega, &state, o)?;
        tally.add(choice, &env, &step.cost);
    }
    Ok(tally.finish())
}

fn execute(env: &mut Environment, omega: &OmegaModel, state: &NetworkState, o: usize) -> Result<(ConfigChoice, Step)> {
    let choice = ConfigChoice::from_index(o)?;
    let action = orchestrate(omega, state.demand, choice, env.deployment());
    Ok((choice, env.step(&action)?))
}

struct Tally {
    metrics: EpisodeMetrics,
}

impl Tally {
    fn new(episode: usize, epsilon: f64) -> Self {
        Self {
            metrics: EpisodeMetrics {
                episode,
                cost: CostBreakdown::default(),
                epsilon,
                reconfigurations: 0,
                split_occupancy: [0; 4],
            },
        }
    }

    fn add(&mut self, choice: ConfigChoice, env: &Environment, cost: &CostBreakdown) {
        self.metrics.cost.accumulate(cost);
        if choice.is_reconfiguration() {
            self.metrics.reconfigurations += 1;
        }
        self.metrics.split_occupancy[env.deployment().split.slot()] += 1;
    }

    fn finish(self) -> EpisodeMetrics {
        self.metrics
    }
}

pub fn training_trace(cfg: &ExperimentConfig, episode: usize) -> Result<TrafficTrace> {
    generate_traffic(&cfg.traffic, &mut seed::rng(cfg.seed, stream::TRAFFIC, episode as u64))
}

pub fn new_agent(cfg: &ExperimentConfig) -> Result<DqnAgent> {
    DqnAgent::new(
        NetworkState::DIM,
        ConfigChoice::COUNT,
        &cfg.dqn,
        &mut seed::rng(cfg.seed, stream::INIT, 0),
    )
}

/// The full learning loop: epsilon-greedy configuration choice, resource
/// allocation by the frozen regressor, replay storage, one minibatch update
/// per stage once the buffer holds a batch, and periodic target sync.
pub fn run_training(cfg: &ExperimentConfig, omega: &OmegaModel) -> Result<TrainingRun> {
    run_training_with(cfg, omega, |_| {})
}

pub fn run_training_with(
    cfg: &ExperimentConfig,
    omega: &OmegaModel,
    mut on_episode: impl FnMut(&EpisodeMetrics),
) -> Result<TrainingRun> {
    cfg.validate()?;
    let params: EnvParams = cfg.env_params()?;
    let encoder = cfg.encoder();
    let schedule = cfg.dqn.schedule(cfg.episodes)?;
    let mut agent = new_agent(cfg)?;
    let mut buffer = ReplayBuffer::new(cfg.dqn.buffer_capacity, NetworkState::DIM)?;
    let mut rng = seed::rng(cfg.seed, stream::AGENT, 0);
    let mut episodes = Vec::with_capacity(cfg.episodes);

    for e in 1..=cfg.episodes {
        let epsilon = schedule.epsilon_at(e);
        let noise = cfg
            .training_noise
            .then(|| seed::rng(cfg.seed, stream::NOISE, e as u64));
        let mut env = Environment::new(params.clone(), training_trace(cfg, e)?, noise)?;
        let mut tally = Tally::new(e, epsilon);
        while !env.is_done() {
            let state = *env.state();
            let features = encoder.encode(&state);
            let o = agent.select(&features, epsilon, &mut rng)?;
            let (choice, step) = execute(&mut env, omega, &state, o)?;
            tally.add(choice, &env, &step.cost);
            buffer.push(Transition {
                state: features,
                action: o,
                reward: step.cost.reward * cfg.dqn.reward_scale,
                next_state: encoder.encode(&step.next_state),
                terminal: step.done,
            })?;
            if buffer.len() >= cfg.dqn.batch_size {
                agent.train_step(&buffer, cfg.dqn.batch_size, &mut rng)?;
            }
            agent.record_stage();
        }
        agent.record_episode();
        let m = tally.finish();
        on_episode(&m);
        episodes.push(m);
    }
    Ok(TrainingRun { agent, episodes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub samples: usize,
    pub loss_history: Vec<f64>,
    pub holdout: OmegaReport,
}

/// Held-out grid resolution used by pretraining reports.
pub const HOLDOUT_POINTS: usize = 351;

/// Trains the resource regressor on samples drawn from the configured
/// utilization model.
pub fn pretrain_omega(cfg: &ExperimentConfig) -> Result<(OmegaModel, PretrainReport)> {
    let env_model = cfg.utilization_model()?;
    let data = generate_dataset(
        &env_model,
        cfg.omega.dataset_size,
        cfg.omega.demand_scale,
        cfg.omega.dataset_noise,
        &mut seed::rng(cfg.seed, stream::OMEGA, 0),
    );
    pretrain_omega_on(cfg, &data)
}

/// Trains the resource regressor on a given dataset (e.g. ingested CSV).
pub fn pretrain_omega_on(cfg: &ExperimentConfig, data: &[OmegaSample]) -> Result<(OmegaModel, PretrainReport)> {
    cfg.omega.validate()?;
    let env_model = cfg.utilization_model()?;
    let mut model = OmegaModel::new(&cfg.omega, &env_model, &mut seed::rng(cfg.seed, stream::OMEGA, 1))?;
    let loss_history = train_omega(
        &mut model,
        data,
        &TrainSettings::from(&cfg.omega),
        &mut seed::rng(cfg.seed, stream::OMEGA, 2),
    )?;
    let holdout = evaluate_omega(&model, &env_model, cfg.omega.demand_scale, HOLDOUT_POINTS);
    Ok((model, PretrainReport { samples: data.len(), loss_history, holdout }))
}
