use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DqnConfig, ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::nn::{self, Adam, AdamSnapshot, Gradients, Mlp, MlpSnapshot};

const CHECKPOINT_FORMAT: &str = "vran-dqn";

/// Mean squared TD error over the chosen actions' Q-outputs.
pub fn q_loss(net: &Mlp, states: ArrayView2<'_, f64>, actions: &[usize], targets: &[f64]) -> Result<f64> {
    let out = net.forward_batch(states)?.into_output();
    check_batch(&out, actions, targets)?;
    let b = actions.len() as f64;
    Ok(actions
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(r, (&a, &u))| (u - out[[r, a]]).powi(2))
        .sum::<f64>()
        / b)
}

/// Loss and its gradient with respect to `net`; only the chosen action's
/// output carries gradient.
pub fn q_loss_and_gradient(
    net: &Mlp,
    states: ArrayView2<'_, f64>,
    actions: &[usize],
    targets: &[f64],
) -> Result<(f64, Gradients)> {
    let cache = net.forward_batch(states)?;
    let out = cache.output();
    check_batch(out, actions, targets)?;
    let b = actions.len() as f64;
    let mut upstream = Array2::zeros(out.raw_dim());
    let mut loss = 0.0;
    for (r, (&a, &u)) in actions.iter().zip(targets).enumerate() {
        let diff = out[[r, a]] - u;
        loss += diff * diff;
        upstream[[r, a]] = 2.0 * diff / b;
    }
    let grads = net.backward(&cache, upstream.view())?;
    Ok((loss / b, grads))
}

fn check_batch(out: &Array2<f64>, actions: &[usize], targets: &[f64]) -> Result<()> {
    if actions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if out.nrows() != actions.len() || targets.len() != actions.len() {
        return Err(Error::DimensionMismatch { expected: out.nrows(), got: actions.len().max(targets.len()) });
    }
    if let Some(&a) = actions.iter().find(|&&a| a >= out.ncols()) {
        return Err(Error::InvalidAction(format!("action {a} out of {}", out.ncols())));
    }
    Ok(())
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Online and target Q-networks with their optimizer and bookkeeping.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    q_net: Mlp,
    target_net: Mlp,
    optimizer: Adam,
    gamma: f64,
    sync_period: usize,
    stages_seen: u64,
    episodes_completed: u64,
}

#[derive(Serialize, Deserialize)]
struct AgentSnapshot {
    q_net: MlpSnapshot,
    target_net: MlpSnapshot,
    optimizer: AdamSnapshot,
    gamma: f64,
    sync_period: usize,
    stages_seen: u64,
    episodes_completed: u64,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, actions: usize, cfg: &DqnConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut dims = vec![input_dim];
        dims.extend(&cfg.hidden);
        dims.push(actions);
        let q_net = Mlp::new(&dims, rng)?;
        Self::from_network(q_net, cfg.gamma, cfg.sync_period, cfg.learning_rate)
    }

    /// Wraps `q_net`; the target network starts as a copy.
    pub fn from_network(q_net: Mlp, gamma: f64, sync_period: usize, learning_rate: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) || sync_period == 0 || !(learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma {gamma}, sync period {sync_period}, learning rate {learning_rate}"
            )));
        }
        Ok(Self {
            target_net: q_net.clone(),
            optimizer: Adam::new(&q_net, learning_rate),
            q_net,
            gamma,
            sync_period,
            stages_seen: 0,
            episodes_completed: 0,
        })
    }

    pub fn q_net(&self) -> &Mlp {
        &self.q_net
    }

    pub fn q_net_mut(&mut self) -> &mut Mlp {
        &mut self.q_net
    }

    pub fn target_net(&self) -> &Mlp {
        &self.target_net
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Zero is allowed here (myopic targets) even though training configs
    /// require a positive discount.
    pub fn set_gamma(&mut self, gamma: f64) {
        self.gamma = gamma;
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.optimizer.learning_rate = lr;
    }

    pub fn sync_period(&self) -> usize {
        self.sync_period
    }

    pub fn stages_seen(&self) -> u64 {
        self.stages_seen
    }

    pub fn episodes_completed(&self) -> u64 {
        self.episodes_completed
    }

    pub fn input_dim(&self) -> usize {
        self.q_net.input_dim()
    }

    pub fn action_count(&self) -> usize {
        self.q_net.output_dim()
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.q_net.forward(state)
    }

    /// Highest-valued action; ties go to the lowest index.
    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(state)?))
    }

    /// Epsilon-greedy choice.
    pub fn select<R: Rng + ?Sized>(&self, state: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
        if rng.random::<f64>() < epsilon {
            Ok(rng.random_range(0..self.action_count()))
        } else {
            self.greedy(state)
        }
    }

    /// `r + gamma * max_a' Q_target(s', a')`, or `r` for a terminal transition.
    pub fn td_target(&self, t: &Transition) -> Result<f64> {
        if t.terminal {
            return Ok(t.reward);
        }
        let next = self.target_net.forward(&t.next_state)?;
        Ok(t.reward + self.gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn td_targets(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        let next = self.stack(batch.iter().map(|t| &t.next_state))?;
        let q = self.target_net.forward_batch(next.view())?.into_output();
        Ok(batch
            .iter()
            .zip(q.rows())
            .map(|(t, row)| {
                if t.terminal {
                    t.reward
                } else {
                    t.reward + self.gamma * row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                }
            })
            .collect())
    }

    fn stack<'a>(&self, rows: impl ExactSizeIterator<Item = &'a Vec<f64>>) -> Result<Array2<f64>> {
        let d = self.input_dim();
        let mut out = Array2::zeros((rows.len(), d));
        for (r, s) in rows.enumerate() {
            if s.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.len() });
            }
            out.row_mut(r).assign(&ndarray::ArrayView1::from(s.as_slice()));
        }
        Ok(out)
    }

    /// One Adam step on the squared TD error of `batch`; returns the loss
    /// measured before the update.
    pub fn train_on(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let targets = self.td_targets(batch)?;
        let states = self.stack(batch.iter().map(|t| &t.state))?;
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let (loss, grads) = q_loss_and_gradient(&self.q_net, states.view(), &actions, &targets)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("q loss"));
        }
        self.optimizer.step(&mut self.q_net, &grads)?;
        Ok(loss)
    }

    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let batch = buffer.sample(batch_size, rng)?;
        self.train_on(&batch)
    }

    /// Hard copy of the online parameters into the target network.
    pub fn sync_target(&mut self) {
        self.target_net
            .copy_from(&self.q_net)
            .expect("target and online networks share a shape");
    }

    /// Counts one environment stage; syncs the target every `sync_period`
    /// stages and reports whether it did.
    pub fn record_stage(&mut self) -> bool {
        self.stages_seen += 1;
        if self.stages_seen.is_multiple_of(self.sync_period as u64) {
            self.sync_target();
            true
        } else {
            false
        }
    }

    pub fn record_episode(&mut self) {
        self.episodes_completed += 1;
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        nn::save_json(
            path,
            CHECKPOINT_FORMAT,
            &AgentSnapshot {
                q_net: (&self.q_net).into(),
                target_net: (&self.target_net).into(),
                optimizer: (&self.optimizer).into(),
                gamma: self.gamma,
                sync_period: self.sync_period,
                stages_seen: self.stages_seen,
                episodes_completed: self.episodes_completed,
            },
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s: AgentSnapshot = nn::load_json(path, CHECKPOINT_FORMAT)?;
        let q_net = s.q_net.restore()?;
        let target_net = s.target_net.restore()?;
        if q_net.dims() != target_net.dims() {
            return Err(Error::Checkpoint("online and target shapes differ".into()));
        }
        Ok(Self {
            optimizer: s.optimizer.restore(&q_net)?,
            q_net,
            target_net,
            gamma: s.gamma,
            sync_period: s.sync_period,
            stages_seen: s.stages_seen,
            episodes_completed: s.episodes_completed,
        })
    }
}
