//! Oracles shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use rand::Rng;
use vran_core::baselines::DiscretizationGrid;
use vran_core::cost::CostCoefficients;
use vran_core::dqn::{DqnAgent, Transition};
use vran_core::env::{EnvParams, TrafficTrace};
use vran_core::nn::Mlp;
use vran_core::Split;

/// Hand-written per-stage costs, kept separate from the library code.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HandCost {
    pub over: f64,
    pub declined: f64,
    pub inst: f64,
    pub reconf: f64,
    pub xhaul: f64,
}

impl HandCost {
    pub fn total(&self) -> f64 {
        self.over + self.declined + self.inst + self.reconf + self.xhaul
    }

    pub fn add(&mut self, o: &HandCost) {
        self.over += o.over;
        self.declined += o.declined;
        self.inst += o.inst;
        self.reconf += o.reconf;
        self.xhaul += o.xhaul;
    }
}

pub fn hand_load(split: usize, demand: f64) -> f64 {
    match split {
        1 | 2 => demand,
        3 => 1.02 * demand + 1.5,
        4 => 2500.0,
        _ => panic!("split {split}"),
    }
}

/// Cost of one stage from first principles. `reconfigure` is `o != 0`.
#[allow(clippy::too_many_arguments)]
pub fn hand_stage_cost(
    k: &CostCoefficients,
    reconfigure: bool,
    split: usize,
    alloc: (f64, f64),
    used: (f64, f64),
    prev: (f64, f64),
    demand: f64,
    caps: (f64, f64, f64),
) -> HandCost {
    let (x, xh) = alloc;
    let (y, yh) = used;
    let load = hand_load(split, demand);
    let violated = x > caps.0 || xh > caps.1 || load > caps.2;
    let mut c = HandCost {
        over: k.overprovisioning * ((x - y).max(0.0) + (xh - yh).max(0.0)),
        declined: if x < y || xh < yh || violated { k.declined } else { 0.0 },
        xhaul: k.xhaul * load,
        ..Default::default()
    };
    if reconfigure {
        let beta = (x - prev.0).abs();
        let beta_hat = (xh - prev.1).abs();
        let mut grown = 0.0;
        if x > prev.0 {
            grown += beta;
        }
        if xh > prev.1 {
            grown += beta_hat;
        }
        c.inst = k.instantiation * grown;
        c.reconf = k.reconfiguration * (beta + beta_hat);
    }
    c
}

fn caps(p: &EnvParams) -> (f64, f64, f64) {
    (p.model.vdu_cap, p.model.vcu_cap, p.xhaul_capacity)
}

fn grid_points(step: f64, cap: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..).map(|k| k as f64 * step).take_while(|&x| x < cap - 1e-9).collect();
    v.push(cap);
    v
}

/// Independent static-oracle enumeration: (split, vDU, vCU, episode cost).
pub fn enumerate_stao(p: &EnvParams, trace: &TrafficTrace, step: f64) -> Option<(usize, f64, f64, HandCost)> {
    let demands = trace.stage_means();
    let mut best: Option<(usize, f64, f64, HandCost)> = None;
    for i in 1..=4 {
        let split = Split::from_index(i).unwrap();
        for &x in &grid_points(step, p.model.vdu_cap) {
            'alloc: for &xh in &grid_points(step, p.model.vcu_cap) {
                let mut sum = HandCost::default();
                for &d in &demands {
                    let used = p.model.utilization(split, d);
                    let c = hand_stage_cost(&p.coefficients, false, i, (x, xh), used, (x, xh), d, caps(p));
                    if c.declined > 0.0 {
                        continue 'alloc;
                    }
                    sum.add(&c);
                }
                if best.as_ref().map_or(true, |b| sum.total() < b.3.total()) {
                    best = Some((i, x, xh, sum));
                }
            }
        }
    }
    best
}

/// Independent per-stage dynamic-oracle enumeration.
pub fn enumerate_dyno_stage(p: &EnvParams, demand: f64, prev: (f64, f64), step: f64) -> (usize, f64, f64, HandCost) {
    let mut best: Option<(usize, f64, f64, HandCost)> = None;
    for i in 1..=4 {
        let used = p.model.utilization(Split::from_index(i).unwrap(), demand);
        for &x in &grid_points(step, p.model.vdu_cap) {
            for &xh in &grid_points(step, p.model.vcu_cap) {
                let c = hand_stage_cost(&p.coefficients, true, i, (x, xh), used, prev, demand, caps(p));
                if best.as_ref().map_or(true, |b| c.total() < b.3.total()) {
                    best = Some((i, x, xh, c));
                }
            }
        }
    }
    best.unwrap()
}

pub fn coarse_grid() -> DiscretizationGrid {
    DiscretizationGrid::new(5.0).unwrap()
}

/// Two-state, two-action deterministic MDP. Action 0 stays, action 1
/// switches. Staying in A earns 1, staying in B earns 2, switching earns 0.
pub struct ToyMdp {
    pub gamma: f64,
}

impl ToyMdp {
    pub fn step(&self, s: usize, a: usize) -> (usize, f64) {
        match (s, a) {
            (0, 0) => (0, 1.0),
            (0, 1) => (1, 0.0),
            (1, 0) => (1, 2.0),
            (1, 1) => (0, 0.0),
            _ => panic!("bad toy transition"),
        }
    }

    pub fn encode(s: usize) -> Vec<f64> {
        if s == 0 {
            vec![1.0, 0.0]
        } else {
            vec![0.0, 1.0]
        }
    }

    /// Optimal Q-values by value iteration.
    pub fn value_iteration(&self) -> [[f64; 2]; 2] {
        let mut q = [[0.0f64; 2]; 2];
        for _ in 0..10_000 {
            let mut next = [[0.0; 2]; 2];
            for s in 0..2 {
                for a in 0..2 {
                    let (s2, r) = self.step(s, a);
                    next[s][a] = r + self.gamma * q[s2][0].max(q[s2][1]);
                }
            }
            q = next;
        }
        q
    }

    pub fn transition<R: Rng + ?Sized>(&self, rng: &mut R) -> Transition {
        let s = rng.random_range(0..2);
        let a = rng.random_range(0..2);
        let (s2, r) = self.step(s, a);
        Transition { state: Self::encode(s), action: a, reward: r, next_state: Self::encode(s2), terminal: false }
    }
}

/// Central finite-difference gradient of `f` at `params`, over `coords`.
pub fn finite_difference(
    params: &[f64],
    coords: &[usize],
    h: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    let mut p = params.to_vec();
    coords
        .iter()
        .map(|&i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|)` over the whole vector.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

pub fn with_params(net: &Mlp, params: &[f64]) -> Mlp {
    let mut n = net.clone();
    n.set_params_flat(params).unwrap();
    n
}

/// Trains a small agent on the toy MDP and returns it.
pub fn train_toy_agent(seed: u64) -> DqnAgent {
    use rand::SeedableRng;
    use vran_core::dqn::{DqnConfig, ReplayBuffer};
    let mdp = ToyMdp { gamma: 0.9 };
    let cfg = DqnConfig {
        hidden: vec![32, 32],
        learning_rate: 1e-3,
        batch_size: 32,
        buffer_capacity: 10_000,
        gamma: mdp.gamma,
        sync_period: 50,
        ..Default::default()
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut agent = DqnAgent::new(2, 2, &cfg, &mut rng).unwrap();
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, 2).unwrap();
    for _ in 0..2_000 {
        buffer.push(mdp.transition(&mut rng)).unwrap();
    }
    for _ in 0..6_000 {
        agent.train_step(&buffer, cfg.batch_size, &mut rng).unwrap();
        agent.record_stage();
    }
    agent
}
