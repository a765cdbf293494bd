//! Resource orchestration: maps (configuration, demand) to vDU/vCU allocations.
//!
//! A single regressor predicts the split-independent base compute from the
//! stage demand; the selected split's placement factors then divide it
//! between vDU and vCU. It is trained with an asymmetric loss that charges
//! overprovisioning linearly and underprovisioning with a flat penalty, so
//! the fitted curve sits slightly above the truth.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::UtilizationModel;
use crate::error::{Error, Result};
use crate::nn::{self, Adam, Mlp, MlpSnapshot};
use crate::types::{ConfigChoice, Deployment, Split};

const CHECKPOINT_FORMAT: &str = "vran-omega";

/// Asymmetric prediction loss on `e = predicted - actual` (RC):
///
/// `loss(e) = s * e + (1 - s) * penalty`, with `s = sigmoid(e / width)`.
///
/// Far above the truth it grows like `e`; far below it saturates at
/// `penalty`; at `e = 0` it equals `penalty / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaLoss {
    /// Flat underprovisioning penalty, in the same unit as one RC of excess.
    pub penalty: f64,
    /// Width of the sigmoid blend around zero error, RC.
    pub width: f64,
}

impl Default for AlphaLoss {
    fn default() -> Self {
        Self {
            penalty: 2.0,
            width: 0.25,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let ez = z.exp();
        ez / (1.0 + ez)
    }
}

impl AlphaLoss {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0 && self.width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "loss penalty and width must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn value(&self, predicted: f64, actual: f64) -> f64 {
        let e = predicted - actual;
        let s = sigmoid(e / self.width);
        s * e + (1.0 - s) * self.penalty
    }

    /// d loss / d predicted.
    pub fn derivative(&self, predicted: f64, actual: f64) -> f64 {
        let e = predicted - actual;
        let s = sigmoid(e / self.width);
        s + (e - self.penalty) * s * (1.0 - s) / self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: AlphaLoss,
    /// Relative headroom added on top of the regressor output.
    pub safety_margin: f64,
    /// Demand normalization constant (peak demand), Mbps.
    pub demand_scale: f64,
    /// Output normalization constant, RC.
    pub output_scale: f64,
    /// Pretraining samples drawn uniformly over `[0, demand_scale]`.
    pub dataset_size: usize,
    /// Draw pretraining samples with measurement noise.
    pub dataset_noise: bool,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 64, 16],
            learning_rate: 5e-5,
            batch_size: 128,
            epochs: 200,
            loss: AlphaLoss::default(),
            safety_margin: 0.0,
            demand_scale: 35.0,
            output_scale: 25.0,
            dataset_size: 10_000,
            dataset_noise: true,
        }
    }
}

impl OmegaConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if self.hidden.iter().any(|&h| h == 0)
            || self.batch_size == 0
            || self.epochs == 0
            || self.dataset_size == 0
        {
            return Err(Error::InvalidConfig("omega sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0
            && self.safety_margin >= 0.0
            && self.demand_scale > 0.0
            && self.output_scale > 0.0)
        {
            return Err(Error::InvalidConfig(format!("bad omega hyperparameters: {self:?}")));
        }
        Ok(())
    }
}

/// One training observation: the split that was deployed, the demand, and
/// the measured vDU/vCU utilization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaSample {
    pub demand: f64,
    pub split: Split,
    pub vdu: f64,
    pub vcu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaModel {
    regressor: Mlp,
    rho_vdu: [f64; 4],
    rho_vcu: [f64; 4],
    vdu_cap: f64,
    vcu_cap: f64,
    pub safety_margin: f64,
    demand_scale: f64,
    output_scale: f64,
    trained_epochs: usize,
}

#[derive(Serialize, Deserialize)]
struct OmegaSnapshot {
    regressor: MlpSnapshot,
    rho_vdu: [f64; 4],
    rho_vcu: [f64; 4],
    vdu_cap: f64,
    vcu_cap: f64,
    safety_margin: f64,
    demand_scale: f64,
    output_scale: f64,
    trained_epochs: usize,
}

impl OmegaModel {
    pub fn new<R: Rng + ?Sized>(cfg: &OmegaConfig, env: &UtilizationModel, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut dims = vec![1];
        dims.extend(&cfg.hidden);
        dims.push(1);
        Ok(Self {
            regressor: Mlp::new(&dims, rng)?,
            rho_vdu: env.rho_vdu,
            rho_vcu: env.rho_vcu,
            vdu_cap: env.vdu_cap,
            vcu_cap: env.vcu_cap,
            safety_margin: cfg.safety_margin,
            demand_scale: cfg.demand_scale,
            output_scale: cfg.output_scale,
            trained_epochs: 0,
        })
    }

    /// Wraps an existing regressor (1 input, 1 output).
    pub fn from_regressor(regressor: Mlp, cfg: &OmegaConfig, env: &UtilizationModel) -> Result<Self> {
        if regressor.input_dim() != 1 || regressor.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: regressor.input_dim().max(regressor.output_dim()),
            });
        }
        Ok(Self {
            regressor,
            rho_vdu: env.rho_vdu,
            rho_vcu: env.rho_vcu,
            vdu_cap: env.vdu_cap,
            vcu_cap: env.vcu_cap,
            safety_margin: cfg.safety_margin,
            demand_scale: cfg.demand_scale,
            output_scale: cfg.output_scale,
            trained_epochs: 0,
        })
    }

    pub fn regressor(&self) -> &Mlp {
        &self.regressor
    }

    pub fn trained_epochs(&self) -> usize {
        self.trained_epochs
    }

    /// Raw regressor output in RC (may be negative).
    pub fn regress(&self, demand: f64) -> f64 {
        let out = self
            .regressor
            .forward(&[demand / self.demand_scale])
            .expect("regressor has one input");
        out[0] * self.output_scale
    }

    /// Base compute before splitting: clamped at zero, margin applied.
    pub fn base(&self, demand: f64) -> f64 {
        self.regress(demand).max(0.0) * (1.0 + self.safety_margin)
    }

    /// Allocation for configuration `choice` at `demand`. `Keep` returns the
    /// previous allocation without touching the regressor.
    pub fn predict(&self, demand: f64, choice: ConfigChoice, prev: &Deployment) -> (f64, f64) {
        match choice {
            ConfigChoice::Keep => (prev.vdu, prev.vcu),
            ConfigChoice::Deploy(split) => {
                let base = self.base(demand);
                let i = split.slot();
                (
                    (self.rho_vdu[i] * base).clamp(0.0, self.vdu_cap),
                    (self.rho_vcu[i] * base).clamp(0.0, self.vcu_cap),
                )
            }
        }
    }

    fn target(&self, s: &OmegaSample) -> f64 {
        let i = s.split.slot();
        (s.vdu + s.vcu) / (self.rho_vdu[i] + self.rho_vcu[i])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        nn::save_json(
            path,
            CHECKPOINT_FORMAT,
            &OmegaSnapshot {
                regressor: (&self.regressor).into(),
                rho_vdu: self.rho_vdu,
                rho_vcu: self.rho_vcu,
                vdu_cap: self.vdu_cap,
                vcu_cap: self.vcu_cap,
                safety_margin: self.safety_margin,
                demand_scale: self.demand_scale,
                output_scale: self.output_scale,
                trained_epochs: self.trained_epochs,
            },
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s: OmegaSnapshot = nn::load_json(path, CHECKPOINT_FORMAT)?;
        Ok(Self {
            regressor: s.regressor.restore()?,
            rho_vdu: s.rho_vdu,
            rho_vcu: s.rho_vcu,
            vdu_cap: s.vdu_cap,
            vcu_cap: s.vcu_cap,
            safety_margin: s.safety_margin,
            demand_scale: s.demand_scale,
            output_scale: s.output_scale,
            trained_epochs: s.trained_epochs,
        })
    }
}

/// Samples `n` observations with demand uniform in `[0, max_demand]` and a
/// uniformly chosen split.
pub fn generate_dataset<R: Rng + ?Sized>(
    env: &UtilizationModel,
    n: usize,
    max_demand: f64,
    noisy: bool,
    rng: &mut R,
) -> Vec<OmegaSample> {
    (0..n)
        .map(|_| {
            let demand = rng.random_range(0.0..=max_demand);
            let split = Split::ALL[rng.random_range(0..4)];
            let (vdu, vcu) = if noisy {
                env.observe(split, demand, rng)
            } else {
                env.utilization(split, demand)
            };
            OmegaSample {
                demand,
                split,
                vdu,
                vcu,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: AlphaLoss,
}

impl From<&OmegaConfig> for TrainSettings {
    fn from(c: &OmegaConfig) -> Self {
        Self {
            epochs: c.epochs,
            batch_size: c.batch_size,
            learning_rate: c.learning_rate,
            loss: c.loss,
        }
    }
}

/// Trains the regressor in place; returns mean loss per epoch.
///
/// A never-trained model first has its output bias lifted so that every
/// training target starts out overprovisioned, where the loss has slope one.
pub fn train_omega<R: Rng + ?Sized>(
    model: &mut OmegaModel,
    data: &[OmegaSample],
    settings: &TrainSettings,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    settings.loss.validate()?;
    if settings.batch_size == 0 || settings.epochs == 0 {
        return Err(Error::InvalidConfig("epochs and batch size must be positive".into()));
    }
    let inputs: Vec<f64> = data.iter().map(|s| s.demand / model.demand_scale).collect();
    let targets: Vec<f64> = data.iter().map(|s| model.target(s)).collect();
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("omega targets"));
    }

    if model.trained_epochs == 0 {
        let shortfall = inputs
            .iter()
            .zip(&targets)
            .map(|(x, t)| t - model.regressor.forward(&[*x]).expect("one input")[0] * model.output_scale)
            .fold(0.0, f64::max);
        let last = model.regressor.layers().len() - 1;
        model.regressor.layer_mut(last).bias[0] += shortfall / model.output_scale;
    }

    let mut opt = Adam::new(&model.regressor, settings.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(settings.epochs);
    let scale = model.output_scale;
    for _ in 0..settings.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(settings.batch_size) {
            let b = chunk.len();
            let x = Array2::from_shape_fn((b, 1), |(r, _)| inputs[chunk[r]]);
            let cache = model.regressor.forward_batch(x.view())?;
            let out = cache.output();
            let mut upstream = Array2::zeros((b, 1));
            for (r, &k) in chunk.iter().enumerate() {
                let pred = out[[r, 0]] * scale;
                epoch_loss += settings.loss.value(pred, targets[k]);
                upstream[[r, 0]] = settings.loss.derivative(pred, targets[k]) * scale / b as f64;
            }
            let grads = model.regressor.backward(&cache, upstream.view())?;
            opt.step(&mut model.regressor, &grads)?;
        }
        history.push(epoch_loss / data.len() as f64);
        model.trained_epochs += 1;
    }
    Ok(history)
}

/// Held-out quality of the base-compute prediction against the noise-free
/// utilization model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub points: usize,
    pub mean_abs_error: f64,
    /// max - min of the true base curve over the grid.
    pub curve_range: f64,
    pub relative_error: f64,
    pub underprovision_rate: f64,
    pub overprovision_rate: f64,
}

pub fn evaluate_omega(model: &OmegaModel, env: &UtilizationModel, max_demand: f64, points: usize) -> OmegaReport {
    let points = points.max(2);
    let mut abs = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut under, mut over) = (0usize, 0usize);
    for k in 0..points {
        let d = max_demand * k as f64 / (points - 1) as f64;
        let (y, yh) = env.utilization(Split::S1, d);
        let truth = env.base_from_observation(Split::S1, y, yh);
        let pred = model.base(d);
        abs += (pred - truth).abs();
        lo = lo.min(truth);
        hi = hi.max(truth);
        if pred < truth {
            under += 1;
        } else if pred > truth {
            over += 1;
        }
    }
    let mae = abs / points as f64;
    let range = hi - lo;
    OmegaReport {
        points,
        mean_abs_error: mae,
        curve_range: range,
        relative_error: if range > 0.0 { mae / range } else { mae },
        underprovision_rate: under as f64 / points as f64,
        overprovision_rate: over as f64 / points as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> OmegaConfig {
        OmegaConfig {
            hidden: vec![16, 8],
            ..Default::default()
        }
    }

    #[test]
    fn loss_shape() {
        let l = AlphaLoss::default();
        assert!((l.value(5.0, 5.0) - l.penalty / 2.0).abs() < 1e-12);
        let small = AlphaLoss { penalty: 0.1, width: 0.25 };
        assert!((small.value(10.0, 0.0) - 10.0).abs() < 1e-6);
        assert!((l.value(0.0, 10.0) - l.penalty).abs() < 1e-6);
        for e in [-30.0, -3.0, -0.1, 0.0, 0.2, 4.0, 50.0] {
            assert!(l.value(e, 0.0) >= 0.0);
        }
    }

    #[test]
    fn loss_minimum_is_slightly_positive() {
        let l = AlphaLoss::default();
        let best = (0..4000)
            .map(|k| -2.0 + k as f64 * 1e-3)
            .min_by(|a, b| l.value(*a, 0.0).total_cmp(&l.value(*b, 0.0)))
            .unwrap();
        assert!(best > 0.0 && best < 1.0, "{best}");
    }

    #[test]
    fn keep_passes_previous_allocation_through() {
        let env = UtilizationModel::default();
        let m = OmegaModel::new(&small_cfg(), &env, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let prev = Deployment { split: Split::S2, vdu: 7.0, vcu: 3.0 };
        assert_eq!(m.predict(20.0, ConfigChoice::Keep, &prev), (7.0, 3.0));
    }

    fn constant_output(b: f64, margin: f64) -> OmegaModel {
        let mut net = Mlp::zeros(&[1, 4, 1]).unwrap();
        net.layer_mut(1).bias[0] = b / 25.0;
        let cfg = OmegaConfig { safety_margin: margin, ..Default::default() };
        OmegaModel::from_regressor(net, &cfg, &UtilizationModel::default()).unwrap()
    }

    #[test]
    fn scaling_by_split() {
        let prev = Deployment { split: Split::S1, vdu: 0.0, vcu: 0.0 };
        let m = constant_output(10.0, 0.1);
        let (x, xh) = m.predict(3.0, ConfigChoice::Deploy(Split::S1), &prev);
        assert!((x - 11.0).abs() < 1e-12);
        assert_eq!(xh, 0.0);
        let (x4, _) = m.predict(33.0, ConfigChoice::Deploy(Split::S4), &prev);
        assert_eq!(x4, 0.0);
        let (x3, xh3) = m.predict(3.0, ConfigChoice::Deploy(Split::S3), &prev);
        assert!((x3 / xh3 - 0.65 / 0.175).abs() < 1e-12);
    }

    #[test]
    fn negative_regression_clamped() {
        let prev = Deployment { split: Split::S1, vdu: 0.0, vcu: 0.0 };
        let m = constant_output(-4.0, 0.0);
        assert_eq!(m.predict(3.0, ConfigChoice::Deploy(Split::S2), &prev), (0.0, 0.0));
    }

    #[test]
    fn empty_dataset_rejected() {
        let env = UtilizationModel::default();
        let mut m = OmegaModel::new(&small_cfg(), &env, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let s = TrainSettings::from(&small_cfg());
        assert!(matches!(
            train_omega(&mut m, &[], &s, &mut ChaCha8Rng::seed_from_u64(2)),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn constant_target_is_learned() {
        let env = UtilizationModel::default();
        let cfg = OmegaConfig { learning_rate: 1e-3, ..small_cfg() };
        let mut m = OmegaModel::new(&cfg, &env, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let data = vec![OmegaSample { demand: 10.0, split: Split::S1, vdu: 12.0, vcu: 0.0 }; 64];
        let settings = TrainSettings { epochs: 300, batch_size: 16, ..TrainSettings::from(&cfg) };
        let hist = train_omega(&mut m, &data, &settings, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(hist.last().unwrap() < hist.first().unwrap());
        let pred = m.base(10.0);
        // Converges to the loss minimizer just above the target.
        assert!(pred > 12.0 && pred < 12.8, "{pred}");
    }

    #[test]
    fn checkpoint_reload_predicts_identically() {
        let env = UtilizationModel::default();
        let m = OmegaModel::new(&small_cfg(), &env, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("omega.json");
        m.save(&p).unwrap();
        let back = OmegaModel::load(&p).unwrap();
        for d in [0.0, 3.3, 17.9, 35.0] {
            assert_eq!(m.regress(d), back.regress(d));
        }
    }
}
