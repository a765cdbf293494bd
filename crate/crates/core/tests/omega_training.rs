use proptest::prelude::*;
use vran_core::env::UtilizationModel;
use vran_core::harness::{moving_average, pretrain_omega, ExperimentConfig};
use vran_core::omega::{OmegaConfig, OmegaModel};
use vran_core::nn::Mlp;
use vran_core::{ConfigChoice, Deployment, Split};

fn noiseless() -> ExperimentConfig {
    let mut c = ExperimentConfig::desk();
    c.omega.dataset_noise = false;
    c
}

#[test]
fn noiseless_fit_is_accurate_and_biased_upward() {
    let (_, report) = pretrain_omega(&noiseless()).unwrap();
    let h = report.holdout;
    assert!(h.relative_error < 0.05, "{h:?}");
    assert!(h.underprovision_rate < h.overprovision_rate, "{h:?}");
    let smooth = moving_average(&report.loss_history, 20);
    assert!(smooth.last().unwrap() < &smooth[19]);
    for w in smooth[19..].windows(2) {
        assert!(w[1] <= w[0] * 1.01, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn larger_penalty_does_not_raise_underprovisioning() {
    let base = noiseless();
    let mut doubled = base.clone();
    doubled.omega.loss.penalty *= 2.0;
    let (_, a) = pretrain_omega(&base).unwrap();
    let (_, b) = pretrain_omega(&doubled).unwrap();
    assert!(b.holdout.underprovision_rate <= a.holdout.underprovision_rate, "{:?} vs {:?}", a.holdout, b.holdout);
}

#[test]
fn pretrained_checkpoint_reloads_identically() {
    let mut cfg = ExperimentConfig::desk();
    cfg.omega.epochs = 5;
    cfg.omega.dataset_size = 500;
    let (m, report) = pretrain_omega(&cfg).unwrap();
    assert_eq!(report.loss_history.len(), 5);
    assert!((report.holdout.underprovision_rate + report.holdout.overprovision_rate) <= 1.0);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("omega.json");
    m.save(&p).unwrap();
    let back = OmegaModel::load(&p).unwrap();
    let prev = Deployment { split: Split::S1, vdu: 3.0, vcu: 4.0 };
    for d in [0.0, 1.5, 12.25, 34.9] {
        for o in 0..5 {
            let c = ConfigChoice::from_index(o).unwrap();
            assert_eq!(m.predict(d, c, &prev), back.predict(d, c, &prev));
        }
    }
}

proptest! {
    #[test]
    fn allocation_ratio_follows_placement_factors(
        bias in 0.1f64..1.0,
        margin in 0.0f64..0.5,
        demand in 0.0f64..35.0,
        i in 2usize..=4,
    ) {
        let mut net = Mlp::zeros(&[1, 3, 1]).unwrap();
        net.layer_mut(1).bias[0] = bias;
        let cfg = OmegaConfig { safety_margin: margin, ..Default::default() };
        let env = UtilizationModel::default();
        let m = OmegaModel::from_regressor(net, &cfg, &env).unwrap();
        let split = Split::from_index(i).unwrap();
        let prev = Deployment { split: Split::S1, vdu: 0.0, vcu: 0.0 };
        let (x, xh) = m.predict(demand, ConfigChoice::Deploy(split), &prev);
        let (rd, rc) = env.rho(split);
        prop_assert!((x * rc - xh * rd).abs() < 1e-9);
        prop_assert_eq!(m.predict(demand, ConfigChoice::Deploy(split), &prev), (x, xh));
    }
}
