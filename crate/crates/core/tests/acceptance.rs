//! Acceptance runner: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vran_core::baselines::{solve_dyno_stage, solve_stao};
use vran_core::cost::*;
use vran_core::dqn::{q_loss, q_loss_and_gradient};
use vran_core::env::{generate_traffic, EnvParams, TrafficConfig, UtilizationModel};
use vran_core::harness::*;
use vran_core::nn::Mlp;
use vran_core::omega::{AlphaLoss, OmegaModel};
use vran_core::{ConfigChoice, Split};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, detail: String) -> Outcome {
    let s = elapsed.as_secs_f64();
    check(s < limit_s, format!("{detail}; {s:.1} s (limit {limit_s} s)"))
}

fn cost_examples() -> Outcome {
    let t = Instant::now();
    let k = CostCoefficients::default();
    let base = |alloc: (f64, f64), used: (f64, f64)| StageOutcome {
        choice: ConfigChoice::Keep,
        split: Split::S2,
        vdu_alloc: alloc.0,
        vcu_alloc: alloc.1,
        vdu_used: used.0,
        vcu_used: used.1,
        prev_vdu_alloc: alloc.0,
        prev_vcu_alloc: alloc.1,
        xhaul_load: 0.0,
        violations: ConstraintViolations::default(),
    };
    let moved = |prev: (f64, f64), next: (f64, f64)| StageOutcome {
        choice: ConfigChoice::Deploy(Split::S2),
        prev_vdu_alloc: prev.0,
        prev_vcu_alloc: prev.1,
        ..base(next, next)
    };
    let mut violated = base((9.0, 4.0), (8.0, 4.0));
    violated.violations.xhaul_capacity = true;
    let k2 = CostCoefficients { overprovisioning: 2.0, ..k };
    let cases: Vec<(&str, f64, f64)> = vec![
        ("overprovisioning exact", overprovisioning_cost(&base((7.0, 3.0), (7.0, 3.0)), &k), 0.0),
        ("overprovisioning mixed", overprovisioning_cost(&base((10.0, 3.0), (8.0, 5.0)), &k), 2.0),
        ("overprovisioning doubled", overprovisioning_cost(&base((12.0, 6.0), (10.0, 5.0)), &k2), 6.0),
        ("declined none", declined_demand_cost(&base((9.0, 4.0), (8.0, 4.0)), &k), 0.0),
        ("declined short vDU", declined_demand_cost(&base((5.0, 4.0), (6.0, 4.0)), &k), 2.0),
        ("declined violation", declined_demand_cost(&violated, &k), 2.0),
        ("switching keep", instantiation_reconfiguration_cost(&base((10.0, 5.0), (1.0, 1.0)), &k), 0.0),
        ("switching grow", instantiation_reconfiguration_cost(&moved((10.0, 5.0), (14.0, 5.0)), &k), 4.0),
        ("switching mixed", instantiation_reconfiguration_cost(&moved((10.0, 5.0), (7.0, 6.0)), &k), 2.5),
        ("xhaul S1", xhaul_load(Split::S1, 20.0), 20.0),
        ("xhaul S3", xhaul_load(Split::S3, 10.0), 11.7),
        ("xhaul S4", xhaul_load(Split::S4, 0.0), 2500.0),
    ];
    let bad: Vec<String> = cases
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-9)
        .map(|(name, got, want)| format!("{name}: {got} != {want}"))
        .collect();
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    within(t.elapsed(), 1.0, format!("{} cases exact to 1e-9", cases.len()))
}

fn gradient_integrity() -> Outcome {
    let t = Instant::now();
    let h = 1e-5;
    let mut worst_q: f64 = 0.0;
    let mut worst_alpha: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let net = Mlp::new(&[6, 24, 24, 5], &mut rng).unwrap();
        let b = 8;
        let states = Array2::from_shape_fn((b, 6), |_| rng.random_range(0.0..1.0));
        let actions: Vec<usize> = (0..b).map(|_| rng.random_range(0..5)).collect();
        let targets: Vec<f64> = (0..b).map(|_| rng.random_range(-20.0..0.0)).collect();
        let (_, g) = q_loss_and_gradient(&net, states.view(), &actions, &targets).unwrap();
        let coords: Vec<usize> = (0..net.param_count()).collect();
        let numeric = finite_difference(&net.params_flat(), &coords, h, |p| {
            q_loss(&with_params(&net, p), states.view(), &actions, &targets).unwrap()
        });
        worst_q = worst_q.max(relative_error(&g.flat(), &numeric));

        // Asymmetric loss through a regressor of the resource-orchestrator shape.
        let reg = Mlp::new(&[1, 16, 8, 1], &mut rng).unwrap();
        let loss = AlphaLoss { penalty: rng.random_range(0.5..4.0), width: rng.random_range(0.1..1.0) };
        let scale = 25.0;
        let x = Array2::from_shape_fn((b, 1), |_| rng.random_range(0.0..1.0));
        let cache = reg.forward_batch(x.view()).unwrap();
        let out = cache.output();
        // Targets around the prediction, where the loss is not saturated.
        let y: Vec<f64> =
            (0..b).map(|r| out[[r, 0]] * scale + rng.random_range(-3.0..3.0) * loss.width).collect();
        let up = Array2::from_shape_fn((b, 1), |(r, _)| loss.derivative(out[[r, 0]] * scale, y[r]) * scale / b as f64);
        let analytic = reg.backward(&cache, up.view()).unwrap().flat();
        let coords: Vec<usize> = (0..reg.param_count()).collect();
        let numeric = finite_difference(&reg.params_flat(), &coords, h, |p| {
            let o = with_params(&reg, p).forward_batch(x.view()).unwrap().into_output();
            (0..b).map(|r| loss.value(o[[r, 0]] * scale, y[r])).sum::<f64>() / b as f64
        });
        worst_alpha = worst_alpha.max(relative_error(&analytic, &numeric));
    }
    let ok = worst_q < 1e-4 && worst_alpha < 1e-4;
    if !ok {
        return Err(format!("max rel. error: q-loss {worst_q:.2e}, asymmetric loss {worst_alpha:.2e}"));
    }
    within(
        t.elapsed(),
        10.0,
        format!("20 configurations; max rel. error q-loss {worst_q:.2e}, asymmetric loss {worst_alpha:.2e} (< 1e-4)"),
    )
}

fn omega_quality() -> Outcome {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::desk();
    cfg.omega.dataset_noise = false;
    let (_, report) = pretrain_omega(&cfg).map_err(|e| e.to_string())?;
    let h = report.holdout;
    let detail = format!(
        "held-out MAE {:.3} RC = {:.2}% of range {:.2}; under {:.3} vs over {:.3}",
        h.mean_abs_error,
        100.0 * h.relative_error,
        h.curve_range,
        h.underprovision_rate,
        h.overprovision_rate
    );
    if !(h.relative_error < 0.05 && h.underprovision_rate < h.overprovision_rate) {
        return Err(detail);
    }
    within(t.elapsed(), 120.0, detail)
}

fn dqn_toy() -> Outcome {
    let t = Instant::now();
    let mdp = ToyMdp { gamma: 0.9 };
    let q_star = mdp.value_iteration();
    let agent = train_toy_agent(11);
    let mut worst: f64 = 0.0;
    for s in 0..2 {
        let q = agent.q_values(&ToyMdp::encode(s)).unwrap();
        let best = if q_star[s][1] > q_star[s][0] { 1 } else { 0 };
        if agent.greedy(&ToyMdp::encode(s)).unwrap() != best {
            return Err(format!("state {s}: greedy differs from optimum; Q = {q:?}, Q* = {:?}", q_star[s]));
        }
        for a in 0..2 {
            worst = worst.max((q[a] - q_star[s][a]).abs() / q_star[s][a].abs());
        }
    }
    if worst >= 0.05 {
        return Err(format!("max relative Q error {worst:.4}"));
    }
    within(t.elapsed(), 60.0, format!("greedy policy optimal; max relative Q error {:.2}%", 100.0 * worst))
}

fn baseline_exactness() -> Outcome {
    let t = Instant::now();
    let grid = coarse_grid();
    let mut checked = 0;
    let params = [
        EnvParams::default(),
        EnvParams::new(
            CostCoefficients { instantiation: 0.0, reconfiguration: 0.0, ..Default::default() },
            UtilizationModel::default(),
            3000.0,
        ),
    ];
    for p in &params {
        for seed in 0..5 {
            let cfg = TrafficConfig { stages: 20, ..Default::default() };
            let trace = generate_traffic(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let sol = solve_stao(p, &trace, &grid).map_err(|e| e.to_string())?;
            let (i, x, xh, c) = enumerate_stao(p, &trace, 5.0).ok_or("oracle found no static policy")?;
            if (sol.deployment.split.index(), sol.deployment.vdu, sol.deployment.vcu) != (i, x, xh)
                || sol.cost.total.to_bits() != c.total().to_bits()
            {
                return Err(format!("static: {sol:?} vs ({i}, {x}, {xh}, {})", c.total()));
            }
            let mut prev = p.initial_deployment();
            for d in trace.stage_means() {
                let got = solve_dyno_stage(p, d, &prev, &grid);
                let (i, x, xh, c) = enumerate_dyno_stage(p, d, (prev.vdu, prev.vcu), 5.0);
                if (got.action.split.index(), got.action.vdu, got.action.vcu) != (i, x, xh)
                    || got.cost.total.to_bits() != c.total().to_bits()
                {
                    return Err(format!("dynamic at demand {d}: {got:?} vs ({i}, {x}, {xh}, {})", c.total()));
                }
                prev = got.action.deployment();
                checked += 1;
            }
            checked += 1;
        }
    }
    within(t.elapsed(), 10.0, format!("{checked} solutions bit-identical to enumeration (step 5 RC, 4 splits)"))
}

fn envelope() -> Outcome {
    let t = Instant::now();
    let m = UtilizationModel::default().without_noise();
    let (mut vdu_s1, mut vcu_s4): (f64, f64) = (0.0, 0.0);
    for k in 0..=35_000 {
        let d = k as f64 * 1e-3;
        vdu_s1 = vdu_s1.max(m.utilization(Split::S1, d).0);
        vcu_s4 = vcu_s4.max(m.utilization(Split::S4, d).1);
    }
    let detail = format!("max S1 vDU {vdu_s1:.3} RC (<= 25), max S4 vCU {vcu_s4:.3} RC (<= 13)");
    if !(vdu_s1 <= 25.0 && vcu_s4 <= 13.0) {
        return Err(detail);
    }
    within(t.elapsed(), 1.0, detail)
}

struct Trained {
    cfg: ExperimentConfig,
    episodes: Vec<EpisodeMetrics>,
    report: EvaluationReport,
    train_seconds: f64,
    eval_seconds: f64,
}

fn train_and_evaluate(cfg: ExperimentConfig, omega: &OmegaModel) -> Result<Trained, String> {
    let t = Instant::now();
    let run = run_training(&cfg, omega).map_err(|e| e.to_string())?;
    let train_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let report = run_evaluation(&run.agent, omega, &cfg).map_err(|e| e.to_string())?;
    Ok(Trained { cfg, episodes: run.episodes, report, train_seconds, eval_seconds: t.elapsed().as_secs_f64() })
}

fn with_switching_cost(value: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::desk();
    c.costs.reconfiguration = value;
    c.costs.instantiation = value;
    c
}

fn training_improvement(run: &Trained) -> Outcome {
    let series: Vec<f64> = run.episodes.iter().map(|m| m.cost.total).collect();
    let (first, last) = first_last_window(&series, 50).ok_or("no episodes")?;
    let ratio = last / first;
    let detail = format!(
        "window-50 cost {first:.1} -> {last:.1}, ratio {ratio:.3} (<= 0.5); {} episodes x {} stages",
        run.cfg.episodes, run.cfg.traffic.stages
    );
    if ratio > 0.5 {
        return Err(detail);
    }
    within(Duration::from_secs_f64(run.train_seconds), 1800.0, detail)
}

fn fmt_interval(i: &Interval) -> String {
    format!("{:.1} [{:.1}, {:.1}]", i.mean, i.low, i.high)
}

fn policy_ordering(default: &Trained, free: &Trained) -> Outcome {
    let d = &default.report;
    let f = &free.report;
    let first = d.learned.cost.strictly_below(&d.stao.cost);
    let sandwich = f.dyno.cost.strictly_below(&f.learned.cost) && f.learned.cost.strictly_below(&f.stao.cost);
    let detail = format!(
        "default: learned {} < static {}; free switching: dynamic {} < learned {} < static {}",
        fmt_interval(&d.learned.cost),
        fmt_interval(&d.stao.cost),
        fmt_interval(&f.dyno.cost),
        fmt_interval(&f.learned.cost),
        fmt_interval(&f.stao.cost),
    );
    if !(first && sandwich) {
        return Err(detail);
    }
    within(Duration::from_secs_f64(default.eval_seconds + free.eval_seconds), 600.0, detail)
}

fn sweep_monotonicity(points: &[&Trained]) -> Outcome {
    let counts: Vec<(f64, f64)> =
        points.iter().map(|p| (p.cfg.costs.reconfiguration, p.report.learned.reconfigurations)).collect();
    let ok = counts.windows(2).all(|w| w[1].1 <= w[0].1);
    let total: f64 = points.iter().map(|p| p.train_seconds + p.eval_seconds).sum();
    let detail = counts
        .iter()
        .map(|(k, r)| format!("kappa_r={k}: {r:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    let detail = format!("reconfigurations per episode {detail}");
    if !ok {
        return Err(detail);
    }
    within(Duration::from_secs_f64(total), 5400.0, detail)
}

fn determinism(first: &Trained, omega: &OmegaModel) -> Outcome {
    let t = Instant::now();
    let (omega2, _) = pretrain_omega(&first.cfg).map_err(|e| e.to_string())?;
    let same_omega = omega2.regressor().params_flat() == omega.regressor().params_flat();
    let second = run_training(&first.cfg, &omega2).map_err(|e| e.to_string())?;
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut files = Vec::new();
    for (d, eps) in dirs.iter().zip([first.episodes.clone(), second.episodes]) {
        let p = d.path().join("metrics.csv");
        write_metrics_csv(&p, &[RunMetrics::new("desk".into(), &first.cfg, eps)]).map_err(|e| e.to_string())?;
        files.push(std::fs::read(&p).map_err(|e| e.to_string())?);
    }
    let detail = format!(
        "metrics CSVs of two seeded desk runs: {} vs {} bytes, identical = {}, regressor identical = {same_omega}; {:.1} s",
        files[0].len(),
        files[1].len(),
        files[0] == files[1],
        t.elapsed().as_secs_f64()
    );
    check(files[0] == files[1] && same_omega, detail)
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(format!(
            "panicked: {}",
            p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
        )),
    }
}

struct Trainings {
    omega: OmegaModel,
    default: Trained,
    free: Trained,
    low: Trained,
    high: Trained,
}

fn run_trainings() -> Result<Trainings, String> {
    let desk = ExperimentConfig::desk();
    let (omega, _) = pretrain_omega(&desk).map_err(|e| e.to_string())?;
    Ok(Trainings {
        default: train_and_evaluate(desk, &omega)?,
        free: train_and_evaluate(with_switching_cost(0.0), &omega)?,
        low: train_and_evaluate(with_switching_cost(0.05), &omega)?,
        high: train_and_evaluate(with_switching_cost(5.0), &omega)?,
        omega,
    })
}

fn main() {
    let mut failed = 0;
    let mut total = 0;
    let mut report = |id: u8, name: &str, r: Outcome| {
        total += 1;
        match r {
            Ok(d) => println!("PASS C{id} {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL C{id} {name}: {d}");
            }
        }
    };

    report(1, "cost-model oracle suite", guarded(cost_examples));
    report(2, "gradient integrity", guarded(gradient_integrity));
    report(3, "resource regression quality", guarded(omega_quality));
    report(4, "DQN toy sanity", guarded(dqn_toy));
    report(8, "baseline exactness", guarded(baseline_exactness));
    report(10, "environment envelope", guarded(envelope));

    match catch_unwind(run_trainings).unwrap_or_else(|_| Err("training panicked".into())) {
        Ok(t) => {
            report(5, "training improvement", guarded(|| training_improvement(&t.default)));
            report(6, "policy ordering", guarded(|| policy_ordering(&t.default, &t.free)));
            report(7, "coefficient-sweep monotonicity", guarded(|| sweep_monotonicity(&[&t.low, &t.default, &t.high])));
            report(9, "determinism", guarded(|| determinism(&t.default, &t.omega)));
        }
        Err(e) => {
            for (id, name) in [
                (5, "training improvement"),
                (6, "policy ordering"),
                (7, "coefficient-sweep monotonicity"),
                (9, "determinism"),
            ] {
                report(id, name, Err(format!("training failed: {e}")));
            }
        }
    }

    println!("acceptance: {} of {total} criteria passed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
