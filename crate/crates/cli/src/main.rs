//! `vran-orch`: command-line front end for pretraining, training, evaluation,
//! baselines, sweeps and export.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use vran_core::baselines::BaselinePolicy;
use vran_core::dqn::DqnAgent;
use vran_core::env::read_utilization_csv;
use vran_core::harness::*;
use vran_core::omega::{OmegaModel, OmegaSample};
use vran_core::{Error, Split};

const OUT_DIR_ENV: &str = "VRAN_OUT_DIR";

#[derive(Parser)]
#[command(name = "vran-orch", version, about = "Split and compute orchestration for a virtualized RAN base station")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config file layered over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base preset: `full` (reference scale) or `desk` (scaled down).
    #[arg(long, default_value = "full")]
    preset: String,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-key override, e.g. `--set dqn.learning_rate=1e-4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory. Falls back to $VRAN_OUT_DIR, then `./runs`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the resource regressor and save a checkpoint.
    PretrainOmega {
        #[command(flatten)]
        common: Common,
        /// Utilization samples CSV (split, demand_mbps, vdu_rc, vcu_rc) used
        /// instead of a generated dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Train the configuration agent.
    Train {
        #[command(flatten)]
        common: Common,
        /// Regressor checkpoint; pretrained in place when absent.
        #[arg(long)]
        omega: Option<PathBuf>,
    },
    /// Evaluate a trained agent against both oracles.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        agent: PathBuf,
        #[arg(long)]
        omega: PathBuf,
    },
    /// Run an oracle baseline on the evaluation traces.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// `stao` or `dyno`.
        #[arg(long)]
        policy: String,
    },
    /// Train/evaluate across reconfiguration coefficients or horizons.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated reconfiguration coefficients (instantiation follows).
        #[arg(long, value_delimiter = ',', conflicts_with = "horizons")]
        reconfiguration: Vec<f64>,
        /// Comma-separated stage counts.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize>,
        #[arg(long)]
        omega: Option<PathBuf>,
    },
    /// Rebuild the summary and plot data from a metrics CSV.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        metrics: PathBuf,
        /// Evaluation JSON written by `eval`.
        #[arg(long)]
        evaluation: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PretrainOmega { .. } => "pretrain-omega",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Baseline { .. } => "baseline",
            Command::Sweep { .. } => "sweep",
            Command::Export { .. } => "export",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::PretrainOmega { common, .. }
            | Command::Train { common, .. }
            | Command::Eval { common, .. }
            | Command::Baseline { common, .. }
            | Command::Sweep { common, .. }
            | Command::Export { common, .. } => common,
        }
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Toml(_) | Error::EmptySweep => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn load_config(c: &Common) -> Outcome<ExperimentConfig> {
    let base = ExperimentConfig::preset(&c.preset)?;
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load_over(&base, p).map_err(|e| match e {
            Error::Io(io) => Failure::Config(format!("{}: {io}", p.display())),
            other => Failure::Config(format!("{}: {other}", p.display())),
        })?,
        None => base,
    };
    for o in &c.overrides {
        cfg.apply_override(o).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn out_dir(c: &Common) -> PathBuf {
    c.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

struct Run {
    command: &'static str,
    cfg: ExperimentConfig,
    dir: PathBuf,
    started: Instant,
    started_unix: u64,
}

impl Run {
    fn start(command: &'static str, common: &Common) -> Outcome<Self> {
        let cfg = load_config(common)?;
        let dir = out_dir(common);
        fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let run = Self { command, cfg, dir, started: Instant::now(), started_unix };
        let cfg_path = run.path("config.toml");
        fs::write(&cfg_path, run.cfg.to_toml_string()?).map_err(|e| io_failure(&cfg_path, e))?;
        Ok(run)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Outcome<PathBuf> {
        let p = self.path(name);
        write_json(&p, value)?;
        Ok(p)
    }

    fn finish(self) -> Outcome<()> {
        let meta = RunMetadata {
            schema_version: METRICS_SCHEMA_VERSION,
            command: self.command.to_string(),
            config_hash: self.cfg.hash(),
            seed: self.cfg.seed,
            started_unix_seconds: self.started_unix,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        self.json("metadata.json", &meta)?;
        eprintln!("outputs in {}", self.dir.display());
        Ok(())
    }
}

fn samples_from_csv(path: &Path) -> Outcome<Vec<OmegaSample>> {
    read_utilization_csv(path)
        .map_err(|e| io_failure(path, e))?
        .into_iter()
        .map(|s| {
            Ok(OmegaSample { demand: s.demand_mbps, split: Split::from_index(s.split)?, vdu: s.vdu_rc, vcu: s.vcu_rc })
        })
        .collect::<Result<_, Error>>()
        .map_err(|e| io_failure(path, e))
}

fn pretrain(run: &Run, dataset: Option<&Path>) -> Outcome<OmegaModel> {
    let (model, report) = match dataset {
        Some(p) => pretrain_omega_on(&run.cfg, &samples_from_csv(p)?)?,
        None => pretrain_omega(&run.cfg)?,
    };
    model.save(&run.path("omega.json"))?;
    run.json("pretrain_report.json", &report)?;
    let h = &report.holdout;
    eprintln!(
        "regressor: {} samples, held-out error {:.2}% of range, under {:.3} / over {:.3}",
        report.samples,
        100.0 * h.relative_error,
        h.underprovision_rate,
        h.overprovision_rate
    );
    Ok(model)
}

fn omega_or_pretrain(run: &Run, path: Option<&Path>) -> Outcome<OmegaModel> {
    match path {
        Some(p) => OmegaModel::load(p).map_err(|e| io_failure(p, e)),
        None => pretrain(run, None),
    }
}

fn train(run: &Run, omega: &OmegaModel) -> Outcome<TrainingRun> {
    let total = run.cfg.episodes;
    let report_every = (total / 20).max(1);
    let trained = run_training_with(&run.cfg, omega, |m| {
        if m.episode % report_every == 0 || m.episode == total {
            eprintln!("episode {}/{total}: cost {:.2}, epsilon {:.3}", m.episode, m.cost.total, m.epsilon);
        }
    })?;
    Ok(trained)
}

fn print_report(r: &EvaluationReport) {
    for (name, s) in [("learned", &r.learned), ("stao", &r.stao), ("dyno", &r.dyno)] {
        println!(
            "{name:<8} mean {:>10.3}  95% CI [{:.3}, {:.3}]  reconfigurations {:.2}",
            s.cost.mean, s.cost.low, s.cost.high, s.reconfigurations
        );
    }
    println!(
        "learned/stao {:.4}  learned/dyno {:.4}  dyno/stao {:.4}",
        r.learned_over_stao, r.learned_over_dyno, r.dyno_over_stao
    );
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Outcome<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

#[derive(Serialize)]
struct BaselineReport {
    policy: String,
    episodes: usize,
    stages: usize,
    mean_cost: f64,
    mean_reconfigurations: f64,
    episode_totals: Vec<vran_core::cost::CostBreakdown>,
}

fn execute(cmd: &Command) -> Outcome<()> {
    let run = Run::start(cmd.name(), cmd.common())?;
    match cmd {
        Command::PretrainOmega { dataset, .. } => {
            pretrain(&run, dataset.as_deref())?;
        }
        Command::Train { omega, .. } => {
            let model = omega_or_pretrain(&run, omega.as_deref())?;
            let trained = train(&run, &model)?;
            trained.agent.save(&run.path("agent.json"))?;
            let metrics = RunMetrics::new(run.command.to_string(), &run.cfg, trained.episodes);
            export_results(&run.dir, &[metrics], None, &[], run.cfg.smoothing_window)?;
        }
        Command::Eval { agent, omega, .. } => {
            let model = OmegaModel::load(omega).map_err(|e| io_failure(omega, e))?;
            let agent = DqnAgent::load(agent).map_err(|e| io_failure(agent, e))?;
            let report = run_evaluation(&agent, &model, &run.cfg)?;
            run.json("evaluation.json", &report)?;
            run.json("normalized_costs.json", &NormalizedCosts::from(&report))?;
            print_report(&report);
        }
        Command::Baseline { policy, .. } => {
            let policy: BaselinePolicy = policy.parse().map_err(|e: Error| Failure::Config(e.to_string()))?;
            let traces = evaluation_traces(&run.cfg)?;
            let episodes = evaluate_baseline(policy, &run.cfg, &traces)?;
            let n = episodes.len() as f64;
            let report = BaselineReport {
                policy: format!("{policy:?}").to_lowercase(),
                episodes: episodes.len(),
                stages: run.cfg.traffic.stages,
                mean_cost: episodes.iter().map(|(c, _)| c.total).sum::<f64>() / n,
                mean_reconfigurations: episodes.iter().map(|(_, r)| *r as f64).sum::<f64>() / n,
                episode_totals: episodes.into_iter().map(|(c, _)| c).collect(),
            };
            println!("{} mean cost {:.3} over {} episodes", report.policy, report.mean_cost, report.episodes);
            run.json("baseline.json", &report)?;
        }
        Command::Sweep { reconfiguration, horizons, omega, .. } => {
            let spec = if !horizons.is_empty() {
                SweepSpec::Horizon { stages: horizons.clone() }
            } else {
                SweepSpec::Reconfiguration { values: reconfiguration.clone() }
            };
            if spec.is_empty() {
                return Err(Failure::Config("sweep needs --reconfiguration or --horizons values".into()));
            }
            let model = omega_or_pretrain(&run, omega.as_deref())?;
            let result = run_sweep_with(&run.cfg, &spec, &model, |i, row| {
                eprintln!(
                    "point {}: {}={} learned/stao {:.4} reconfigurations {:.2}",
                    i + 1,
                    row.parameter,
                    row.value,
                    row.learned_over_stao,
                    row.reconfigurations
                );
            })?;
            write_sweep_csv(&run.path("sweep.csv"), &result.rows)?;
            run.json("sweep.json", &result.rows)?;
            if !result.runs.is_empty() {
                export_results(&run.dir, &result.runs, None, &result.rows, run.cfg.smoothing_window)?;
            }
        }
        Command::Export { metrics, evaluation, .. } => {
            let runs = read_metrics_csv(metrics).map_err(|e| io_failure(metrics, e))?;
            let report: Option<EvaluationReport> = match evaluation {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
                    Some(serde_json::from_str(&text).map_err(|e| io_failure(p, e))?)
                }
                None => None,
            };
            let w = run.cfg.smoothing_window;
            export_results(&run.dir, &runs, report.as_ref(), &[], w)?;
            export_plot_data(&run.dir, &runs, report.as_ref(), w)?;
        }
    }
    run.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
