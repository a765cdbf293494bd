use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evaluation::EvaluationReport;
use super::sweep::SweepRow;
use super::training::EpisodeMetrics;
use super::ExperimentConfig;
use crate::cost::CostBreakdown;
use crate::error::{Error, Result};

pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// Metric names emitted per episode, in CSV order.
pub const EPISODE_METRICS: [&str; 12] = [
    "total",
    "overprovisioning",
    "declined",
    "instantiation",
    "reconfiguration",
    "xhaul",
    "epsilon",
    "reconfigurations",
    "split1",
    "split2",
    "split3",
    "split4",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: String,
    pub config_hash: String,
    pub seed: u64,
    pub episodes: Vec<EpisodeMetrics>,
}

impl RunMetrics {
    pub fn new(run: String, cfg: &ExperimentConfig, episodes: Vec<EpisodeMetrics>) -> Self {
        Self { run, config_hash: cfg.hash(), seed: cfg.seed, episodes }
    }
}

fn metric_values(m: &EpisodeMetrics) -> [f64; 12] {
    let c = &m.cost;
    [
        c.total,
        c.overprovisioning,
        c.declined,
        c.instantiation,
        c.reconfiguration,
        c.xhaul,
        m.epsilon,
        m.reconfigurations as f64,
        m.split_occupancy[0] as f64,
        m.split_occupancy[1] as f64,
        m.split_occupancy[2] as f64,
        m.split_occupancy[3] as f64,
    ]
}

fn check_nonempty(runs: &[RunMetrics]) -> Result<()> {
    if runs.is_empty() || runs.iter().all(|r| r.episodes.is_empty()) {
        return Err(Error::EmptyMetrics);
    }
    Ok(())
}

/// Long-format CSV: `run,episode,metric,value`.
pub fn write_metrics_csv(path: &Path, runs: &[RunMetrics]) -> Result<()> {
    check_nonempty(runs)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run", "episode", "metric", "value"])?;
    for r in runs {
        for m in &r.episodes {
            for (name, v) in EPISODE_METRICS.iter().zip(metric_values(m)) {
                w.write_record([r.run.as_str(), &m.episode.to_string(), name, &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_metrics_csv`]; config hashes and seeds are not stored
/// in the CSV and come back empty.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<RunMetrics>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut order: Vec<String> = Vec::new();
    let mut table: BTreeMap<(String, usize), BTreeMap<String, f64>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::InvalidConfig(format!("metrics row has {} fields", rec.len())));
        }
        let run = rec[0].to_string();
        let episode: usize = rec[1]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad episode {:?}", &rec[1])))?;
        let value: f64 = rec[3]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad value {:?}", &rec[3])))?;
        if !order.contains(&run) {
            order.push(run.clone());
        }
        table.entry((run, episode)).or_default().insert(rec[2].to_string(), value);
    }
    let mut runs = Vec::new();
    for run in order {
        let mut episodes = Vec::new();
        for ((_, episode), values) in table.range((run.clone(), 0)..=(run.clone(), usize::MAX)) {
            let get = |k: &str| {
                values
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::InvalidConfig(format!("run {run} episode {episode} lacks {k}")))
            };
            let cost = CostBreakdown::from_components(
                get("overprovisioning")?,
                get("declined")?,
                get("instantiation")?,
                get("reconfiguration")?,
                get("xhaul")?,
            );
            episodes.push(EpisodeMetrics {
                episode: *episode,
                cost,
                epsilon: get("epsilon")?,
                reconfigurations: get("reconfigurations")? as usize,
                split_occupancy: [
                    get("split1")? as usize,
                    get("split2")? as usize,
                    get("split3")? as usize,
                    get("split4")? as usize,
                ],
            });
        }
        runs.push(RunMetrics { run, config_hash: String::new(), seed: 0, episodes });
    }
    check_nonempty(&runs)?;
    Ok(runs)
}

/// Trailing moving average; the first `window - 1` entries average what is
/// available.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Means of the first and the last `window` values.
pub fn first_last_window(values: &[f64], window: usize) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let w = window.clamp(1, values.len());
    let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((avg(&values[..w]), avg(&values[values.len() - w..])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: String,
    pub config_hash: String,
    pub seed: u64,
    pub episodes: usize,
    /// Component-wise sum over all episodes.
    pub totals: CostBreakdown,
    pub mean_episode_cost: f64,
    pub mean_reconfigurations: f64,
    pub smoothing_window: usize,
    pub first_window_cost: f64,
    pub last_window_cost: f64,
    /// Cost per episode and its moving average, for cost-vs-episode plots.
    pub cost_series: Vec<f64>,
    pub smoothed_cost_series: Vec<f64>,
}

impl RunSummary {
    pub fn from_run(r: &RunMetrics, window: usize) -> Self {
        let series: Vec<f64> = r.episodes.iter().map(|m| m.cost.total).collect();
        let mut totals = CostBreakdown::default();
        for m in &r.episodes {
            totals.accumulate(&m.cost);
        }
        let n = r.episodes.len().max(1) as f64;
        let (first, last) = first_last_window(&series, window).unwrap_or((0.0, 0.0));
        Self {
            run: r.run.clone(),
            config_hash: r.config_hash.clone(),
            seed: r.seed,
            episodes: r.episodes.len(),
            totals,
            mean_episode_cost: totals.total / n,
            mean_reconfigurations: r.episodes.iter().map(|m| m.reconfigurations as f64).sum::<f64>() / n,
            smoothing_window: window,
            first_window_cost: first,
            last_window_cost: last,
            smoothed_cost_series: moving_average(&series, window),
            cost_series: series,
        }
    }
}

/// Mean episode cost of each policy relative to the static oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCosts {
    pub learned: f64,
    pub stao: f64,
    pub dyno: f64,
}

impl From<&EvaluationReport> for NormalizedCosts {
    #[allow(clippy::eq_op)]
    fn from(r: &EvaluationReport) -> Self {
        Self {
            learned: r.learned_over_stao,
            stao: r.stao.cost.mean / r.stao.cost.mean,
            dyno: r.dyno_over_stao,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub runs: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_costs: Option<NormalizedCosts>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sweep: Vec<SweepRow>,
}

/// Wall-clock facts kept apart from the reproducible outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub started_unix_seconds: u64,
    pub wall_time_seconds: f64,
}

pub struct Exported {
    pub metrics_csv: PathBuf,
    pub summary_json: PathBuf,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes `metrics.csv` and `summary.json` into `dir`. Nothing is created
/// when `runs` holds no episodes.
pub fn export_results(
    dir: &Path,
    runs: &[RunMetrics],
    evaluation: Option<&EvaluationReport>,
    sweep: &[SweepRow],
    window: usize,
) -> Result<Exported> {
    check_nonempty(runs)?;
    std::fs::create_dir_all(dir)?;
    let metrics_csv = dir.join("metrics.csv");
    let summary_json = dir.join("summary.json");
    write_metrics_csv(&metrics_csv, runs)?;
    let summary = Summary {
        schema_version: METRICS_SCHEMA_VERSION,
        runs: runs.iter().map(|r| RunSummary::from_run(r, window)).collect(),
        normalized_costs: evaluation.map(NormalizedCosts::from),
        evaluation: evaluation.cloned(),
        sweep: sweep.to_vec(),
    };
    write_json(&summary_json, &summary)?;
    Ok(Exported { metrics_csv, summary_json })
}

/// Plot-ready CSVs: `cost_vs_episode.csv` (run, episode, cost, smoothed) and,
/// with an evaluation, `normalized_costs.csv` (policy, mean, low, high).
pub fn export_plot_data(
    dir: &Path,
    runs: &[RunMetrics],
    evaluation: Option<&EvaluationReport>,
    window: usize,
) -> Result<Vec<PathBuf>> {
    check_nonempty(runs)?;
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let p = dir.join("cost_vs_episode.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["run", "episode", "cost", "smoothed_cost"])?;
    for r in runs {
        let s = RunSummary::from_run(r, window);
        for ((m, c), sm) in r.episodes.iter().zip(&s.cost_series).zip(&s.smoothed_cost_series) {
            w.write_record([r.run.as_str(), &m.episode.to_string(), &c.to_string(), &sm.to_string()])?;
        }
    }
    w.flush()?;
    written.push(p);
    if let Some(ev) = evaluation {
        let p = dir.join("normalized_costs.csv");
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(["policy", "normalized_mean", "normalized_low", "normalized_high"])?;
        let base = ev.stao.cost.mean;
        for (name, s) in [("learned", &ev.learned), ("stao", &ev.stao), ("dyno", &ev.dyno)] {
            w.write_record([
                name.to_string(),
                (s.cost.mean / base).to_string(),
                (s.cost.low / base).to_string(),
                (s.cost.high / base).to_string(),
            ])?;
        }
        w.flush()?;
        written.push(p);
    }
    Ok(written)
}
