//! CSV formats for traffic traces (`stage,second,demand_mbps`, 1-based
//! indices, one row per second) and utilization samples
//! (`split,demand_mbps,vdu_rc,vcu_rc`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::traffic::TrafficTrace;
use super::utilization::UtilizationSample;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    stage: usize,
    second: usize,
    demand_mbps: f64,
}

pub fn write_trace_csv(path: &Path, trace: &TrafficTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let t = trace.seconds_per_stage();
    for (k, &d) in trace.demands().iter().enumerate() {
        w.serialize(TraceRow {
            stage: k / t + 1,
            second: k % t + 1,
            demand_mbps: d,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Rows must be ordered stage-major with every stage holding the same number
/// of seconds.
pub fn read_trace_csv(path: &Path) -> Result<TrafficTrace> {
    let mut r = csv::Reader::from_path(path)?;
    let mut demands = Vec::new();
    let mut seconds_per_stage = 0;
    for (k, row) in r.deserialize::<TraceRow>().enumerate() {
        let row = row?;
        if row.stage == 1 {
            seconds_per_stage = seconds_per_stage.max(row.second);
        }
        let t = seconds_per_stage.max(1);
        let (stage, second) = (k / t + 1, k % t + 1);
        if row.stage != stage || row.second != second {
            return Err(Error::InvalidProfile(format!(
                "trace row {} is (stage {}, second {}), expected ({stage}, {second})",
                k + 1,
                row.stage,
                row.second
            )));
        }
        demands.push(row.demand_mbps);
    }
    TrafficTrace::new(seconds_per_stage, demands)
}

pub fn write_utilization_csv(path: &Path, samples: &[UtilizationSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_utilization_csv(path: &Path) -> Result<Vec<UtilizationSample>> {
    let mut r = csv::Reader::from_path(path)?;
    let samples = r.deserialize().collect::<std::result::Result<Vec<UtilizationSample>, _>>()?;
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(samples)
}
