//! Run summaries: per-slice per-minute means and shares, buffer CDFs,
//! control latency, and the throughput-vs-allocation residual.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ransim::kpm::{parse_csv, CsvError};
use crate::ransim::KpmRecord;

use super::plan::MINUTE_MS;

pub const CDF_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub q: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub duration_ms: u64,
    pub minute_ms: u64,
    /// slice -> mean summed throughput (Mbit/s) per minute.
    pub minute_thr_mbps: BTreeMap<u32, Vec<f64>>,
    /// slice -> mean RBG share of the whole grid per minute.
    pub minute_rbg_share: BTreeMap<u32, Vec<f64>>,
    /// slice -> fraction of total cell throughput per minute.
    pub minute_thr_share: BTreeMap<u32, Vec<f64>>,
    /// slice -> empirical buffer-occupancy CDF over the whole run.
    pub buffer_cdf: BTreeMap<u32, Vec<CdfPoint>>,
    pub control_latency_ms: Vec<u64>,
    /// Per minute: max over slices of |thr_share - normalized rbg_share|.
    pub proportionality_residual: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("{0}")]
    Csv(#[from] CsvError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("run directory has no kpm/*.csv")]
    NoKpmData,
}

/// Empirical CDF at `CDF_POINTS` evenly spaced quantiles.
fn cdf(mut values: Vec<f64>) -> Vec<CdfPoint> {
    values.sort_by(|a, b| a.total_cmp(b));
    (1..=CDF_POINTS)
        .map(|i| {
            let q = i as f64 / CDF_POINTS as f64;
            let idx = ((q * values.len() as f64).ceil() as usize).max(1) - 1;
            CdfPoint {
                q,
                value: values[idx],
            }
        })
        .collect()
}

/// Reduce a run's KPM records to the summary. `latencies` are the control
/// round-trip samples the controller observed.
pub fn compute_summary(
    records: &[KpmRecord],
    duration_ms: u64,
    latencies: Vec<u64>,
) -> RunSummary {
    let n_minutes = duration_ms.div_ceil(MINUTE_MS) as usize;
    // per-window per-slice sums, keyed minute -> slice -> samples
    let mut thr: BTreeMap<u32, BTreeMap<u64, f64>> = BTreeMap::new(); // slice -> ts -> Σthr
    let mut share: BTreeMap<u32, BTreeMap<u64, f64>> = BTreeMap::new();
    let mut buf: BTreeMap<u32, BTreeMap<u64, f64>> = BTreeMap::new();
    for r in records {
        *thr.entry(r.slice_id)
            .or_default()
            .entry(r.ts_ms)
            .or_default() += r.dl_thr_mbps;
        *share
            .entry(r.slice_id)
            .or_default()
            .entry(r.ts_ms)
            .or_default() += r.rbg_share;
        *buf.entry(r.slice_id)
            .or_default()
            .entry(r.ts_ms)
            .or_default() += r.dl_buffer_bytes as f64;
    }
    let minute_of = |ts: u64| (ts.saturating_sub(1) / MINUTE_MS) as usize;
    let minute_mean = |by_ts: &BTreeMap<u64, f64>| -> Vec<f64> {
        let mut sums = vec![0.0; n_minutes];
        let mut counts = vec![0usize; n_minutes];
        for (ts, v) in by_ts {
            let m = minute_of(*ts);
            if m < n_minutes {
                sums[m] += v;
                counts[m] += 1;
            }
        }
        sums.iter()
            .zip(&counts)
            .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
            .collect()
    };

    let minute_thr_mbps: BTreeMap<u32, Vec<f64>> =
        thr.iter().map(|(s, m)| (*s, minute_mean(m))).collect();
    let minute_rbg_share: BTreeMap<u32, Vec<f64>> =
        share.iter().map(|(s, m)| (*s, minute_mean(m))).collect();

    let mut minute_thr_share: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut proportionality_residual = vec![0.0; n_minutes];
    for m in 0..n_minutes {
        let total_thr: f64 = minute_thr_mbps.values().map(|v| v[m]).sum();
        let total_share: f64 = minute_rbg_share.values().map(|v| v[m]).sum();
        for (slice, thr_v) in &minute_thr_mbps {
            let ts = if total_thr > 0.0 { thr_v[m] / total_thr } else { 0.0 };
            minute_thr_share.entry(*slice).or_default().push(ts);
            let rs = if total_share > 0.0 {
                minute_rbg_share[slice][m] / total_share
            } else {
                0.0
            };
            let resid = (ts - rs).abs();
            if resid > proportionality_residual[m] {
                proportionality_residual[m] = resid;
            }
        }
    }

    let buffer_cdf: BTreeMap<u32, Vec<CdfPoint>> = buf
        .into_iter()
        .map(|(s, by_ts)| (s, cdf(by_ts.into_values().collect())))
        .collect();

    RunSummary {
        duration_ms,
        minute_ms: MINUTE_MS,
        minute_thr_mbps,
        minute_rbg_share,
        minute_thr_share,
        buffer_cdf,
        control_latency_ms: latencies,
        proportionality_residual,
    }
}

/// Control-latency samples recorded in the controller's JSONL log.
pub fn latencies_from_log(log_text: &str) -> Vec<u64> {
    log_text
        .lines()
        .filter_map(|line| serde_json::from_str::<serde_json::Value>(line).ok())
        .filter(|v| v["event"] == "control_ack")
        .filter_map(|v| v["latency_ms"].as_u64())
        .collect()
}

/// Recompute a summary from a run directory and rewrite `summary.json`.
pub fn export_summary(run_dir: &Path) -> Result<RunSummary, SummaryError> {
    let kpm_dir = run_dir.join("kpm");
    let mut records = Vec::new();
    let mut names: Vec<_> = std::fs::read_dir(&kpm_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(SummaryError::NoKpmData);
    }
    for path in names {
        records.extend(parse_csv(&std::fs::read_to_string(path)?)?);
    }
    let duration_ms = records.iter().map(|r| r.ts_ms).max().unwrap_or(0);
    let latencies = std::fs::read_to_string(run_dir.join("ric.log.jsonl"))
        .map(|t| latencies_from_log(&t))
        .unwrap_or_default();
    let summary = compute_summary(&records, duration_ms, latencies);
    std::fs::write(
        run_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    Ok(summary)
}
