//! Replay recorded KPM CSVs as synthetic indication streams, for feeding
//! xApps or offline training without a live cell.

use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use crate::e2lite::{Indication, NodeId};
use crate::ransim::kpm::{parse_csv, CsvError};
use crate::ransim::KpmRecord;
use crate::xapp::{aggregate_windows, window_features, FeatureVector};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("{0}")]
    Csv(#[from] CsvError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("recorded node id invalid: {0}")]
    BadNodeId(String),
}

/// Replay speed: multiples of recorded time. `f64::INFINITY` (or any
/// non-positive value) disables pacing.
pub fn replay_dataset(
    paths: &[impl AsRef<Path>],
    speed: f64,
    sink: &mut dyn FnMut(Indication),
) -> Result<usize, ReplayError> {
    let mut count = 0;
    for path in paths {
        let records = parse_csv(&std::fs::read_to_string(path.as_ref())?)?;
        let mut seq = 0u64;
        let mut prev_ts: Option<u64> = None;
        for window in group_windows(&records) {
            let ts = window[0].ts_ms;
            if let Some(prev) = prev_ts {
                if speed.is_finite() && speed > 0.0 {
                    let dt = (ts - prev) as f64 / speed;
                    std::thread::sleep(Duration::from_micros((dt * 1000.0) as u64));
                }
            }
            prev_ts = Some(ts);
            seq += 1;
            let node_id = NodeId::parse(&window[0].bs_id)
                .map_err(|e| ReplayError::BadNodeId(e.to_string()))?;
            sink(Indication {
                txid: seq,
                sub_id: 0,
                node_id,
                ts_ms: ts,
                seq,
                records: window.to_vec(),
            });
            count += 1;
        }
    }
    Ok(count)
}

/// Split a time-ordered record stream into per-window runs, preserving the
/// recorded order within each window.
fn group_windows(records: &[KpmRecord]) -> Vec<&[KpmRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || records[i].ts_ms != records[start].ts_ms {
            out.push(&records[start..i]);
            start = i;
        }
    }
    out
}

/// Replay straight into the feature pipeline: one feature vector per window
/// once `w` windows of history exist. This is the offline path whose output
/// must match the live xApp's features bit for bit.
pub fn replay_into_features(
    paths: &[impl AsRef<Path>],
    w: usize,
    n_slices: usize,
) -> Result<Vec<FeatureVector>, ReplayError> {
    let mut windows = Vec::new();
    let mut features = Vec::new();
    replay_dataset(paths, f64::INFINITY, &mut |ind| {
        windows.extend(aggregate_windows(&ind.records));
        if let Ok(f) = window_features(&windows, w, n_slices) {
            features.push(f);
        }
    })?;
    Ok(features)
}
