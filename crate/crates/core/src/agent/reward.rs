//! Reward: weighted sum of broadband transmitted TBs (maximize) and
//! time-sensitive buffer occupancy (minimize), both min-clipped against
//! reference constants so the reward stays in [-1, 1].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ransim::KpmRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_thr: f64,
    pub w_buf: f64,
    /// Broadband TBs per decision epoch that saturate the throughput term.
    pub tb_ref: f64,
    /// Time-sensitive buffer bytes that saturate the latency term.
    pub buf_ref: f64,
}

impl RewardWeights {
    pub fn new(w_thr: f64, w_buf: f64, tb_ref: f64, buf_ref: f64) -> Result<Self, RewardError> {
        if (w_thr + w_buf - 1.0).abs() > 1e-9 || w_thr < 0.0 || w_buf < 0.0 {
            return Err(RewardError::BadWeights);
        }
        if tb_ref <= 0.0 || buf_ref <= 0.0 {
            return Err(RewardError::BadWeights);
        }
        Ok(RewardWeights {
            w_thr,
            w_buf,
            tb_ref,
            buf_ref,
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("slice {0} missing from the epoch's records")]
    MissingSlice(u32),
    #[error("weights must be non-negative, sum to 1, with positive references")]
    BadWeights,
}

/// Reward over one decision epoch.
///
/// `records` are the KPM rows of the epoch's windows. The broadband term
/// totals TX TBs; the latency proxy averages the time-sensitive slice's
/// end-of-window buffer bytes across windows.
pub fn compute_reward(
    records: &[KpmRecord],
    weights: &RewardWeights,
    broadband_slice: u32,
    time_sensitive_slice: u32,
) -> Result<f64, RewardError> {
    let mut tbs = 0u64;
    let mut seen_bb = false;
    for r in records.iter().filter(|r| r.slice_id == broadband_slice) {
        seen_bb = true;
        tbs += r.dl_tx_tbs;
    }
    if !seen_bb {
        return Err(RewardError::MissingSlice(broadband_slice));
    }

    let mut windows = std::collections::BTreeMap::<u64, u64>::new();
    let mut seen_ts = false;
    for r in records.iter().filter(|r| r.slice_id == time_sensitive_slice) {
        seen_ts = true;
        *windows.entry(r.ts_ms).or_insert(0) += r.dl_buffer_bytes;
    }
    if !seen_ts {
        return Err(RewardError::MissingSlice(time_sensitive_slice));
    }
    let buf = windows.values().sum::<u64>() as f64 / windows.len() as f64;

    let thr_term = (tbs as f64 / weights.tb_ref).min(1.0);
    let buf_term = (buf / weights.buf_ref).min(1.0);
    Ok(weights.w_thr * thr_term - weights.w_buf * buf_term)
}
