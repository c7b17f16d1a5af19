//! Per-TTI cell state: buffers, slice table, scheduling, KPM windows.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{
    check_ranges_disjoint, ConfigError, RbgRange, ScenarioConfig, SchedPolicy, TrafficModel,
};
use super::sched::{allocate_slice, SchedUe, PF_ALPHA};

/// Buffer pin for saturated UEs, in bits (125 MB of queued data).
pub const SATURATED_BUFFER_BITS: u64 = 1_000_000_000;

/// One reporting-window row of per-UE metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpmRecord {
    pub ts_ms: u64,
    pub bs_id: String,
    pub slice_id: u32,
    pub ue_id: u32,
    pub dl_tx_bytes: u64,
    pub dl_tx_tbs: u64,
    pub dl_buffer_bytes: u64,
    pub dl_thr_mbps: f64,
    pub rbg_share: f64,
    pub sched_policy: u8,
}

/// Run-time reconfiguration of slice allocations and/or policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDirective {
    pub node_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_allocation: Option<BTreeMap<u32, RbgRange>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_scheduling_policy: Option<Vec<u8>>,
}

impl ControlDirective {
    pub fn has_payload(&self) -> bool {
        self.slice_allocation.is_some() || self.slice_scheduling_policy.is_some()
    }
}

/// Active slice configuration derived from the config plus applied controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceTable {
    pub ranges: BTreeMap<u32, RbgRange>,
    pub policies: Vec<SchedPolicy>,
}

#[derive(Debug, Clone)]
struct UeState {
    id: u32,
    slice: u32,
    base_eff: f64,
    fade: f64,
    traffic: TrafficModel,
    buffer_bits: u64,
    arrival_credit: f64,
    pf_avg: f64,
    cum_tx_bits: u64,
    cum_tbs: u64,
    offered_bits: u64,
    // window accumulators
    win_tx_bits: u64,
    win_tbs: u64,
    win_rbgs: u64,
}

impl UeState {
    fn efficiency(&self) -> f64 {
        self.base_eff * self.fade
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlLogEntry {
    pub effective_tti: u64,
    pub accepted: bool,
    pub detail: String,
}

/// One simulated sliced base station.
#[derive(Debug, Clone)]
pub struct Cell {
    pub bs_id: String,
    cfg: ScenarioConfig,
    table: SliceTable,
    pending_table: Option<SliceTable>,
    tti: u64,
    win_ttis: u64,
    ues: Vec<UeState>,
    rr_ptr: Vec<usize>,
    rng: ChaCha8Rng,
    control_log: Vec<ControlLogEntry>,
}

impl Cell {
    pub fn new(cfg: ScenarioConfig, bs_id: &str) -> Self {
        let n_slices = cfg.n_slices();
        let mut ranges = BTreeMap::new();
        let mut policies = Vec::new();
        for s in 0..n_slices as u32 {
            if let Some(r) = cfg.slice_range(s) {
                ranges.insert(s, r);
            }
            policies.push(
                SchedPolicy::from_code(cfg.slice_scheduling_policy[s as usize] as i64).unwrap(),
            );
        }
        let mut ues = Vec::new();
        for s in 0..n_slices as u32 {
            for id in cfg.slice_ue_ids(s) {
                let spec = cfg.ues.iter().find(|u| u.id == id).unwrap();
                ues.push(UeState {
                    id,
                    slice: s,
                    base_eff: spec.efficiency_bits_per_rbg,
                    fade: 1.0,
                    traffic: spec.traffic,
                    buffer_bits: 0,
                    arrival_credit: 0.0,
                    pf_avg: 0.0,
                    cum_tx_bits: 0,
                    cum_tbs: 0,
                    offered_bits: 0,
                    win_tx_bits: 0,
                    win_tbs: 0,
                    win_rbgs: 0,
                });
            }
        }
        ues.sort_by_key(|u| u.id);
        Cell {
            bs_id: bs_id.to_string(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            table: SliceTable { ranges, policies },
            pending_table: None,
            tti: 0,
            win_ttis: 0,
            ues,
            rr_ptr: vec![0; n_slices],
            control_log: Vec::new(),
            cfg,
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }
    pub fn tti(&self) -> u64 {
        self.tti
    }
    pub fn table(&self) -> &SliceTable {
        &self.table
    }
    pub fn control_log(&self) -> &[ControlLogEntry] {
        &self.control_log
    }
    pub fn n_slices(&self) -> usize {
        self.table.policies.len()
    }

    pub fn buffer_bits(&self, ue_id: u32) -> Option<u64> {
        self.ues.iter().find(|u| u.id == ue_id).map(|u| u.buffer_bits)
    }
    pub fn cum_tx_bits(&self, ue_id: u32) -> Option<u64> {
        self.ues.iter().find(|u| u.id == ue_id).map(|u| u.cum_tx_bits)
    }
    pub fn offered_bits(&self, ue_id: u32) -> Option<u64> {
        self.ues.iter().find(|u| u.id == ue_id).map(|u| u.offered_bits)
    }

    /// Validate a directive against the current table without applying it.
    pub fn validate_control(&self, d: &ControlDirective) -> Result<SliceTable, ConfigError> {
        if !d.has_payload() {
            return Err(ConfigError::Invalid {
                key: "directive".into(),
                reason: "no payload".into(),
            });
        }
        let mut next = self.table.clone();
        if let Some(alloc) = &d.slice_allocation {
            for (slice, range) in alloc {
                if *slice as usize >= self.n_slices() {
                    return Err(ConfigError::Invalid {
                        key: "slice-allocation".into(),
                        reason: format!("unknown slice {slice}"),
                    });
                }
                next.ranges.insert(*slice, *range);
            }
            check_ranges_disjoint(&next.ranges, self.cfg.rbg_count)?;
        }
        if let Some(policies) = &d.slice_scheduling_policy {
            if policies.len() != self.n_slices() {
                return Err(ConfigError::Invalid {
                    key: "slice-scheduling-policy".into(),
                    reason: format!(
                        "{} codes given for {} slices",
                        policies.len(),
                        self.n_slices()
                    ),
                });
            }
            next.policies = policies
                .iter()
                .enumerate()
                .map(|(s, c)| {
                    SchedPolicy::from_code(*c as i64).ok_or(ConfigError::UnknownPolicyCode {
                        slice: s as u32,
                        code: *c as i64,
                    })
                })
                .collect::<Result<_, _>>()?;
        }
        Ok(next)
    }

    /// Stage a directive; it takes effect at the next TTI boundary.
    /// A rejected directive leaves the cell unchanged.
    pub fn apply_control(&mut self, d: &ControlDirective) -> Result<(), ConfigError> {
        match self.validate_control(d) {
            Ok(table) => {
                self.pending_table = Some(table);
                self.control_log.push(ControlLogEntry {
                    effective_tti: self.tti + 1,
                    accepted: true,
                    detail: serde_json::to_string(d).unwrap(),
                });
                Ok(())
            }
            Err(e) => {
                self.control_log.push(ControlLogEntry {
                    effective_tti: self.tti,
                    accepted: false,
                    detail: e.to_string(),
                });
                Err(e)
            }
        }
    }

    /// Advance one TTI: arrivals, per-slice allocation, transmission,
    /// PF update, channel advance. Returns the TTI's allocation map.
    pub fn step_tti(&mut self) -> Vec<Option<u32>> {
        if let Some(t) = self.pending_table.take() {
            self.table = t;
        }

        // 1. traffic arrivals
        let tti_ms = self.cfg.tti_ms as f64;
        for ue in &mut self.ues {
            match ue.traffic {
                TrafficModel::Saturated { .. } => {
                    let topup = SATURATED_BUFFER_BITS.saturating_sub(ue.buffer_bits);
                    ue.buffer_bits = SATURATED_BUFFER_BITS;
                    ue.offered_bits = ue.offered_bits.saturating_add(topup);
                }
                TrafficModel::Cbr { rate_bps } => {
                    ue.arrival_credit += rate_bps * tti_ms / 1000.0;
                    let whole = ue.arrival_credit.floor() as u64;
                    ue.arrival_credit -= whole as f64;
                    ue.buffer_bits += whole;
                    ue.offered_bits += whole;
                }
            }
        }

        // 2. per-slice allocation
        let mut alloc: Vec<Option<u32>> = vec![None; self.cfg.rbg_count as usize];
        let mut grants: BTreeMap<u32, u16> = BTreeMap::new();
        for (slice, range) in self.table.ranges.clone() {
            let policy = self.table.policies[slice as usize];
            let mut views: Vec<SchedUe> = self
                .ues
                .iter()
                .filter(|u| u.slice == slice)
                .map(|u| SchedUe {
                    ue_id: u.id,
                    efficiency: u.efficiency(),
                    remaining_bits: u.buffer_bits,
                    pf_avg: u.pf_avg,
                    granted: 0,
                })
                .collect();
            allocate_slice(
                policy,
                range,
                &mut views,
                &mut self.rr_ptr[slice as usize],
                &mut alloc,
            );
            for v in views {
                if v.granted > 0 {
                    grants.insert(v.ue_id, v.granted);
                }
            }
        }

        // 3. transmission, capped at buffer content
        for ue in &mut self.ues {
            let granted = grants.get(&ue.id).copied().unwrap_or(0);
            let cap_bits = (granted as f64 * ue.efficiency()).floor() as u64;
            let tx = cap_bits.min(ue.buffer_bits);
            ue.buffer_bits -= tx;
            ue.cum_tx_bits += tx;
            ue.win_tx_bits += tx;
            if granted > 0 {
                ue.cum_tbs += 1;
                ue.win_tbs += 1;
            }
            ue.win_rbgs += granted as u64;
            // 4. PF average update
            ue.pf_avg = (1.0 - PF_ALPHA) * ue.pf_avg + PF_ALPHA * tx as f64;
        }

        // 5. channel process
        if let Some(fading) = self.cfg.fading {
            for ue in &mut self.ues {
                let noise: f64 = StandardNormal.sample(&mut self.rng);
                ue.fade = 1.0 + fading.coefficient * (ue.fade - 1.0) + fading.sigma * noise;
                ue.fade = ue.fade.clamp(0.1, 10.0);
            }
        }

        self.tti += 1;
        self.win_ttis += 1;
        alloc
    }

    /// Close the current KPM window: one record per UE (ascending UE id),
    /// window accumulators reset. `ts_ms` stamps the window end.
    pub fn emit_kpm_window(&mut self, ts_ms: u64) -> Vec<KpmRecord> {
        let window_us = (self.win_ttis * self.cfg.tti_ms * 1000).max(1);
        let rbg_ttis = (self.cfg.rbg_count as u64 * self.win_ttis).max(1);
        let mut records = Vec::with_capacity(self.ues.len());
        for ue in &mut self.ues {
            let tx_bytes = ue.win_tx_bits / 8;
            records.push(KpmRecord {
                ts_ms,
                bs_id: self.bs_id.clone(),
                slice_id: ue.slice,
                ue_id: ue.id,
                dl_tx_bytes: tx_bytes,
                dl_tx_tbs: ue.win_tbs,
                dl_buffer_bytes: ue.buffer_bits / 8,
                dl_thr_mbps: tx_bytes as f64 * 8.0 / window_us as f64,
                rbg_share: ue.win_rbgs as f64 / rbg_ttis as f64,
                sched_policy: self.table.policies[ue.slice as usize].code(),
            });
            ue.win_tx_bits = 0;
            ue.win_tbs = 0;
            ue.win_rbgs = 0;
        }
        self.win_ttis = 0;
        records
    }
}
