//! xApp anatomy: an SM connector handling subscription/indication/control
//! traffic, and a data-driven logic unit (feature reducer + pluggable
//! model), plus the three concrete xApps: `sched`, `sched-slicing`, and
//! the slice prioritizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::e2lite::msg::*;
use crate::ransim::{ControlDirective, KpmRecord, RbgRange};

/// Immutable xApp registration record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XAppDescriptor {
    pub xapp_id: String,
    pub node_ids: Vec<String>,
    pub report_period_ms: u64,
    pub metric_set: Vec<String>,
    /// Windows averaged into one feature vector.
    pub feature_windows: usize,
    /// Report periods per decision.
    pub decision_epoch_periods: usize,
}

pub const DEFAULT_FEATURE_WINDOWS: usize = 4;
pub const DEFAULT_DECISION_EPOCH_PERIODS: usize = 4;

/// Fixed-length feature vector: per-slice windowed means of
/// (throughput Mbps, buffer bytes, TX TBs), ordered by slice id.
pub type FeatureVector = Vec<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("insufficient history: have {have} windows, need {need}")]
    InsufficientHistory { have: usize, need: usize },
}

/// Per-slice aggregates of one KPM window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowAggregate {
    pub ts_ms: u64,
    /// slice id -> (thr Mbps, buffer bytes, TX TBs), summed over UEs.
    pub slices: BTreeMap<u32, (f64, f64, f64)>,
}

/// Collapse raw records into per-window per-slice aggregates, ordered by
/// window timestamp.
pub fn aggregate_windows(records: &[KpmRecord]) -> Vec<WindowAggregate> {
    let mut by_ts: BTreeMap<u64, BTreeMap<u32, (f64, f64, f64)>> = BTreeMap::new();
    for r in records {
        let slot = by_ts
            .entry(r.ts_ms)
            .or_default()
            .entry(r.slice_id)
            .or_insert((0.0, 0.0, 0.0));
        slot.0 += r.dl_thr_mbps;
        slot.1 += r.dl_buffer_bytes as f64;
        slot.2 += r.dl_tx_tbs as f64;
    }
    by_ts
        .into_iter()
        .map(|(ts_ms, slices)| WindowAggregate { ts_ms, slices })
        .collect()
}

/// Deterministic feature reducer: per-slice means over the last `w`
/// complete windows. Length is 3 x n_slices, constant for a run.
pub fn window_features(
    windows: &[WindowAggregate],
    w: usize,
    n_slices: usize,
) -> Result<FeatureVector, FeatureError> {
    if windows.len() < w {
        return Err(FeatureError::InsufficientHistory {
            have: windows.len(),
            need: w,
        });
    }
    let tail = &windows[windows.len() - w..];
    let mut out = Vec::with_capacity(3 * n_slices);
    for slice in 0..n_slices as u32 {
        let mut thr = 0.0;
        let mut buf = 0.0;
        let mut tbs = 0.0;
        for win in tail {
            if let Some((t, b, k)) = win.slices.get(&slice) {
                thr += t;
                buf += b;
                tbs += k;
            }
        }
        out.push(thr / w as f64);
        out.push(buf / w as f64);
        out.push(tbs / w as f64);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Action space
// ---------------------------------------------------------------------------

/// One decision: per-slice scheduling policy codes and, for the joint
/// space, an index into the RBG partition catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub policies: Vec<u8>,
    pub partition: Option<usize>,
}

/// Enumerable action space shared by the xApps and the agents. Action ids
/// are positional: id = policy_combo_index * n_partitions + partition_index.
#[derive(Debug, Clone)]
pub struct ActionSpace {
    pub n_slices: usize,
    pub rbg_count: u16,
    /// Partition catalog; empty for the scheduling-only space (the current
    /// allocation is left untouched).
    pub partitions: Vec<BTreeMap<u32, RbgRange>>,
}

/// Partition catalog for a two-slice cell: contiguous splits at the even
/// RBG boundaries from 2 upward, plus the last split that still leaves the
/// second slice two RBGs. For 17 RBGs that is splits {2,4,...,14,15} -- 8
/// partitions, every slice at least 2 RBGs wide.
pub fn partition_catalog(rbg_count: u16, n_slices: usize) -> Vec<BTreeMap<u32, RbgRange>> {
    if n_slices != 2 || rbg_count < 4 {
        return Vec::new();
    }
    let mut splits: Vec<u16> = (2..=rbg_count - 2).step_by(2).collect();
    let last = rbg_count - 2;
    if *splits.last().unwrap() != last {
        splits.push(last);
    }
    splits
        .into_iter()
        .map(|s| {
            let mut m = BTreeMap::new();
            m.insert(0, RbgRange(0, s - 1));
            m.insert(1, RbgRange(s, rbg_count - 1));
            m
        })
        .collect()
}

impl ActionSpace {
    /// Scheduling-only space: {0,1,2}^n_slices, allocation untouched.
    pub fn sched_only(n_slices: usize, rbg_count: u16) -> Self {
        ActionSpace {
            n_slices,
            rbg_count,
            partitions: Vec::new(),
        }
    }

    /// Joint space: policies x partition catalog (two-slice cells).
    pub fn joint(n_slices: usize, rbg_count: u16) -> Self {
        ActionSpace {
            n_slices,
            rbg_count,
            partitions: partition_catalog(rbg_count, n_slices),
        }
    }

    pub fn n_policy_combos(&self) -> usize {
        3usize.pow(self.n_slices as u32)
    }

    pub fn len(&self) -> usize {
        self.n_policy_combos() * self.partitions.len().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn decode(&self, id: usize) -> Action {
        assert!(id < self.len());
        let n_parts = self.partitions.len().max(1);
        let combo = id / n_parts;
        let part = id % n_parts;
        let mut policies = vec![0u8; self.n_slices];
        let mut c = combo;
        // lowest slice id varies slowest so ties resolve toward low codes
        for s in (0..self.n_slices).rev() {
            policies[s] = (c % 3) as u8;
            c /= 3;
        }
        Action {
            policies,
            partition: if self.partitions.is_empty() {
                None
            } else {
                Some(part)
            },
        }
    }

    /// Every action decodes to a directive that passes validation.
    pub fn directive(&self, id: usize, node_id: &str) -> ControlDirective {
        let action = self.decode(id);
        ControlDirective {
            node_id: node_id.to_string(),
            slice_allocation: action.partition.map(|p| self.partitions[p].clone()),
            slice_scheduling_policy: Some(action.policies),
        }
    }
}

// ---------------------------------------------------------------------------
// Concrete xApps
// ---------------------------------------------------------------------------

/// Pluggable decision policy: maps features to an action id, or None for
/// a deliberate no-op epoch.
pub trait DecisionModel {
    fn decide(&mut self, features: &FeatureVector) -> Option<usize>;
    /// Control acknowledgement feedback; default ignores it.
    fn notify_ack(&mut self, _applied: bool, _reason: Option<&str>) {}
}

/// Constant-action model, useful as a plugin and in tests.
pub struct ConstantModel(pub Option<usize>);
impl DecisionModel for ConstantModel {
    fn decide(&mut self, _features: &FeatureVector) -> Option<usize> {
        self.0
    }
}

/// `sched` xApp decision: scheduling policies only.
pub fn sched_xapp(
    model: &mut dyn DecisionModel,
    features: &FeatureVector,
    space: &ActionSpace,
    node_id: &str,
) -> Option<ControlDirective> {
    debug_assert!(space.partitions.is_empty());
    model
        .decide(features)
        .map(|id| space.directive(id, node_id))
}

/// `sched-slicing` xApp decision: policies plus RBG partition. With one
/// slice the partition is fixed and this reduces to `sched_xapp`.
pub fn sched_slicing_xapp(
    model: &mut dyn DecisionModel,
    features: &FeatureVector,
    space: &ActionSpace,
    node_id: &str,
) -> Option<ControlDirective> {
    model
        .decide(features)
        .map(|id| space.directive(id, node_id))
}

#[derive(Debug, Error, PartialEq)]
pub enum PrioritizeError {
    #[error("boost share {share} outside ({min}, 0.9]")]
    InvalidShare { share: f64, min: f64 },
    #[error("unknown target slice {0}")]
    UnknownSlice(u32),
}

/// Prioritization xApp: grant the target slice `ceil(boost_share x
/// rbg_count)` RBGs, split the rest evenly with the remainder going to the
/// lowest slice id. Ranges are contiguous in slice-id order.
pub fn prioritize_xapp(
    target_slice: u32,
    boost_share: f64,
    n_slices: usize,
    rbg_count: u16,
    node_id: &str,
) -> Result<ControlDirective, PrioritizeError> {
    if target_slice as usize >= n_slices {
        return Err(PrioritizeError::UnknownSlice(target_slice));
    }
    let min = 1.0 / n_slices as f64;
    if !(boost_share > min && boost_share <= 0.9) {
        return Err(PrioritizeError::InvalidShare {
            share: boost_share,
            min,
        });
    }
    let target = (boost_share * rbg_count as f64).ceil() as u16;
    let rest = rbg_count - target;
    let others = (n_slices - 1) as u16;
    let base = rest / others;
    let mut remainder = rest % others;
    let mut counts = vec![0u16; n_slices];
    counts[target_slice as usize] = target;
    for (s, c) in counts.iter_mut().enumerate() {
        if s as u32 != target_slice {
            *c = base + if remainder > 0 { 1 } else { 0 };
            remainder = remainder.saturating_sub(1);
        }
    }
    let mut alloc = BTreeMap::new();
    let mut first = 0u16;
    for (s, c) in counts.iter().enumerate() {
        alloc.insert(s as u32, RbgRange(first, first + c - 1));
        first += c;
    }
    Ok(ControlDirective {
        node_id: node_id.to_string(),
        slice_allocation: Some(alloc),
        slice_scheduling_policy: None,
    })
}

// ---------------------------------------------------------------------------
// SM connector runtime
// ---------------------------------------------------------------------------

/// One row of the xApp decision log CSV.
#[derive(Debug, Clone)]
pub struct DecisionLogRow {
    pub epoch: u64,
    pub ts_ms: u64,
    pub features: FeatureVector,
    pub action_id: Option<usize>,
    pub ack_status: String,
}

pub fn decision_log_header(n_features: usize) -> String {
    let mut h = String::from("epoch,ts_ms");
    for i in 0..n_features {
        h.push_str(&format!(",f{i}"));
    }
    h.push_str(",action_id,ack_status");
    h
}

pub fn decision_log_row(row: &DecisionLogRow) -> String {
    let mut s = format!("{},{}", row.epoch, row.ts_ms);
    for f in &row.features {
        s.push_str(&format!(",{f:.6}"));
    }
    match row.action_id {
        Some(a) => s.push_str(&format!(",{a}")),
        None => s.push_str(",-"),
    }
    s.push(',');
    s.push_str(&row.ack_status);
    s
}

/// Event-driven SM connector. The harness (or a transport thread) feeds it
/// indications and acks; it emits subscription and control requests.
pub struct XappRuntime {
    pub descriptor: XAppDescriptor,
    space: ActionSpace,
    model: Box<dyn DecisionModel>,
    windows: Vec<WindowAggregate>,
    periods_since_decision: usize,
    epoch: u64,
    next_txid: u64,
    sub_attempts: u32,
    pub subscribed: bool,
    pub terminated: Option<String>,
    pub log: Vec<DecisionLogRow>,
    pending_row: Option<DecisionLogRow>,
}

pub const SUBSCRIBE_MAX_ATTEMPTS: u32 = 3;

impl XappRuntime {
    pub fn new(descriptor: XAppDescriptor, space: ActionSpace, model: Box<dyn DecisionModel>) -> Self {
        XappRuntime {
            descriptor,
            space,
            model,
            windows: Vec::new(),
            periods_since_decision: 0,
            epoch: 0,
            next_txid: 1,
            sub_attempts: 0,
            subscribed: false,
            terminated: None,
            log: Vec::new(),
            pending_row: None,
        }
    }

    fn txid(&mut self) -> u64 {
        let t = self.next_txid;
        self.next_txid += 1;
        t
    }

    pub fn n_slices(&self) -> usize {
        self.space.n_slices
    }

    /// Subscription request for the (single) target node.
    pub fn subscribe_request(&mut self) -> E2Message {
        self.sub_attempts += 1;
        E2Message::SubscriptionRequest(SubscriptionRequest {
            txid: self.txid(),
            node_id: NodeId::parse(&self.descriptor.node_ids[0]).expect("valid node id"),
            xapp_id: self.descriptor.xapp_id.clone(),
            report_period_ms: self.descriptor.report_period_ms,
            metric_set: self.descriptor.metric_set.clone(),
            sub_id: None,
        })
    }

    /// Handle one message from the RIC; may emit follow-up requests.
    pub fn on_msg(&mut self, msg: &E2Message, now_ms: u64) -> Vec<E2Message> {
        match msg {
            E2Message::SubscriptionResponse(resp) => {
                match resp.status {
                    Status::Accepted => self.subscribed = true,
                    Status::Rejected => {
                        if self.sub_attempts < SUBSCRIBE_MAX_ATTEMPTS {
                            return vec![self.subscribe_request()];
                        }
                        self.terminated = Some(format!(
                            "subscription failed after {} attempts: {}",
                            self.sub_attempts,
                            resp.reason.clone().unwrap_or_default()
                        ));
                    }
                }
                vec![]
            }
            E2Message::Indication(ind) => {
                self.windows.extend(aggregate_windows(&ind.records));
                self.periods_since_decision += 1;
                if self.periods_since_decision >= self.descriptor.decision_epoch_periods {
                    self.periods_since_decision = 0;
                    return self.decide(now_ms);
                }
                vec![]
            }
            E2Message::ControlAck(ack) => {
                let applied = ack.status == AckStatus::Applied;
                self.model.notify_ack(applied, ack.reason.as_deref());
                if let Some(mut row) = self.pending_row.take() {
                    row.ack_status = match ack.status {
                        AckStatus::Applied => "applied".into(),
                        AckStatus::Rejected => format!(
                            "rejected:{}",
                            ack.reason.clone().unwrap_or_default()
                        ),
                    };
                    self.log.push(row);
                }
                vec![]
            }
            _ => vec![],
        }
    }

    fn decide(&mut self, now_ms: u64) -> Vec<E2Message> {
        self.epoch += 1;
        let features = match window_features(
            &self.windows,
            self.descriptor.feature_windows,
            self.space.n_slices,
        ) {
            Ok(f) => f,
            Err(_) => return vec![],
        };
        let action_id = self.model.decide(&features);
        let row = DecisionLogRow {
            epoch: self.epoch,
            ts_ms: now_ms,
            features,
            action_id,
            ack_status: "noop".into(),
        };
        match action_id {
            Some(id) => {
                let directive = self.space.directive(id, &self.descriptor.node_ids[0]);
                self.pending_row = Some(row);
                vec![E2Message::ControlRequest(ControlRequest {
                    txid: self.txid(),
                    directive,
                })]
            }
            None => {
                self.log.push(row);
                vec![]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(slice: u32, ue: u32, ts: u64, thr: f64, buf: u64, tbs: u64) -> KpmRecord {
        KpmRecord {
            ts_ms: ts,
            bs_id: "gnb:001-001-00000001".into(),
            slice_id: slice,
            ue_id: ue,
            dl_tx_bytes: 0,
            dl_tx_tbs: tbs,
            dl_buffer_bytes: buf,
            dl_thr_mbps: thr,
            rbg_share: 0.0,
            sched_policy: 0,
        }
    }

    #[test]
    fn window_features_definitional() {
        // 2 slices, W=1: [thr_a, buf_a, tbs_a, thr_b, buf_b, tbs_b]
        let records = vec![
            rec(0, 1, 100, 10.0, 0, 100),
            rec(1, 2, 100, 2.0, 5000, 20),
        ];
        let windows = aggregate_windows(&records);
        let f = window_features(&windows, 1, 2).unwrap();
        assert_eq!(f, vec![10.0, 0.0, 100.0, 2.0, 5000.0, 20.0]);
    }

    #[test]
    fn zero_traffic_zero_vector() {
        let records = vec![rec(0, 1, 100, 0.0, 0, 0), rec(1, 2, 100, 0.0, 0, 0)];
        let windows = aggregate_windows(&records);
        assert_eq!(window_features(&windows, 1, 2).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn insufficient_history() {
        let mut records = Vec::new();
        for w in 1..=3u64 {
            records.push(rec(0, 1, w * 100, 1.0, 0, 1));
        }
        let windows = aggregate_windows(&records);
        assert_eq!(
            window_features(&windows, 4, 1),
            Err(FeatureError::InsufficientHistory { have: 3, need: 4 })
        );
    }

    #[test]
    fn catalog_17_rbgs_two_slices() {
        let cat = partition_catalog(17, 2);
        assert_eq!(cat.len(), 8);
        for part in &cat {
            // contiguous, disjoint, every slice at least 2 RBGs
            assert_eq!(part[&0].first(), 0);
            assert_eq!(part[&1].last(), 16);
            assert_eq!(part[&0].last() + 1, part[&1].first());
            assert!(part[&0].len() >= 2 && part[&1].len() >= 2);
        }
        // even 8/9 split is present
        assert!(cat.iter().any(|p| p[&0] == RbgRange(0, 7)));
    }

    #[test]
    fn every_action_decodes_to_valid_directive() {
        use crate::ransim::{parse_radio_config, Cell};
        let cfg = parse_radio_config(
            r#"{"slice-allocation": {"0":[0,7],"1":[8,16]},
                "slice-scheduling-policy": [0,0],
                "slice-users": {"0":[0],"1":[1]},
                "ues": [{"id":0,"spectral-efficiency":6000,"saturated":true},
                        {"id":1,"spectral-efficiency":6000,"saturated":true}]}"#,
        )
        .unwrap();
        let cell = Cell::new(cfg, "gnb:001-001-00000001");
        for space in [ActionSpace::sched_only(2, 17), ActionSpace::joint(2, 17)] {
            for id in 0..space.len() {
                let d = space.directive(id, "gnb:001-001-00000001");
                cell.validate_control(&d).unwrap();
            }
        }
    }

    #[test]
    fn joint_space_size() {
        assert_eq!(ActionSpace::sched_only(2, 17).len(), 9);
        assert_eq!(ActionSpace::joint(2, 17).len(), 72);
        // 1-slice degenerate case: partition fixed, reduces to sched-only
        assert_eq!(ActionSpace::joint(1, 17).len(), 3);
        assert!(ActionSpace::joint(1, 17).partitions.is_empty());
    }

    #[test]
    fn prioritize_arithmetic() {
        // 3 slices, 17 RBGs, boost slice 0 to 0.6: 11 / 3 / 3.
        let d = prioritize_xapp(0, 0.6, 3, 17, "gnb:001-001-00000001").unwrap();
        let alloc = d.slice_allocation.unwrap();
        assert_eq!(alloc[&0], RbgRange(0, 10));
        assert_eq!(alloc[&1], RbgRange(11, 13));
        assert_eq!(alloc[&2], RbgRange(14, 16));
    }

    #[test]
    fn prioritize_share_bounds() {
        assert!(matches!(
            prioritize_xapp(0, 1.0 / 3.0, 3, 17, "gnb:001-001-00000001"),
            Err(PrioritizeError::InvalidShare { .. })
        ));
        assert!(matches!(
            prioritize_xapp(0, 0.95, 3, 17, "gnb:001-001-00000001"),
            Err(PrioritizeError::InvalidShare { .. })
        ));
        assert!(matches!(
            prioritize_xapp(5, 0.5, 3, 17, "gnb:001-001-00000001"),
            Err(PrioritizeError::UnknownSlice(5))
        ));
    }

    #[test]
    fn constant_model_constant_action() {
        let space = ActionSpace::sched_only(2, 17);
        let mut m = ConstantModel(Some(4));
        for _ in 0..5 {
            let d = sched_xapp(&mut m, &vec![0.0; 6], &space, "gnb:001-001-00000001").unwrap();
            assert_eq!(d.slice_scheduling_policy, Some(vec![1, 1]));
        }
        let mut noop = ConstantModel(None);
        assert!(sched_xapp(&mut noop, &vec![0.0; 6], &space, "gnb:001-001-00000001").is_none());
    }
}
