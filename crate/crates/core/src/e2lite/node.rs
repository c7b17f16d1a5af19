//! Base-station-side E2 endpoint: setup handshake, subscription handling,
//! periodic indications, and control application.

use std::collections::{BTreeMap, VecDeque};

use super::msg::*;
use crate::ransim::{Cell, ControlDirective, KpmRecord};

/// Applies validated control directives; implemented by the simulator cell.
pub trait ControlApplier {
    fn apply_control(&mut self, d: &ControlDirective) -> Result<(), String>;
}

impl ControlApplier for Cell {
    fn apply_control(&mut self, d: &ControlDirective) -> Result<(), String> {
        Cell::apply_control(self, d).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    Idle,
    SetupSent,
    Established,
}

#[derive(Debug, Clone)]
struct SubState {
    period_ms: u64,
    next_due_ms: u64,
    last_sent_ts: u64,
    seq: u64,
}

/// Windows kept for late subscribers; old windows age out.
const WINDOW_BUF_CAP: usize = 64;

#[derive(Debug)]
pub struct NodeFsm {
    node_id: NodeId,
    kpm_window_ms: u64,
    rbg_count: u16,
    n_slices: u32,
    state: NodeState,
    next_txid: u64,
    subs: BTreeMap<u64, SubState>,
    windows: VecDeque<(u64, Vec<KpmRecord>)>,
}

impl NodeFsm {
    pub fn new(node_id: NodeId, kpm_window_ms: u64, rbg_count: u16, n_slices: u32) -> Self {
        NodeFsm {
            node_id,
            kpm_window_ms,
            rbg_count,
            n_slices,
            state: NodeState::Idle,
            next_txid: 1,
            subs: BTreeMap::new(),
            windows: VecDeque::new(),
        }
    }

    pub fn state(&self) -> NodeState {
        self.state
    }
    pub fn node_id(&self) -> &NodeId {
        &self.node_id
    }

    fn txid(&mut self) -> u64 {
        let t = self.next_txid;
        self.next_txid += 1;
        t
    }

    /// Transport connected: send the setup request.
    pub fn on_connected(&mut self) -> Vec<E2Message> {
        match self.state {
            NodeState::Idle => {
                self.state = NodeState::SetupSent;
                vec![E2Message::SetupRequest(SetupRequest {
                    txid: self.txid(),
                    node_id: self.node_id.clone(),
                    kpm_window_ms: self.kpm_window_ms,
                    rbg_count: self.rbg_count,
                    n_slices: self.n_slices,
                })]
            }
            _ => vec![E2Message::protocol_error(
                None,
                "AlreadyConnected",
                "connected event outside Idle",
            )],
        }
    }

    /// A KPM window closed locally; buffer it for the indication timers.
    pub fn on_window(&mut self, ts_ms: u64, records: Vec<KpmRecord>) {
        self.windows.push_back((ts_ms, records));
        while self.windows.len() > WINDOW_BUF_CAP {
            self.windows.pop_front();
        }
    }

    /// Handle one inbound message.
    pub fn on_msg(
        &mut self,
        msg: &E2Message,
        applier: &mut dyn ControlApplier,
        now_ms: u64,
    ) -> Vec<E2Message> {
        match (self.state, msg) {
            (NodeState::SetupSent, E2Message::SetupResponse(r)) => {
                match r.status {
                    Status::Accepted => self.state = NodeState::Established,
                    Status::Rejected => self.state = NodeState::Idle,
                }
                vec![]
            }
            (NodeState::Established, E2Message::SubscriptionRequest(req)) => {
                let Some(sub_id) = req.sub_id else {
                    return vec![E2Message::protocol_error(
                        Some(req.txid),
                        "MissingSubId",
                        "subscription forwarded without sub_id",
                    )];
                };
                if req.report_period_ms < self.kpm_window_ms || req.report_period_ms == 0 {
                    return vec![E2Message::SubscriptionResponse(SubscriptionResponse {
                        txid: req.txid,
                        status: Status::Rejected,
                        sub_id: Some(sub_id),
                        reason: Some("PeriodTooSmall".into()),
                    })];
                }
                self.subs.insert(
                    sub_id,
                    SubState {
                        period_ms: req.report_period_ms,
                        next_due_ms: now_ms + req.report_period_ms,
                        last_sent_ts: now_ms,
                        seq: 0,
                    },
                );
                vec![E2Message::SubscriptionResponse(SubscriptionResponse {
                    txid: req.txid,
                    status: Status::Accepted,
                    sub_id: Some(sub_id),
                    reason: None,
                })]
            }
            (NodeState::Established, E2Message::ControlRequest(req)) => {
                let ack = match applier.apply_control(&req.directive) {
                    Ok(()) => ControlAck {
                        txid: req.txid,
                        status: AckStatus::Applied,
                        reason: None,
                    },
                    Err(reason) => ControlAck {
                        txid: req.txid,
                        status: AckStatus::Rejected,
                        reason: Some(reason),
                    },
                };
                vec![E2Message::ControlAck(ack)]
            }
            // A peer-reported error never changes our state.
            (_, E2Message::ProtocolError(_)) => vec![],
            (_, m) => vec![E2Message::protocol_error(
                m.transaction_id(),
                "UnexpectedMessage",
                format!("msg_type 0x{:02x} in {:?}", m.msg_type(), self.state),
            )],
        }
    }

    /// Fire due indication timers. Each indication carries the windows that
    /// closed since the subscription's previous report.
    pub fn poll_timers(&mut self, now_ms: u64) -> Vec<E2Message> {
        if self.state != NodeState::Established {
            return vec![];
        }
        let mut out = Vec::new();
        let due: Vec<u64> = self
            .subs
            .iter()
            .filter(|(_, s)| now_ms >= s.next_due_ms)
            .map(|(id, _)| *id)
            .collect();
        for sub_id in due {
            let node_id = self.node_id.clone();
            let txid = self.txid();
            let sub = self.subs.get_mut(&sub_id).unwrap();
            let records: Vec<KpmRecord> = self
                .windows
                .iter()
                .filter(|(ts, _)| *ts > sub.last_sent_ts && *ts <= now_ms)
                .flat_map(|(_, r)| r.iter().cloned())
                .collect();
            sub.last_sent_ts = now_ms;
            sub.seq += 1;
            sub.next_due_ms += sub.period_ms;
            out.push(E2Message::Indication(Indication {
                txid,
                sub_id,
                node_id,
                ts_ms: now_ms,
                seq: sub.seq,
                records,
            }));
        }
        out
    }
}
