//! Near-RT RIC service: E2 termination, node registry, subscription
//! manager, and indication/control router.
//!
//! One `RicCore` serves all connections. Per-connection protocol state is
//! the `conns` map; cross-connection effects (registry, routing table) live
//! here and nowhere else. Events append to a JSONL log, the analog of
//! tailing the termination container's logs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::e2lite::msg::*;

#[derive(Debug, Clone, Serialize)]
pub struct NodeRecord {
    pub node_id: NodeId,
    pub conn_id: u64,
    pub connected_at: u64,
    pub last_indication_at: Option<u64>,
    pub subscriptions: Vec<u64>,
    pub kpm_window_ms: u64,
    pub rbg_count: u16,
    pub n_slices: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteEntry {
    pub node_id: NodeId,
    pub xapp_id: String,
    pub report_period_ms: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum RicError {
    #[error("DuplicateNode: {0}")]
    DuplicateNode(NodeId),
    #[error("UnknownNode: {0}")]
    UnknownNode(String),
    #[error("UnknownXapp: {0}")]
    UnknownXapp(String),
    #[error("PeriodTooSmall: {period} ms < node window {window} ms")]
    PeriodTooSmall { period: u64, window: u64 },
    #[error("UnknownSubscription: {0}")]
    UnknownSubscription(u64),
    #[error("Timeout")]
    Timeout,
}

/// Outbound message produced by the RIC.
#[derive(Debug, Clone, PartialEq)]
pub enum RicOut {
    ToNode(NodeId, E2Message),
    ToXapp(String, E2Message),
}

#[derive(Debug, Clone)]
struct PendingControl {
    node_txid: u64,
    node_id: NodeId,
    xapp_id: String,
    xapp_txid: u64,
    issued_at: u64,
    deadline_ms: u64,
}

/// Control timeout when the xApp has no subscription to derive a report
/// period from.
const DEFAULT_CONTROL_TIMEOUT_MS: u64 = 500;

#[derive(Debug, Default)]
pub struct RicCore {
    conns: BTreeMap<u64, Option<NodeId>>,
    registry: BTreeMap<NodeId, NodeRecord>,
    routing: BTreeMap<u64, RouteEntry>,
    xapps: Vec<String>,
    next_sub_id: u64,
    next_txid: u64,
    pending_controls: Vec<PendingControl>,
    log_lines: Vec<String>,
    pub snapshot_path: Option<PathBuf>,
}

impl RicCore {
    pub fn new() -> Self {
        RicCore {
            next_sub_id: 1,
            next_txid: 1,
            ..Default::default()
        }
    }

    fn txid(&mut self) -> u64 {
        let t = self.next_txid;
        self.next_txid += 1;
        t
    }

    pub fn log_event(&mut self, ts_ms: u64, event: &str, fields: serde_json::Value) {
        let mut obj = json!({"ts_ms": ts_ms, "event": event});
        if let (Some(o), Some(f)) = (obj.as_object_mut(), fields.as_object()) {
            for (k, v) in f {
                o.insert(k.clone(), v.clone());
            }
        }
        let line = obj.to_string();
        log::debug!("ric: {line}");
        self.log_lines.push(line);
    }

    pub fn take_log(&mut self) -> Vec<String> {
        std::mem::take(&mut self.log_lines)
    }

    fn snapshot(&self) {
        if let Some(path) = &self.snapshot_path {
            let nodes = self.list_nodes();
            if let Ok(text) = serde_json::to_string_pretty(&nodes) {
                let _ = std::fs::write(path, text);
            }
        }
    }

    pub fn register_xapp(&mut self, xapp_id: &str) {
        if !self.xapps.iter().any(|x| x == xapp_id) {
            self.xapps.push(xapp_id.to_string());
        }
    }

    pub fn on_conn_open(&mut self, conn_id: u64) {
        self.conns.insert(conn_id, None);
    }

    /// Node disconnect: evict the registry record, cancel its subscriptions,
    /// fail its in-flight controls.
    pub fn on_conn_close(&mut self, conn_id: u64, now_ms: u64) -> Vec<RicOut> {
        let mut out = Vec::new();
        if let Some(Some(node_id)) = self.conns.remove(&conn_id) {
            if let Some(rec) = self.registry.remove(&node_id) {
                for sub in &rec.subscriptions {
                    self.routing.remove(sub);
                }
                self.log_event(now_ms, "disconnect", json!({"node_id": node_id.as_str()}));
            }
            // in-flight controls for the vanished node time out immediately
            self.pending_controls.retain(|p| {
                if p.node_id == node_id {
                    out.push(RicOut::ToXapp(
                        p.xapp_id.clone(),
                        E2Message::ControlAck(ControlAck {
                            txid: p.xapp_txid,
                            status: AckStatus::Rejected,
                            reason: Some("Timeout".into()),
                        }),
                    ));
                    false
                } else {
                    true
                }
            });
            self.snapshot();
        }
        out
    }

    /// Registry insertion for a node setup request.
    pub fn register_node(
        &mut self,
        conn_id: u64,
        req: &SetupRequest,
        now_ms: u64,
    ) -> Result<(), RicError> {
        if self.registry.contains_key(&req.node_id) {
            return Err(RicError::DuplicateNode(req.node_id.clone()));
        }
        self.registry.insert(
            req.node_id.clone(),
            NodeRecord {
                node_id: req.node_id.clone(),
                conn_id,
                connected_at: now_ms,
                last_indication_at: None,
                subscriptions: Vec::new(),
                kpm_window_ms: req.kpm_window_ms,
                rbg_count: req.rbg_count,
                n_slices: req.n_slices,
            },
        );
        self.conns.insert(conn_id, Some(req.node_id.clone()));
        self.log_event(now_ms, "setup", json!({"node_id": req.node_id.as_str()}));
        self.snapshot();
        Ok(())
    }

    /// Registry snapshot ordered by connection time. A copy: later
    /// mutations do not alter it.
    pub fn list_nodes(&self) -> Vec<NodeRecord> {
        let mut nodes: Vec<NodeRecord> = self.registry.values().cloned().collect();
        nodes.sort_by_key(|n| n.connected_at);
        nodes
    }

    pub fn node(&self, node_id: &NodeId) -> Option<&NodeRecord> {
        self.registry.get(node_id)
    }

    pub fn route(&self, sub_id: u64) -> Option<&RouteEntry> {
        self.routing.get(&sub_id)
    }

    /// xApp subscription: stamp a fresh sub_id, update the routing table,
    /// and forward the request to the node's connection.
    pub fn handle_subscription(
        &mut self,
        xapp_id: &str,
        req: &SubscriptionRequest,
        now_ms: u64,
    ) -> Result<(u64, RicOut), RicError> {
        if !self.xapps.iter().any(|x| x == xapp_id) {
            return Err(RicError::UnknownXapp(xapp_id.to_string()));
        }
        let rec = self
            .registry
            .get_mut(&req.node_id)
            .ok_or_else(|| RicError::UnknownNode(req.node_id.as_str().to_string()))?;
        if req.report_period_ms < rec.kpm_window_ms {
            return Err(RicError::PeriodTooSmall {
                period: req.report_period_ms,
                window: rec.kpm_window_ms,
            });
        }
        let sub_id = self.next_sub_id;
        self.next_sub_id += 1;
        rec.subscriptions.push(sub_id);
        let node_id = rec.node_id.clone();
        self.routing.insert(
            sub_id,
            RouteEntry {
                node_id: node_id.clone(),
                xapp_id: xapp_id.to_string(),
                report_period_ms: req.report_period_ms,
            },
        );
        self.log_event(
            now_ms,
            "subscribe",
            json!({"xapp_id": xapp_id, "node_id": node_id.as_str(), "sub_id": sub_id,
                   "report_period_ms": req.report_period_ms}),
        );
        let mut fwd = req.clone();
        fwd.sub_id = Some(sub_id);
        Ok((sub_id, RicOut::ToNode(node_id, E2Message::SubscriptionRequest(fwd))))
    }

    /// Deliver an indication to exactly its subscribed xApp.
    pub fn route_indication(&mut self, ind: &Indication, now_ms: u64) -> Vec<RicOut> {
        match self.routing.get(&ind.sub_id) {
            Some(entry) => {
                let xapp = entry.xapp_id.clone();
                if let Some(rec) = self.registry.get_mut(&ind.node_id) {
                    rec.last_indication_at = Some(now_ms);
                }
                self.log_event(
                    now_ms,
                    "indication",
                    json!({"sub_id": ind.sub_id, "seq": ind.seq, "records": ind.records.len()}),
                );
                vec![RicOut::ToXapp(xapp, E2Message::Indication(ind.clone()))]
            }
            None => {
                self.log_event(
                    now_ms,
                    "error",
                    json!({"code": "UnknownSubscription", "sub_id": ind.sub_id}),
                );
                vec![]
            }
        }
    }

    /// Forward an xApp control request to the target node's connection.
    pub fn forward_control(
        &mut self,
        xapp_id: &str,
        req: &ControlRequest,
        now_ms: u64,
    ) -> Result<RicOut, RicError> {
        let node_id = NodeId::parse(&req.directive.node_id)
            .map_err(|_| RicError::UnknownNode(req.directive.node_id.clone()))?;
        if !self.registry.contains_key(&node_id) {
            return Err(RicError::UnknownNode(req.directive.node_id.clone()));
        }
        // Timeout: two report periods of this xApp's subscription to the
        // target node, or a fixed default when it has none.
        let period = self
            .routing
            .values()
            .find(|r| r.xapp_id == xapp_id && r.node_id == node_id)
            .map(|r| r.report_period_ms);
        let deadline = now_ms + period.map_or(DEFAULT_CONTROL_TIMEOUT_MS, |p| 2 * p);
        let node_txid = self.txid();
        self.pending_controls.push(PendingControl {
            node_txid,
            node_id: node_id.clone(),
            xapp_id: xapp_id.to_string(),
            xapp_txid: req.txid,
            issued_at: now_ms,
            deadline_ms: deadline,
        });
        self.log_event(
            now_ms,
            "control",
            json!({"xapp_id": xapp_id, "node_id": node_id.as_str(), "txid": node_txid}),
        );
        let mut fwd = req.clone();
        fwd.txid = node_txid;
        Ok(RicOut::ToNode(node_id, E2Message::ControlRequest(fwd)))
    }

    /// Expire in-flight controls whose node never answered.
    pub fn poll_timeouts(&mut self, now_ms: u64) -> Vec<RicOut> {
        let mut out = Vec::new();
        let mut expired = Vec::new();
        self.pending_controls.retain(|p| {
            if now_ms >= p.deadline_ms {
                expired.push(p.clone());
                false
            } else {
                true
            }
        });
        for p in expired {
            self.log_event(
                now_ms,
                "error",
                json!({"code": "Timeout", "xapp_id": p.xapp_id, "txid": p.node_txid}),
            );
            out.push(RicOut::ToXapp(
                p.xapp_id,
                E2Message::ControlAck(ControlAck {
                    txid: p.xapp_txid,
                    status: AckStatus::Rejected,
                    reason: Some("Timeout".into()),
                }),
            ));
        }
        out
    }

    /// Handle one message arriving on a node connection.
    pub fn on_node_msg(&mut self, conn_id: u64, msg: &E2Message, now_ms: u64) -> Vec<RicOut> {
        let registered = self.conns.get(&conn_id).cloned().flatten();
        match msg {
            E2Message::SetupRequest(req) => match self.register_node(conn_id, req, now_ms) {
                Ok(()) => {
                    let node_id = req.node_id.clone();
                    vec![RicOut::ToNode(
                        node_id,
                        E2Message::SetupResponse(SetupResponse {
                            txid: req.txid,
                            status: Status::Accepted,
                            reason: None,
                        }),
                    )]
                }
                Err(e) => {
                    self.log_event(
                        now_ms,
                        "error",
                        json!({"code": "DuplicateNode", "node_id": req.node_id.as_str()}),
                    );
                    vec![RicOut::ToNode(
                        req.node_id.clone(),
                        E2Message::SetupResponse(SetupResponse {
                            txid: req.txid,
                            status: Status::Rejected,
                            reason: Some(e.to_string()),
                        }),
                    )]
                }
            },
            E2Message::Indication(ind) => {
                if registered.is_none() {
                    return self.conn_violation(conn_id, msg, now_ms);
                }
                self.route_indication(ind, now_ms)
            }
            E2Message::SubscriptionResponse(resp) => {
                if registered.is_none() {
                    return self.conn_violation(conn_id, msg, now_ms);
                }
                match resp.sub_id.and_then(|s| self.routing.get(&s)) {
                    Some(entry) => {
                        let xapp = entry.xapp_id.clone();
                        if resp.status == Status::Rejected {
                            let sub_id = resp.sub_id.unwrap();
                            self.routing.remove(&sub_id);
                            for rec in self.registry.values_mut() {
                                rec.subscriptions.retain(|s| *s != sub_id);
                            }
                        }
                        vec![RicOut::ToXapp(
                            xapp,
                            E2Message::SubscriptionResponse(resp.clone()),
                        )]
                    }
                    None => {
                        self.log_event(
                            now_ms,
                            "error",
                            json!({"code": "UnknownSubscription", "sub_id": resp.sub_id}),
                        );
                        vec![]
                    }
                }
            }
            E2Message::ControlAck(ack) => {
                if registered.is_none() {
                    return self.conn_violation(conn_id, msg, now_ms);
                }
                let pos = self
                    .pending_controls
                    .iter()
                    .position(|p| p.node_txid == ack.txid);
                match pos {
                    Some(i) => {
                        let p = self.pending_controls.remove(i);
                        let latency = now_ms.saturating_sub(p.issued_at);
                        self.log_event(
                            now_ms,
                            "control_ack",
                            json!({"xapp_id": p.xapp_id, "status": ack.status,
                                   "latency_ms": latency}),
                        );
                        let mut relay = ack.clone();
                        relay.txid = p.xapp_txid;
                        vec![RicOut::ToXapp(p.xapp_id, E2Message::ControlAck(relay))]
                    }
                    None => vec![],
                }
            }
            E2Message::ProtocolError(_) => vec![],
            _ => self.conn_violation(conn_id, msg, now_ms),
        }
    }

    fn conn_violation(&mut self, conn_id: u64, msg: &E2Message, now_ms: u64) -> Vec<RicOut> {
        self.log_event(
            now_ms,
            "error",
            json!({"code": "UnexpectedMessage", "conn_id": conn_id,
                   "msg_type": msg.msg_type()}),
        );
        let node = self.conns.get(&conn_id).cloned().flatten();
        match node {
            Some(node_id) => vec![RicOut::ToNode(
                node_id,
                E2Message::protocol_error(
                    msg.transaction_id(),
                    "UnexpectedMessage",
                    format!("msg_type 0x{:02x}", msg.msg_type()),
                ),
            )],
            None => vec![],
        }
    }

    /// Handle one message from a hosted xApp.
    pub fn on_xapp_msg(&mut self, xapp_id: &str, msg: &E2Message, now_ms: u64) -> Vec<RicOut> {
        match msg {
            E2Message::SubscriptionRequest(req) => {
                match self.handle_subscription(xapp_id, req, now_ms) {
                    Ok((_sub_id, fwd)) => vec![fwd],
                    Err(e) => vec![RicOut::ToXapp(
                        xapp_id.to_string(),
                        E2Message::SubscriptionResponse(SubscriptionResponse {
                            txid: req.txid,
                            status: Status::Rejected,
                            sub_id: None,
                            reason: Some(e.to_string()),
                        }),
                    )],
                }
            }
            E2Message::ControlRequest(req) => match self.forward_control(xapp_id, req, now_ms) {
                Ok(fwd) => vec![fwd],
                Err(e) => vec![RicOut::ToXapp(
                    xapp_id.to_string(),
                    E2Message::ControlAck(ControlAck {
                        txid: req.txid,
                        status: AckStatus::Rejected,
                        reason: Some(e.to_string()),
                    }),
                )],
            },
            _ => {
                self.log_event(
                    now_ms,
                    "error",
                    json!({"code": "UnexpectedMessage", "xapp_id": xapp_id,
                           "msg_type": msg.msg_type()}),
                );
                vec![]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup_req(id: &str) -> SetupRequest {
        SetupRequest {
            txid: 1,
            node_id: NodeId::parse(id).unwrap(),
            kpm_window_ms: 100,
            rbg_count: 17,
            n_slices: 2,
        }
    }

    fn sub_req(node: &str, period: u64) -> SubscriptionRequest {
        SubscriptionRequest {
            txid: 2,
            node_id: NodeId::parse(node).unwrap(),
            xapp_id: "x1".into(),
            report_period_ms: period,
            metric_set: vec![],
            sub_id: None,
        }
    }

    #[test]
    fn first_setup_registers_node() {
        let mut ric = RicCore::new();
        ric.on_conn_open(1);
        ric.register_node(1, &setup_req("gnb:311-048-01000501"), 0).unwrap();
        let nodes = ric.list_nodes();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].node_id.as_str(), "gnb:311-048-01000501");
    }

    #[test]
    fn duplicate_node_rejected_until_evicted() {
        let mut ric = RicCore::new();
        ric.on_conn_open(1);
        ric.register_node(1, &setup_req("gnb:311-048-01000501"), 0).unwrap();
        ric.on_conn_open(2);
        assert_eq!(
            ric.register_node(2, &setup_req("gnb:311-048-01000501"), 5),
            Err(RicError::DuplicateNode(
                NodeId::parse("gnb:311-048-01000501").unwrap()
            ))
        );
        ric.on_conn_close(1, 6);
        assert!(ric.register_node(2, &setup_req("gnb:311-048-01000501"), 7).is_ok());
    }

    #[test]
    fn list_nodes_ordered_and_snapshotted() {
        let mut ric = RicCore::new();
        ric.on_conn_open(1);
        ric.on_conn_open(2);
        ric.register_node(1, &setup_req("gnb:311-048-01000501"), 0).unwrap();
        ric.register_node(2, &setup_req("gnb:311-048-01000502"), 3).unwrap();
        let snap = ric.list_nodes();
        assert_eq!(snap.len(), 2);
        assert!(snap[0].connected_at <= snap[1].connected_at);
        ric.on_conn_close(1, 9);
        // snapshot is a copy
        assert_eq!(snap.len(), 2);
        assert_eq!(ric.list_nodes().len(), 1);
    }

    #[test]
    fn subscription_to_unknown_node_fails() {
        let mut ric = RicCore::new();
        ric.register_xapp("x1");
        let err = ric
            .handle_subscription("x1", &sub_req("gnb:999-999-00000000", 250), 0)
            .unwrap_err();
        assert!(matches!(err, RicError::UnknownNode(_)));
        assert!(ric.route(1).is_none());
    }

    #[test]
    fn subscription_from_unknown_xapp_fails() {
        let mut ric = RicCore::new();
        ric.on_conn_open(1);
        ric.register_node(1, &setup_req("gnb:311-048-01000501"), 0).unwrap();
        let err = ric
            .handle_subscription("ghost", &sub_req("gnb:311-048-01000501", 250), 0)
            .unwrap_err();
        assert!(matches!(err, RicError::UnknownXapp(_)));
    }

    #[test]
    fn period_too_small_rejected() {
        let mut ric = RicCore::new();
        ric.register_xapp("x1");
        ric.on_conn_open(1);
        ric.register_node(1, &setup_req("gnb:311-048-01000501"), 0).unwrap();
        let err = ric
            .handle_subscription("x1", &sub_req("gnb:311-048-01000501", 50), 0)
            .unwrap_err();
        assert_eq!(err, RicError::PeriodTooSmall { period: 50, window: 100 });
    }

    #[test]
    fn two_xapps_get_independent_sub_ids_and_copies() {
        let mut ric = RicCore::new();
        ric.register_xapp("x1");
        ric.register_xapp("x2");
        ric.on_conn_open(1);
        ric.register_node(1, &setup_req("gnb:311-048-01000501"), 0).unwrap();
        let (s1, _) = ric
            .handle_subscription("x1", &sub_req("gnb:311-048-01000501", 250), 0)
            .unwrap();
        let (s2, _) = ric
            .handle_subscription("x2", &sub_req("gnb:311-048-01000501", 250), 0)
            .unwrap();
        assert_ne!(s1, s2);
        for (sub, xapp) in [(s1, "x1"), (s2, "x2")] {
            let ind = Indication {
                txid: 1,
                sub_id: sub,
                node_id: NodeId::parse("gnb:311-048-01000501").unwrap(),
                ts_ms: 250,
                seq: 1,
                records: vec![],
            };
            let out = ric.route_indication(&ind, 250);
            assert_eq!(out.len(), 1);
            assert!(matches!(&out[0], RicOut::ToXapp(x, _) if x == xapp));
        }
    }

    #[test]
    fn unknown_sub_dropped_and_logged() {
        let mut ric = RicCore::new();
        let ind = Indication {
            txid: 1,
            sub_id: 42,
            node_id: NodeId::parse("gnb:311-048-01000501").unwrap(),
            ts_ms: 0,
            seq: 1,
            records: vec![],
        };
        assert!(ric.route_indication(&ind, 0).is_empty());
        assert!(ric.take_log().iter().any(|l| l.contains("UnknownSubscription")));
    }

    #[test]
    fn control_to_unknown_node_fails() {
        let mut ric = RicCore::new();
        ric.register_xapp("x1");
        let req = ControlRequest {
            txid: 1,
            directive: crate::ransim::ControlDirective {
                node_id: "gnb:311-048-01000501".into(),
                slice_allocation: None,
                slice_scheduling_policy: Some(vec![0]),
            },
        };
        assert!(matches!(
            ric.forward_control("x1", &req, 0),
            Err(RicError::UnknownNode(_))
        ));
    }

    #[test]
    fn control_timeout_surfaces_to_xapp() {
        let mut ric = RicCore::new();
        ric.register_xapp("x1");
        ric.on_conn_open(1);
        ric.register_node(1, &setup_req("gnb:311-048-01000501"), 0).unwrap();
        let req = ControlRequest {
            txid: 77,
            directive: crate::ransim::ControlDirective {
                node_id: "gnb:311-048-01000501".into(),
                slice_allocation: None,
                slice_scheduling_policy: Some(vec![0, 0]),
            },
        };
        ric.forward_control("x1", &req, 0).unwrap();
        assert!(ric.poll_timeouts(499).is_empty());
        let out = ric.poll_timeouts(500);
        assert_eq!(out.len(), 1);
        match &out[0] {
            RicOut::ToXapp(x, E2Message::ControlAck(a)) => {
                assert_eq!(x, "x1");
                assert_eq!(a.txid, 77);
                assert_eq!(a.status, AckStatus::Rejected);
                assert_eq!(a.reason.as_deref(), Some("Timeout"));
            }
            m => panic!("unexpected {m:?}"),
        }
    }

    #[test]
    fn referential_integrity_under_random_interleavings() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let ids = ["gnb:311-048-01000501", "gnb:311-048-01000502"];
        let mut ric = RicCore::new();
        ric.register_xapp("x1");
        let mut conn: u64 = 0;
        let mut live: BTreeMap<&str, u64> = BTreeMap::new();
        for step in 0..2000u64 {
            match rng.random_range(0..3) {
                0 => {
                    let id = ids[rng.random_range(0..ids.len())];
                    if !live.contains_key(id) {
                        conn += 1;
                        ric.on_conn_open(conn);
                        ric.register_node(conn, &setup_req(id), step).unwrap();
                        live.insert(id, conn);
                    }
                }
                1 => {
                    let id = ids[rng.random_range(0..ids.len())];
                    if live.contains_key(id) {
                        let _ = ric.handle_subscription("x1", &sub_req(id, 200), step);
                    }
                }
                _ => {
                    let id = ids[rng.random_range(0..ids.len())];
                    if let Some(c) = live.remove(id) {
                        ric.on_conn_close(c, step);
                    }
                }
            }
            // every routing entry references a live node that lists it
            for (sub, entry) in &ric.routing {
                let rec = ric.registry.get(&entry.node_id).expect("dangling route");
                assert!(rec.subscriptions.contains(sub));
            }
        }
    }
}
