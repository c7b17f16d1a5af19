//! Deterministic in-process experiment engine: one simulated clock drives
//! the cell, the E2 endpoint, the controller, and any xApps. Messages on
//! the node<->controller hop go through the real frame codec.

use std::collections::VecDeque;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::e2lite::{decode_frame, encode_frame, ControlRequest, E2Message, NodeFsm, NodeId};
use crate::ransim::kpm::{write_csv_header, write_csv_record};
use crate::ransim::{Cell, ControlDirective, KpmRecord};
use crate::ric::{RicCore, RicOut};
use crate::xapp::{
    decision_log_header, decision_log_row, prioritize_xapp, ActionSpace, ConstantModel,
    DecisionModel, FeatureVector, XAppDescriptor, XappRuntime,
};

use super::plan::{validate_plan, EventKind, ExperimentPlan, TimelineConflict, XappSpec};
use super::summary::{compute_summary, latencies_from_log, RunSummary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Conflict(#[from] TimelineConflict),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("component crash: {0}")]
    ComponentCrash(String),
}

/// Fires one action id exactly once, then stays quiet.
struct FireOnce {
    action: usize,
    fired: bool,
}

impl DecisionModel for FireOnce {
    fn decide(&mut self, _features: &FeatureVector) -> Option<usize> {
        if self.fired {
            None
        } else {
            self.fired = true;
            Some(self.action)
        }
    }
}

/// Internal xApp id used for plan-scheduled allocation changes so they run
/// through the controller like any other control.
const PLAN_XAPP_ID: &str = "plan";

struct Engine {
    cell: Cell,
    node: NodeFsm,
    ric: RicCore,
    xapps: Vec<XappRuntime>,
    node_to_ric: VecDeque<Vec<u8>>,
    ric_to_node: VecDeque<Vec<u8>>,
    plan_txid: u64,
    records: Vec<KpmRecord>,
}

impl Engine {
    /// Drain both transport directions until no component has more to say
    /// at this millisecond.
    fn pump(&mut self, now_ms: u64) -> Result<(), RunError> {
        loop {
            if let Some(frame) = self.node_to_ric.pop_front() {
                let (msg, used) = decode_frame(&frame)
                    .map_err(|e| RunError::ComponentCrash(format!("node frame: {e}")))?;
                debug_assert_eq!(used, frame.len());
                let outs = self.ric.on_node_msg(0, &msg, now_ms);
                self.dispatch(outs, now_ms)?;
                continue;
            }
            if let Some(frame) = self.ric_to_node.pop_front() {
                let (msg, _) = decode_frame(&frame)
                    .map_err(|e| RunError::ComponentCrash(format!("ric frame: {e}")))?;
                for reply in self.node.on_msg(&msg, &mut self.cell, now_ms) {
                    self.node_to_ric.push_back(encode_frame(&reply).unwrap());
                }
                continue;
            }
            return Ok(());
        }
    }

    fn dispatch(&mut self, outs: Vec<RicOut>, now_ms: u64) -> Result<(), RunError> {
        for out in outs {
            match out {
                RicOut::ToNode(_, msg) => {
                    self.ric_to_node.push_back(encode_frame(&msg).unwrap());
                }
                RicOut::ToXapp(xapp_id, msg) => {
                    if xapp_id == PLAN_XAPP_ID {
                        continue; // plan controls are fire-and-forget
                    }
                    let replies = match self
                        .xapps
                        .iter_mut()
                        .find(|x| x.descriptor.xapp_id == xapp_id)
                    {
                        Some(x) => x.on_msg(&msg, now_ms),
                        None => continue,
                    };
                    for reply in replies {
                        let outs = self.ric.on_xapp_msg(&xapp_id, &reply, now_ms);
                        self.dispatch(outs, now_ms)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn plan_control(&mut self, directive: ControlDirective, now_ms: u64) -> Result<(), RunError> {
        self.plan_txid += 1;
        let req = ControlRequest {
            txid: self.plan_txid,
            directive,
        };
        let outs = self
            .ric
            .on_xapp_msg(PLAN_XAPP_ID, &E2Message::ControlRequest(req), now_ms);
        self.dispatch(outs, now_ms)
    }

    fn host_xapp(&mut self, mut xapp: XappRuntime, now_ms: u64) -> Result<(), RunError> {
        let id = xapp.descriptor.xapp_id.clone();
        self.ric.register_xapp(&id);
        let sub = xapp.subscribe_request();
        self.xapps.push(xapp);
        let outs = self.ric.on_xapp_msg(&id, &sub, now_ms);
        self.dispatch(outs, now_ms)
    }

    fn start_xapp(&mut self, spec: &XappSpec, bs_id: &str, now_ms: u64) -> Result<(), RunError> {
        match spec {
            XappSpec::Prioritize {
                target_slice,
                boost_share,
                report_period_ms,
            } => {
                let n_slices = self.cell.config().n_slices();
                let rbg_count = self.cell.config().rbg_count;
                let directive =
                    prioritize_xapp(*target_slice, *boost_share, n_slices, rbg_count, bs_id)
                        .map_err(|e| RunError::ComponentCrash(e.to_string()))?;
                // single-partition space holding exactly the boost layout
                let space = ActionSpace {
                    n_slices,
                    rbg_count,
                    partitions: vec![directive.slice_allocation.unwrap()],
                };
                let descriptor = XAppDescriptor {
                    xapp_id: "prioritize".into(),
                    node_ids: vec![bs_id.to_string()],
                    report_period_ms: *report_period_ms,
                    metric_set: vec!["thr".into(), "buf".into(), "tbs".into()],
                    feature_windows: 4,
                    decision_epoch_periods: 4,
                };
                let model = Box::new(FireOnce {
                    action: 0,
                    fired: false,
                });
                self.host_xapp(XappRuntime::new(descriptor, space, model), now_ms)
            }
        }
    }
}

pub struct RunOutput {
    pub out_dir: PathBuf,
    pub summary: RunSummary,
    /// In-memory decision logs of hosted xApps, before any CSV formatting.
    pub xapp_logs: Vec<(String, Vec<crate::xapp::DecisionLogRow>)>,
}

/// Execute a plan on the in-process deterministic transport and write the
/// run directory: config.json, kpm/<bs_id>.csv, xapp/<xapp_id>.csv,
/// ric.log.jsonl, summary.json, meta.json.
pub fn run_experiment(
    plan: &ExperimentPlan,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<RunOutput, RunError> {
    run_experiment_hosting(plan, seed, out_dir, Vec::new())
}

/// Same as `run_experiment`, plus a monitoring xApp on the catalog action
/// space that logs its feature vector every report period without acting.
/// Used wherever a live feature trace is needed next to the KPM CSV.
pub fn run_with_monitor_xapp(
    plan: &ExperimentPlan,
    seed: Option<u64>,
    out_dir: &Path,
    feature_windows: usize,
) -> Result<RunOutput, RunError> {
    let descriptor = XAppDescriptor {
        xapp_id: "monitor".into(),
        node_ids: vec![plan.bs_id.clone()],
        report_period_ms: plan.scenario.kpm_window_ms,
        metric_set: vec!["thr".into(), "buf".into(), "tbs".into()],
        feature_windows,
        decision_epoch_periods: 1,
    };
    let space = ActionSpace::sched_only(plan.scenario.n_slices(), plan.scenario.rbg_count);
    let xapp = XappRuntime::new(descriptor, space, Box::new(ConstantModel(None)));
    run_experiment_hosting(plan, seed, out_dir, vec![xapp])
}

fn run_experiment_hosting(
    plan: &ExperimentPlan,
    seed: Option<u64>,
    out_dir: &Path,
    xapps: Vec<XappRuntime>,
) -> Result<RunOutput, RunError> {
    validate_plan(plan)?;
    let started = std::time::SystemTime::now();
    let t_wall = std::time::Instant::now();

    let mut plan = plan.clone();
    if let Some(s) = seed {
        plan.scenario.seed = s;
    }
    let cfg = plan.scenario.clone();
    let node_id = NodeId::parse(&plan.bs_id)
        .map_err(|e| RunError::ComponentCrash(format!("bad bs id: {e}")))?;

    let mut engine = Engine {
        cell: Cell::new(cfg.clone(), &plan.bs_id),
        node: NodeFsm::new(
            node_id,
            cfg.kpm_window_ms,
            cfg.rbg_count,
            cfg.n_slices() as u32,
        ),
        ric: RicCore::new(),
        xapps: Vec::new(),
        node_to_ric: VecDeque::new(),
        ric_to_node: VecDeque::new(),
        plan_txid: 0,
        records: Vec::new(),
    };
    engine.ric.register_xapp(PLAN_XAPP_ID);

    // connect and set up before the clock starts
    engine.ric.on_conn_open(0);
    for msg in engine.node.on_connected() {
        engine.node_to_ric.push_back(encode_frame(&msg).unwrap());
    }
    engine.pump(0)?;
    for xapp in xapps {
        engine.host_xapp(xapp, 0)?;
    }

    let mut next_event = 0usize;
    for t in 0..plan.duration_ms {
        while next_event < plan.timeline.len() && plan.timeline[next_event].at_ms == t {
            match plan.timeline[next_event].event.clone() {
                EventKind::ApplyAllocation { allocation } => {
                    engine.plan_control(
                        ControlDirective {
                            node_id: plan.bs_id.clone(),
                            slice_allocation: Some(allocation),
                            slice_scheduling_policy: None,
                        },
                        t,
                    )?;
                }
                EventKind::StartXapp { xapp } => {
                    engine.start_xapp(&xapp, &plan.bs_id, t)?;
                }
            }
            next_event += 1;
        }
        engine.pump(t)?;
        engine.cell.step_tti();
        let now = t + 1;
        if now % cfg.kpm_window_ms == 0 {
            let records = engine.cell.emit_kpm_window(now);
            engine.node.on_window(now, records.clone());
            engine.records.extend(records);
        }
        for msg in engine.node.poll_timers(now) {
            engine.node_to_ric.push_back(encode_frame(&msg).unwrap());
        }
        engine.pump(now)?;
        let outs = engine.ric.poll_timeouts(now);
        engine.dispatch(outs, now)?;
        engine.pump(now)?;
    }

    let xapp_logs: Vec<(String, Vec<crate::xapp::DecisionLogRow>)> = engine
        .xapps
        .iter()
        .map(|x| (x.descriptor.xapp_id.clone(), x.log.clone()))
        .collect();
    let log_lines = engine.ric.take_log();
    let summary = write_run_dir(&plan, out_dir, &engine.records, &xapp_logs, &log_lines)?;

    // wall-clock facts live only here so the rest of the directory is
    // reproducible byte for byte
    let meta = serde_json::json!({
        "started_unix_ms": started
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
        "wall_ms": t_wall.elapsed().as_millis() as u64,
    });
    std::fs::write(
        out_dir.join("meta.json"),
        serde_json::to_string_pretty(&meta).unwrap(),
    )?;

    Ok(RunOutput {
        out_dir: out_dir.to_path_buf(),
        summary,
        xapp_logs,
    })
}

/// Write everything except `meta.json`; all inputs are deterministic.
pub(crate) fn write_run_dir(
    plan: &ExperimentPlan,
    out_dir: &Path,
    records: &[KpmRecord],
    xapp_logs: &[(String, Vec<crate::xapp::DecisionLogRow>)],
    log_lines: &[String],
) -> Result<RunSummary, RunError> {
    std::fs::create_dir_all(out_dir.join("kpm"))?;
    std::fs::create_dir_all(out_dir.join("xapp"))?;
    std::fs::write(
        out_dir.join("config.json"),
        serde_json::to_string_pretty(plan).unwrap(),
    )?;
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(
            out_dir.join("kpm").join(format!("{}.csv", plan.bs_id)),
        )?);
        write_csv_header(&mut f)?;
        for r in records {
            write_csv_record(&mut f, r)?;
        }
    }
    for (xapp_id, log) in xapp_logs {
        let mut f = std::io::BufWriter::new(std::fs::File::create(
            out_dir.join("xapp").join(format!("{xapp_id}.csv")),
        )?);
        writeln!(f, "{}", decision_log_header(3 * plan.scenario.n_slices()))?;
        for row in log {
            writeln!(f, "{}", decision_log_row(row))?;
        }
    }
    let log_text = log_lines.join("\n") + "\n";
    std::fs::write(out_dir.join("ric.log.jsonl"), &log_text)?;
    let summary = compute_summary(records, plan.duration_ms, latencies_from_log(&log_text));
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    Ok(summary)
}
