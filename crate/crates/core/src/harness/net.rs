//! TCP transport mode: the controller listens on a socket and the base
//! station connects as a real client, exchanging the same byte frames as
//! the in-process engine. Components free-run, so this mode is for protocol
//! fidelity, not byte-exact reproducibility.

use std::io::{ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::time::Duration;

use crate::e2lite::{encode_frame, E2Message, FrameReader, NodeFsm, NodeId};
use crate::ransim::{Cell, ControlDirective};
use crate::ric::{RicCore, RicOut};

use super::engine::{write_run_dir, RunError, RunOutput};
use super::plan::{validate_plan, EventKind, ExperimentPlan};

pub const DEFAULT_E2_PORT: u16 = 36421;

/// Controller side: accepts one node connection, answers it, and fires the
/// plan's allocation events once the reported sim time reaches them.
/// Returns its structured log when the node hangs up.
fn ric_thread(
    listener: TcpListener,
    plan: ExperimentPlan,
) -> Result<Vec<String>, std::io::Error> {
    let (mut stream, _) = listener.accept()?;
    stream.set_nodelay(true).ok();
    let mut ric = RicCore::new();
    ric.register_xapp("plan");
    ric.on_conn_open(0);
    let mut reader = FrameReader::new();
    let mut now_ms = 0u64; // latest sim time seen in indications
    let mut plan_txid = 0u64;
    let mut next_event = 0usize;
    let mut buf = [0u8; 4096];
    loop {
        let n = match stream.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == ErrorKind::WouldBlock => continue,
            Err(e) => return Err(e),
        };
        reader.feed(&buf[..n]);
        while let Some(decoded) = reader.next() {
            let msg = match decoded {
                Ok(m) => m,
                Err(_) => continue, // reader already resynced
            };
            if let E2Message::Indication(ind) = &msg {
                now_ms = now_ms.max(ind.ts_ms);
            }
            for out in ric.on_node_msg(0, &msg, now_ms) {
                if let RicOut::ToNode(_, reply) = out {
                    stream.write_all(&encode_frame(&reply).unwrap())?;
                }
            }
            // subscribe on behalf of the supervisor so indications (and the
            // node's sim clock) start flowing
            if let E2Message::SetupRequest(req) = &msg {
                let sub = crate::e2lite::SubscriptionRequest {
                    txid: 0,
                    node_id: req.node_id.clone(),
                    xapp_id: "plan".into(),
                    report_period_ms: req.kpm_window_ms,
                    metric_set: vec!["thr".into(), "buf".into(), "tbs".into()],
                    sub_id: None,
                };
                for out in ric.on_xapp_msg("plan", &E2Message::SubscriptionRequest(sub), now_ms) {
                    if let RicOut::ToNode(_, fwd) = out {
                        stream.write_all(&encode_frame(&fwd).unwrap())?;
                    }
                }
            }
            // supervise the timeline off the node's own clock
            while next_event < plan.timeline.len() && plan.timeline[next_event].at_ms <= now_ms {
                if let EventKind::ApplyAllocation { allocation } =
                    plan.timeline[next_event].event.clone()
                {
                    plan_txid += 1;
                    let req = crate::e2lite::ControlRequest {
                        txid: plan_txid,
                        directive: ControlDirective {
                            node_id: plan.bs_id.clone(),
                            slice_allocation: Some(allocation),
                            slice_scheduling_policy: None,
                        },
                    };
                    for out in ric.on_xapp_msg("plan", &E2Message::ControlRequest(req), now_ms) {
                        if let RicOut::ToNode(_, fwd) = out {
                            stream.write_all(&encode_frame(&fwd).unwrap())?;
                        }
                    }
                }
                next_event += 1;
            }
        }
    }
    Ok(ric.take_log())
}

/// Run a plan with the node and controller on opposite ends of a real TCP
/// connection. xApp start events are not supported in this mode.
pub fn run_experiment_net(
    plan: &ExperimentPlan,
    seed: Option<u64>,
    out_dir: &Path,
    port: u16,
) -> Result<RunOutput, RunError> {
    validate_plan(plan)?;
    if plan
        .timeline
        .iter()
        .any(|e| matches!(e.event, EventKind::StartXapp { .. }))
    {
        return Err(RunError::ComponentCrash(
            "xApp start events require the in-process transport".into(),
        ));
    }
    let started = std::time::SystemTime::now();
    let t_wall = std::time::Instant::now();

    let mut plan = plan.clone();
    if let Some(s) = seed {
        plan.scenario.seed = s;
    }
    let cfg = plan.scenario.clone();

    let listener = TcpListener::bind(("127.0.0.1", port))?;
    let ric_plan = plan.clone();
    let handle = std::thread::spawn(move || ric_thread(listener, ric_plan));

    let mut stream = TcpStream::connect(("127.0.0.1", port))?;
    stream.set_nodelay(true).ok();
    stream.set_read_timeout(Some(Duration::from_millis(1))).ok();

    let node_id = NodeId::parse(&plan.bs_id)
        .map_err(|e| RunError::ComponentCrash(format!("bad bs id: {e}")))?;
    let mut cell = Cell::new(cfg.clone(), &plan.bs_id);
    let mut node = NodeFsm::new(
        node_id,
        cfg.kpm_window_ms,
        cfg.rbg_count,
        cfg.n_slices() as u32,
    );
    let mut records = Vec::new();
    let mut reader = FrameReader::new();
    let mut buf = [0u8; 4096];

    let mut drain =
        |stream: &mut TcpStream, reader: &mut FrameReader, node: &mut NodeFsm, cell: &mut Cell, now: u64| -> Result<(), RunError> {
            loop {
                match stream.read(&mut buf) {
                    Ok(0) => return Ok(()),
                    Ok(n) => reader.feed(&buf[..n]),
                    Err(e)
                        if e.kind() == ErrorKind::WouldBlock
                            || e.kind() == ErrorKind::TimedOut =>
                    {
                        break
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            while let Some(Ok(msg)) = reader.next() {
                for reply in node.on_msg(&msg, cell, now) {
                    stream.write_all(&encode_frame(&reply).unwrap())?;
                }
            }
            Ok(())
        };

    for msg in node.on_connected() {
        stream.write_all(&encode_frame(&msg).unwrap())?;
    }
    for t in 0..plan.duration_ms {
        cell.step_tti();
        let now = t + 1;
        if now % cfg.kpm_window_ms == 0 {
            let window = cell.emit_kpm_window(now);
            node.on_window(now, window.clone());
            records.extend(window);
            // only touch the socket at window boundaries; finer granularity
            // buys nothing at a 1 ms TTI
            drain(&mut stream, &mut reader, &mut node, &mut cell, now)?;
        }
        for msg in node.poll_timers(now) {
            stream.write_all(&encode_frame(&msg).unwrap())?;
        }
    }
    // give in-flight controls a moment, then hang up
    std::thread::sleep(Duration::from_millis(20));
    drain(&mut stream, &mut reader, &mut node, &mut cell, plan.duration_ms)?;
    stream.shutdown(std::net::Shutdown::Both).ok();
    let log_lines = handle
        .join()
        .map_err(|_| RunError::ComponentCrash("controller thread panicked".into()))?
        .map_err(RunError::Io)?;

    let summary = write_run_dir(&plan, out_dir, &records, &[], &log_lines)?;
    let meta = serde_json::json!({
        "started_unix_ms": started
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
        "wall_ms": t_wall.elapsed().as_millis() as u64,
        "transport": "tcp",
        "port": port,
    });
    std::fs::write(
        out_dir.join("meta.json"),
        serde_json::to_string_pretty(&meta).unwrap(),
    )?;
    Ok(RunOutput {
        out_dir: out_dir.to_path_buf(),
        summary,
        xapp_logs: Vec::new(),
    })
}
