//! End-to-end acceptance gate. Each test covers one numbered criterion and
//! prints a single pass line (visible with `--nocapture`); a failing
//! assertion marks the criterion failed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orgym_core::agent::{
    self, default_frozen_scenario, oracle_policy, Episode, Grads, Mlp, PpoConfig,
};
use orgym_core::e2lite::{self, decode_frame, encode_frame, E2Message, NodeFsm, NodeId};
use orgym_core::harness::{
    build_prioritization_plan, build_stairs_plan, build_v_plan, replay_into_features,
    run_experiment, run_with_monitor_xapp,
};
use orgym_core::ransim::kpm::parse_csv;
use orgym_core::ransim::{Cell, KpmRecord, RbgRange};
use orgym_core::ric::RicCore;
use orgym_core::xapp::ActionSpace;

fn pass(n: u32, what: &str) {
    println!("criterion {n}: PASS - {what}");
}

fn read_kpm(run_dir: &std::path::Path, bs_id: &str) -> Vec<KpmRecord> {
    let text = std::fs::read_to_string(run_dir.join("kpm").join(format!("{bs_id}.csv"))).unwrap();
    parse_csv(&text).unwrap()
}

// --- criterion 1: stairs shape --------------------------------------------

#[test]
fn criterion_1_stairs() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let plan = build_stairs_plan();
    let out = run_experiment(&plan, None, dir.path()).unwrap();
    let s = &out.summary;
    for m in 0..3 {
        assert!(
            s.proportionality_residual[m] <= 0.10,
            "minute {m}: residual {}",
            s.proportionality_residual[m]
        );
    }
    let a = &s.minute_thr_mbps[&0];
    let b = &s.minute_thr_mbps[&1];
    assert!(a[0] > a[1] && a[1] > a[2], "slice A not decreasing: {a:?}");
    assert!(b[0] < b[1] && b[1] < b[2], "slice B not increasing: {b:?}");
    assert!(t0.elapsed() <= Duration::from_secs(30), "{:?}", t0.elapsed());
    pass(1, "stairs: shares track allocation, A falls, B rises");
}

// --- criterion 2: V shape ---------------------------------------------------

#[test]
fn criterion_2_v() {
    let dir = tempfile::tempdir().unwrap();
    let plan = build_v_plan();
    let out = run_experiment(&plan, None, dir.path()).unwrap();
    let s = &out.summary;
    for m in 0..3 {
        assert!(s.proportionality_residual[m] <= 0.10);
    }
    let a = &s.minute_thr_mbps[&0];
    assert!(a[1] < a[0] && a[1] < a[2], "minute 2 not the minimum: {a:?}");
    let rel = (a[0] - a[2]).abs() / a[0].max(a[2]);
    assert!(rel <= 0.10, "minutes 1 and 3 differ by {rel}");
    pass(2, "V: slice A dips in minute 2, outer minutes match");
}

// --- criterion 3: prioritization direction ----------------------------------

#[test]
fn criterion_3_prioritization() {
    let dir = tempfile::tempdir().unwrap();
    let plan = build_prioritization_plan();
    let out = run_experiment(&plan, None, dir.path()).unwrap();
    let records = read_kpm(dir.path(), &plan.bs_id);

    let slice_mean = |f: &dyn Fn(&KpmRecord) -> bool| -> BTreeMap<u32, f64> {
        let mut sums: BTreeMap<u32, (f64, BTreeMap<u64, ()>)> = BTreeMap::new();
        for r in records.iter().filter(|r| f(r)) {
            let e = sums.entry(r.slice_id).or_default();
            e.0 += r.dl_thr_mbps;
            e.1.insert(r.ts_ms, ());
        }
        sums.into_iter()
            .map(|(s, (sum, ts))| (s, sum / ts.len() as f64))
            .collect()
    };

    let pre = slice_mean(&|r: &KpmRecord| r.ts_ms <= 150_000);
    let vals: Vec<f64> = pre.values().copied().collect();
    let (lo, hi) = (
        vals.iter().cloned().fold(f64::INFINITY, f64::min),
        vals.iter().cloned().fold(0.0, f64::max),
    );
    assert!((hi - lo) / hi <= 0.10, "pre-control spread: {pre:?}");

    // the xApp decides at 150 400 ms; allow the acked application before
    // judging the post period
    let post = slice_mean(&|r: &KpmRecord| r.ts_ms > 150_500);
    assert!(
        post[&0] > post[&1] && post[&0] > post[&2],
        "slice A not greatest: {post:?}"
    );
    assert!(
        post[&0] >= 1.5 * pre[&0],
        "boost too small: {} -> {}",
        pre[&0],
        post[&0]
    );
    assert!(post[&1] < pre[&1] && post[&2] < pre[&2], "others did not drop");

    // control applied within <= 2 report periods of the decision
    let period = 100;
    assert!(!out.summary.control_latency_ms.is_empty());
    for l in &out.summary.control_latency_ms {
        assert!(*l <= 2 * period, "latency {l} ms");
    }
    pass(3, "prioritization boosts slice A >= 1.5x within two periods");
}

// --- criterion 4: action-space dominance -------------------------------------

/// Broadband transport blocks and mean time-sensitive buffer under one
/// action, from an identical snapshot.
fn action_stats(space: &ActionSpace, action: usize, horizon_epochs: usize) -> (u64, f64) {
    let sc = default_frozen_scenario(space.clone());
    let mut cell = Cell::new(sc.cfg.clone(), &sc.bs_id);
    cell.apply_control(&space.directive(action, &sc.bs_id)).unwrap();
    let windows = horizon_epochs * sc.epoch_windows;
    let mut tbs = 0u64;
    let mut buf_sum = 0.0;
    for w in 0..windows as u64 {
        for _ in 0..100 {
            cell.step_tti();
        }
        for r in cell.emit_kpm_window((w + 1) * 100) {
            if r.slice_id == 0 {
                tbs += r.dl_tx_tbs;
            } else {
                buf_sum += r.dl_buffer_bytes as f64;
            }
        }
    }
    (tbs, buf_sum / windows as f64)
}

#[test]
fn criterion_4_action_space_dominance() {
    let t0 = Instant::now();
    let horizon = 2;
    let sched = default_frozen_scenario(ActionSpace::sched_only(2, 17));
    let joint = default_frozen_scenario(ActionSpace::joint(2, 17));
    let (best_sched, sched_table) = oracle_policy(&sched, horizon).unwrap();
    let (best_joint, joint_table) = oracle_policy(&joint, horizon).unwrap();
    let max_sched = sched_table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_joint = joint_table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        max_joint >= max_sched,
        "joint {max_joint} < sched-only {max_sched}"
    );
    let (tbs_j, buf_j) = action_stats(&joint.space, best_joint, horizon);
    let (tbs_s, buf_s) = action_stats(&sched.space, best_sched, horizon);
    assert!(tbs_j >= tbs_s, "broadband TBs {tbs_j} < {tbs_s}");
    assert!(buf_j <= buf_s, "time-sensitive buffer {buf_j} > {buf_s}");
    assert!(t0.elapsed() <= Duration::from_secs(300), "{:?}", t0.elapsed());
    pass(4, "joint space dominates scheduling-only space");
}

// --- criterion 5: protocol robustness ----------------------------------------

fn rand_string<R: Rng>(rng: &mut R, max: usize) -> String {
    let n = rng.random_range(0..=max);
    (0..n)
        .map(|_| {
            let c = rng.random_range(0u32..128);
            char::from_u32(if c < 32 { c + 65 } else { c }).unwrap_or('x')
        })
        .collect()
}

fn rand_node_id<R: Rng>(rng: &mut R) -> NodeId {
    let s = format!(
        "gnb:{:03}-{:03}-{:08x}",
        rng.random_range(0..1000u32),
        rng.random_range(0..1000u32),
        rng.random::<u32>()
    );
    NodeId::parse(&s).unwrap()
}

fn rand_record<R: Rng>(rng: &mut R) -> KpmRecord {
    KpmRecord {
        ts_ms: rng.random(),
        bs_id: rand_node_id(rng).as_str().to_string(),
        slice_id: rng.random_range(0..8),
        ue_id: rng.random(),
        dl_tx_bytes: rng.random(),
        dl_tx_tbs: rng.random(),
        dl_buffer_bytes: rng.random(),
        dl_thr_mbps: rng.random_range(0.0..1e4),
        rbg_share: rng.random_range(0.0..1.0),
        sched_policy: rng.random_range(0..3),
    }
}

fn rand_msg<R: Rng>(rng: &mut R) -> E2Message {
    use e2lite::*;
    match rng.random_range(0..8) {
        0 => E2Message::SetupRequest(SetupRequest {
            txid: rng.random(),
            node_id: rand_node_id(rng),
            kpm_window_ms: rng.random(),
            rbg_count: rng.random(),
            n_slices: rng.random(),
        }),
        1 => E2Message::SetupResponse(SetupResponse {
            txid: rng.random(),
            status: if rng.random() { Status::Accepted } else { Status::Rejected },
            reason: if rng.random() { Some(rand_string(rng, 40)) } else { None },
        }),
        2 => E2Message::SubscriptionRequest(SubscriptionRequest {
            txid: rng.random(),
            node_id: rand_node_id(rng),
            xapp_id: rand_string(rng, 24),
            report_period_ms: rng.random(),
            metric_set: (0..rng.random_range(0..4)).map(|_| rand_string(rng, 8)).collect(),
            sub_id: if rng.random() { Some(rng.random()) } else { None },
        }),
        3 => E2Message::SubscriptionResponse(SubscriptionResponse {
            txid: rng.random(),
            status: if rng.random() { Status::Accepted } else { Status::Rejected },
            sub_id: if rng.random() { Some(rng.random()) } else { None },
            reason: if rng.random() { Some(rand_string(rng, 40)) } else { None },
        }),
        4 => E2Message::Indication(Indication {
            txid: rng.random(),
            sub_id: rng.random(),
            node_id: rand_node_id(rng),
            ts_ms: rng.random(),
            seq: rng.random(),
            records: (0..rng.random_range(0..4)).map(|_| rand_record(rng)).collect(),
        }),
        5 => {
            let n = rng.random_range(1..4u32);
            let mut alloc = BTreeMap::new();
            let mut first = 0u16;
            for s in 0..n {
                let w = rng.random_range(1..5u16);
                alloc.insert(s, RbgRange(first, first + w - 1));
                first += w;
            }
            E2Message::ControlRequest(ControlRequest {
                txid: rng.random(),
                directive: orgym_core::ransim::ControlDirective {
                    node_id: rand_node_id(rng).as_str().to_string(),
                    slice_allocation: if rng.random() { Some(alloc) } else { None },
                    slice_scheduling_policy: if rng.random() {
                        Some((0..n).map(|_| rng.random_range(0..3u8)).collect())
                    } else {
                        None
                    },
                },
            })
        }
        6 => E2Message::ControlAck(ControlAck {
            txid: rng.random(),
            status: if rng.random() { AckStatus::Applied } else { AckStatus::Rejected },
            reason: if rng.random() { Some(rand_string(rng, 40)) } else { None },
        }),
        _ => E2Message::protocol_error(
            if rng.random() { Some(rng.random()) } else { None },
            &rand_string(rng, 16),
            rand_string(rng, 40),
        ),
    }
}

#[test]
fn criterion_5_protocol() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // 10^4 randomized messages round-trip bit-exactly
    for _ in 0..10_000 {
        let msg = rand_msg(&mut rng);
        let bytes = encode_frame(&msg).unwrap();
        let (back, used) = decode_frame(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, msg);
        assert_eq!(encode_frame(&back).unwrap(), bytes);
    }

    // 10^5 fuzzed frames: typed result, never a panic
    for _ in 0..100_000 {
        let n = rng.random_range(0..64usize);
        let mut buf: Vec<u8> = (0..n).map(|_| rng.random()).collect();
        // half the time, make the length prefix plausible
        if buf.len() >= 5 && rng.random() {
            let body = (buf.len() - 4) as u32;
            buf[..4].copy_from_slice(&body.to_be_bytes());
        }
        let _ = decode_frame(&buf);
    }

    // FSM enumeration to depth 6: no illegal send, no panic. Every inbound
    // sequence over a mixed alphabet is replayed on a fresh node FSM.
    struct NopApplier;
    impl e2lite::ControlApplier for NopApplier {
        fn apply_control(
            &mut self,
            _d: &orgym_core::ransim::ControlDirective,
        ) -> Result<(), String> {
            Ok(())
        }
    }
    let alphabet: Vec<E2Message> = (0..6).map(|_| rand_msg(&mut rng)).collect();
    let depth = 6u32;
    let n = alphabet.len();
    for code in 0..n.pow(depth) {
        let mut fsm = NodeFsm::new(NodeId::parse("gnb:001-001-00000001").unwrap(), 100, 17, 2);
        for m in fsm.on_connected() {
            encode_frame(&m).unwrap();
        }
        let mut c = code;
        for step in 0..depth as u64 {
            let msg = &alphabet[c % n];
            c /= n;
            for out in fsm.on_msg(msg, &mut NopApplier, step) {
                // a node initiates setup only from Idle on connect and emits
                // indications only from its timers
                assert!(!matches!(out, E2Message::SetupRequest(_)));
                assert!(!matches!(out, E2Message::Indication(_)));
                encode_frame(&out).unwrap();
            }
        }
    }

    // RIC side: interleavings of three messages across two connections
    let small: Vec<E2Message> = alphabet.iter().take(3).cloned().collect();
    let symbols = 2 * small.len();
    for code in 0..symbols.pow(depth) {
        let mut ric = RicCore::new();
        ric.register_xapp("x");
        ric.on_conn_open(0);
        ric.on_conn_open(1);
        let mut c = code;
        for step in 0..depth as u64 {
            let sym = c % symbols;
            c /= symbols;
            let conn = (sym / small.len()) as u64;
            for out in ric.on_node_msg(conn, &small[sym % small.len()], step) {
                if let orgym_core::ric::RicOut::ToNode(_, reply) = out {
                    encode_frame(&reply).unwrap();
                }
            }
        }
    }

    // subscription to first indication within one report period
    let mut nop = NopApplier;
    let mut node = NodeFsm::new(NodeId::parse("gnb:001-001-00000001").unwrap(), 100, 17, 1);
    node.on_connected();
    node.on_msg(
        &E2Message::SetupResponse(e2lite::SetupResponse {
            txid: 1,
            status: e2lite::Status::Accepted,
            reason: None,
        }),
        &mut nop,
        0,
    );
    let sub_at = 350u64;
    let period = 200u64;
    node.on_msg(
        &E2Message::SubscriptionRequest(e2lite::SubscriptionRequest {
            txid: 2,
            node_id: NodeId::parse("gnb:001-001-00000001").unwrap(),
            xapp_id: "x".into(),
            report_period_ms: period,
            metric_set: vec![],
            sub_id: Some(1),
        }),
        &mut nop,
        sub_at,
    );
    let mut first_ind = None;
    for t in sub_at..=sub_at + period {
        if t % 100 == 0 {
            node.on_window(t, vec![]);
        }
        let outs = node.poll_timers(t);
        if outs.iter().any(|m| matches!(m, E2Message::Indication(_))) {
            first_ind = Some(t);
            break;
        }
    }
    let first = first_ind.expect("no indication within one period");
    assert!(first <= sub_at + period, "first indication at {first}");

    pass(5, "codec round-trips, fuzz-safe, FSMs legal, timely indication");
}

// --- criterion 6: scheduler oracles ------------------------------------------

#[test]
fn criterion_6_scheduler_oracles() {
    use orgym_core::ransim::sched::{allocate_slice, SchedUe};
    use orgym_core::ransim::SchedPolicy;

    // round-robin, divisible case: exact equality
    let range = RbgRange(0, 11);
    let mut ues: Vec<SchedUe> = (0..4)
        .map(|i| SchedUe {
            ue_id: i,
            efficiency: 6000.0,
            remaining_bits: u64::MAX / 2,
            pf_avg: 1.0,
            granted: 0,
        })
        .collect();
    let mut alloc = vec![None; 12];
    let mut rr = 0usize;
    allocate_slice(SchedPolicy::RoundRobin, range, &mut ues, &mut rr, &mut alloc);
    for ue in &ues {
        assert_eq!(ue.granted, 3, "ue {} got {}", ue.ue_id, ue.granted);
    }

    // proportional fair, identical channels and full buffers: long-run RBG
    // shares within 0.5% of equal over 10^4 TTIs
    let n_ues = 3u32;
    let range = RbgRange(0, 16);
    let mut totals = vec![0u64; n_ues as usize];
    let mut pf_avg = vec![0.0f64; n_ues as usize];
    for _ in 0..10_000 {
        let mut ues: Vec<SchedUe> = (0..n_ues)
            .map(|i| SchedUe {
                ue_id: i,
                efficiency: 6000.0,
                remaining_bits: u64::MAX / 2,
                pf_avg: pf_avg[i as usize],
                granted: 0,
            })
            .collect();
        let mut alloc = vec![None; 17];
        let mut rr = 0usize;
        allocate_slice(SchedPolicy::ProportionalFair, range, &mut ues, &mut rr, &mut alloc);
        for ue in &ues {
            totals[ue.ue_id as usize] += ue.granted as u64;
            // same smoothing the cell applies each TTI
            let served = ue.granted as f64 * ue.efficiency;
            pf_avg[ue.ue_id as usize] =
                0.99 * pf_avg[ue.ue_id as usize] + 0.01 * served;
        }
    }
    let total: u64 = totals.iter().sum();
    for t in &totals {
        let share = *t as f64 / total as f64;
        let even = 1.0 / n_ues as f64;
        assert!(
            (share - even).abs() / even <= 0.005,
            "PF share {share} vs {even}"
        );
    }

    // waterfilling equalizes served bytes within one TB across identical
    // backlogged users
    let range = RbgRange(0, 16);
    let mut ues: Vec<SchedUe> = (0..5)
        .map(|i| SchedUe {
            ue_id: i,
            efficiency: 6000.0,
            remaining_bits: u64::MAX / 2,
            pf_avg: 1.0,
            granted: 0,
        })
        .collect();
    let mut alloc = vec![None; 17];
    let mut rr = 0usize;
    allocate_slice(SchedPolicy::Waterfilling, range, &mut ues, &mut rr, &mut alloc);
    let served: Vec<u64> = ues.iter().map(|u| u.granted as u64 * 6000).collect();
    let (lo, hi) = (
        *served.iter().min().unwrap(),
        *served.iter().max().unwrap(),
    );
    assert!(hi - lo <= 6000, "waterfilling spread {} bits", hi - lo);

    pass(6, "RR exact, PF equalizes within 0.5%, WF within one TB");
}

// --- criterion 7: agent numerics ---------------------------------------------

#[test]
fn criterion_7_agent_numerics() {
    let t0 = Instant::now();

    // gradient check over 20 random nets
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let n_in = rng.random_range(2..8);
        let n_out = rng.random_range(1..6);
        let mut net = Mlp::new(n_in, n_out, &mut rng);
        let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
        // scalar loss: weighted sum of outputs
        let w: Vec<f64> = (0..n_out).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cache = net.forward(&x);
        let mut grads = Grads::zeros_like(&net);
        net.backward(&cache, &w, &mut grads);
        let analytic = grads.to_vec();
        let p0 = net.params_to_vec();
        let eps = 1e-5;
        let mut max_rel = 0.0f64;
        for i in (0..p0.len()).step_by(29) {
            let mut p = p0.clone();
            p[i] += eps;
            net.params_from_vec(&p);
            let up: f64 = net.forward(&x).output().iter().zip(&w).map(|(o, w)| o * w).sum();
            p[i] -= 2.0 * eps;
            net.params_from_vec(&p);
            let down: f64 = net.forward(&x).output().iter().zip(&w).map(|(o, w)| o * w).sum();
            let fd = (up - down) / (2.0 * eps);
            let denom = analytic[i].abs().max(fd.abs()).max(1e-8);
            max_rel = max_rel.max((analytic[i] - fd).abs() / denom);
        }
        assert!(max_rel <= 1e-4, "net {trial}: max relative error {max_rel}");
    }

    // trained policy beats the uniform-random policy, 95% confidence over
    // 10 seeds
    let scenario = default_frozen_scenario(ActionSpace::joint(2, 17));
    let cfg = PpoConfig {
        lr: 3e-3,
        horizon: 16,
        ..PpoConfig::default()
    };
    let episodes = 25;
    let tail = 8; // score = mean reward over the last `tail` episodes
    let mut diffs = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (_, rows) = agent::train(&scenario, &cfg, episodes, &mut rng).unwrap();
        let trained: f64 =
            rows[episodes - tail..].iter().map(|r| r.mean_reward).sum::<f64>() / tail as f64;
        // random baseline over the same episode schedule
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let mut random_total = 0.0;
        let mut n = 0usize;
        for ep in (episodes - tail)..episodes {
            let mut episode = Episode::new(&scenario, ep as u64);
            for _ in 0..cfg.horizon {
                let a = rng.random_range(0..scenario.n_actions());
                random_total += episode.step(a);
                n += 1;
            }
        }
        diffs.push(trained - random_total / n as f64);
    }
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
        / (diffs.len() - 1) as f64;
    let t_stat = mean / (var / diffs.len() as f64).sqrt();
    // one-sided t(9) critical value at 95%
    assert!(
        t_stat > 1.833,
        "trained vs random: mean diff {mean:.4}, t={t_stat:.2}, diffs {diffs:?}"
    );
    assert!(t0.elapsed() <= Duration::from_secs(600), "{:?}", t0.elapsed());
    pass(7, "gradients within 1e-4; trained policy beats random (95%)");
}

// --- criterion 8: determinism ------------------------------------------------

#[test]
fn criterion_8_determinism() {
    for plan in [build_stairs_plan(), build_v_plan(), build_prioritization_plan()] {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_experiment(&plan, Some(42), d1.path()).unwrap();
        run_experiment(&plan, Some(42), d2.path()).unwrap();
        let csv = format!("{}.csv", plan.bs_id);
        let a = std::fs::read(d1.path().join("kpm").join(&csv)).unwrap();
        let b = std::fs::read(d2.path().join("kpm").join(&csv)).unwrap();
        assert_eq!(a, b, "{}: KPM CSVs differ", plan.name);
        for file in ["config.json", "summary.json", "ric.log.jsonl"] {
            assert_eq!(
                std::fs::read(d1.path().join(file)).unwrap(),
                std::fs::read(d2.path().join(file)).unwrap(),
                "{}: {file} differs",
                plan.name
            );
        }
    }
    pass(8, "same plan and seed give byte-identical outputs");
}

// --- criterion 9: offline/online equivalence ---------------------------------

#[test]
fn criterion_9_offline_online_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = build_stairs_plan();
    plan.duration_ms = 5_000;
    plan.timeline.clear();
    let w = 4;
    let out = run_with_monitor_xapp(&plan, None, dir.path(), w).unwrap();

    // live features: the monitoring xApp's in-memory decision log
    let live: Vec<Vec<f64>> = out
        .xapp_logs
        .iter()
        .find(|(id, _)| id == "monitor")
        .expect("monitor xApp log missing")
        .1
        .iter()
        .map(|row| row.features.clone())
        .collect();
    assert!(!live.is_empty());

    // offline features: replay the recorded CSV through the same pipeline
    let csv = dir.path().join("kpm").join(format!("{}.csv", plan.bs_id));
    let offline = replay_into_features(&[csv], w, plan.scenario.n_slices()).unwrap();
    assert_eq!(live.len(), offline.len());
    for (i, (l, o)) in live.iter().zip(&offline).enumerate() {
        assert_eq!(l, o, "feature vector {i} differs");
    }
    pass(9, "replayed features equal live features exactly");
}
