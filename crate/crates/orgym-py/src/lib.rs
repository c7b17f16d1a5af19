//! Python bindings for the closed-loop RAN control stack: the TTI-level
//! cell simulator, the framed control-plane codec, experiment plans of the
//! catalog, the run harness, offline feature replay, and policy training.
//!
//! Structured values cross the boundary as JSON strings so the Python side
//! sees exactly the formats the CLI and run directories use.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use orgym_core::agent::{self, frozen_from_config, oracle_policy, Checkpoint, PpoConfig};
use orgym_core::e2lite;
use orgym_core::harness::{
    self, build_prioritization_plan, build_stairs_plan, build_v_plan, ExperimentPlan,
};
use orgym_core::ransim::{self, kpm};
use orgym_core::xapp::{self, ActionSpace};

fn val_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

// ---------------------------------------------------------------------------
// Cell simulator
// ---------------------------------------------------------------------------

/// One base station: slices, users, schedulers, telemetry.
#[pyclass]
struct Cell {
    inner: ransim::Cell,
}

#[pymethods]
impl Cell {
    /// Build a cell from a scenario config (JSON, SCOPE-style keys).
    #[new]
    fn new(config_json: &str, bs_id: &str) -> PyResult<Self> {
        let cfg = ransim::parse_radio_config(config_json).map_err(val_err)?;
        Ok(Self {
            inner: ransim::Cell::new(cfg, bs_id),
        })
    }

    /// Advance one TTI; returns the per-RBG UE grants (None = idle).
    fn step_tti(&mut self) -> Vec<Option<u32>> {
        self.inner.step_tti()
    }

    /// Close the current KPM window at `ts_ms`; returns one JSON object per
    /// (slice, UE) with the CSV schema's fields.
    fn emit_kpm_window(&mut self, ts_ms: u64) -> PyResult<Vec<String>> {
        self.inner
            .emit_kpm_window(ts_ms)
            .iter()
            .map(|r| serde_json::to_string(r).map_err(run_err))
            .collect()
    }

    /// Stage a control directive (JSON); takes effect on the next TTI.
    fn apply_control(&mut self, directive_json: &str) -> PyResult<()> {
        let d: ransim::ControlDirective =
            serde_json::from_str(directive_json).map_err(val_err)?;
        self.inner.apply_control(&d).map_err(val_err)
    }
}

// ---------------------------------------------------------------------------
// Wire codec
// ---------------------------------------------------------------------------

/// Encode one control-plane message (JSON with a "type" tag) into its frame:
/// 4-byte big-endian length, 1-byte message type, canonical JSON body.
#[pyfunction]
fn encode_frame(message_json: &str) -> PyResult<Vec<u8>> {
    let msg = e2lite::E2Message::from_tagged_json(message_json).map_err(val_err)?;
    e2lite::encode_frame(&msg).map_err(val_err)
}

/// Decode one frame; returns (message_json, bytes_consumed).
#[pyfunction]
fn decode_frame(buf: &[u8]) -> PyResult<(String, usize)> {
    let (msg, used) = e2lite::decode_frame(buf).map_err(val_err)?;
    Ok((msg.to_tagged_json().map_err(run_err)?, used))
}

// ---------------------------------------------------------------------------
// Plans and experiments
// ---------------------------------------------------------------------------

/// A catalog experiment plan as JSON: "stairs", "v", or "prioritize".
#[pyfunction]
fn catalog_plan(name: &str) -> PyResult<String> {
    let plan = match name {
        "stairs" => build_stairs_plan(),
        "v" => build_v_plan(),
        "prioritize" => build_prioritization_plan(),
        other => return Err(val_err(format!("unknown plan '{other}'"))),
    };
    serde_json::to_string_pretty(&plan).map_err(run_err)
}

/// Run a plan on the in-process deterministic transport, writing the run
/// directory (config.json, kpm/, xapp/, ric.log.jsonl, summary.json,
/// meta.json). Returns the run summary as JSON.
#[pyfunction]
#[pyo3(signature = (plan_json, out_dir, seed=None))]
fn run_experiment(plan_json: &str, out_dir: &str, seed: Option<u64>) -> PyResult<String> {
    let plan: ExperimentPlan = serde_json::from_str(plan_json).map_err(val_err)?;
    let out = harness::run_experiment(&plan, seed, std::path::Path::new(out_dir))
        .map_err(run_err)?;
    serde_json::to_string_pretty(&out.summary).map_err(run_err)
}

/// Recompute summary.json for an existing run directory.
#[pyfunction]
fn export_summary(run_dir: &str) -> PyResult<String> {
    let s = harness::export_summary(std::path::Path::new(run_dir)).map_err(run_err)?;
    serde_json::to_string_pretty(&s).map_err(run_err)
}

/// Feed recorded KPM CSVs through the xApp feature pipeline; returns one
/// feature vector (3 x n_slices means over the last `w` windows) per window
/// once `w` windows of history exist.
#[pyfunction]
fn replay_into_features(paths: Vec<String>, w: usize, n_slices: usize) -> PyResult<Vec<Vec<f64>>> {
    let paths: Vec<PathBuf> = paths.into_iter().map(PathBuf::from).collect();
    harness::replay_into_features(&paths, w, n_slices).map_err(val_err)
}

/// Parse a KPM CSV into JSON records (schema-checked).
#[pyfunction]
fn parse_kpm_csv(text: &str) -> PyResult<Vec<String>> {
    kpm::parse_csv(text)
        .map_err(val_err)?
        .iter()
        .map(|r| serde_json::to_string(r).map_err(run_err))
        .collect()
}

// ---------------------------------------------------------------------------
// Agent
// ---------------------------------------------------------------------------

fn scenario_from_plan(plan_json: &str) -> PyResult<agent::FrozenScenario> {
    let plan: ExperimentPlan = serde_json::from_str(plan_json).map_err(val_err)?;
    frozen_from_config(plan.scenario, &plan.bs_id).map_err(val_err)
}

/// Exhaustive scan of the joint action space on a frozen two-slice scenario;
/// returns (best_action_id, per-action mean rewards).
#[pyfunction]
#[pyo3(signature = (plan_json, horizon_epochs=2))]
fn oracle_table(plan_json: &str, horizon_epochs: usize) -> PyResult<(usize, Vec<f64>)> {
    let scenario = scenario_from_plan(plan_json)?;
    oracle_policy(&scenario, horizon_epochs).map_err(val_err)
}

/// Train the on-policy agent on a frozen scenario. Returns training-log CSV
/// rows ("episode,mean_reward,actor_loss,critic_loss") and writes a
/// checkpoint if a path is given.
#[pyfunction]
#[pyo3(signature = (plan_json, episodes, seed=0, checkpoint_path=None, lr=None))]
fn train(
    plan_json: &str,
    episodes: usize,
    seed: u64,
    checkpoint_path: Option<String>,
    lr: Option<f64>,
) -> PyResult<Vec<String>> {
    let scenario = scenario_from_plan(plan_json)?;
    let mut cfg = PpoConfig::default();
    if let Some(lr) = lr {
        cfg.lr = lr;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nets, rows) = agent::train(&scenario, &cfg, episodes, &mut rng).map_err(run_err)?;
    if let Some(path) = checkpoint_path {
        Checkpoint::from_nets(&nets)
            .save(std::path::Path::new(&path))
            .map_err(run_err)?;
    }
    Ok(rows.iter().map(agent::ppo::training_log_row).collect())
}

/// Size of the joint action space (scheduling policies x RBG partitions)
/// for a two-slice cell with the given RBG count.
#[pyfunction]
fn joint_action_count(n_slices: usize, rbg_count: u16) -> usize {
    ActionSpace::joint(n_slices, rbg_count).len()
}

/// Decode an action id into its control directive (JSON) for a node.
#[pyfunction]
fn action_directive(n_slices: usize, rbg_count: u16, action_id: usize, node_id: &str) -> PyResult<String> {
    let space = ActionSpace::joint(n_slices, rbg_count);
    if action_id >= space.len() {
        return Err(val_err(format!(
            "action id {action_id} out of range (space has {})",
            space.len()
        )));
    }
    serde_json::to_string(&space.directive(action_id, node_id)).map_err(run_err)
}

/// Per-slice feature vector from raw KPM records (JSON strings), using the
/// same reducer the xApps run online.
#[pyfunction]
fn window_features(record_jsons: Vec<String>, w: usize, n_slices: usize) -> PyResult<Vec<f64>> {
    let records: Vec<ransim::KpmRecord> = record_jsons
        .iter()
        .map(|s| serde_json::from_str(s).map_err(val_err))
        .collect::<PyResult<_>>()?;
    let windows = xapp::aggregate_windows(&records);
    xapp::window_features(&windows, w, n_slices).map_err(val_err)
}

#[pymodule]
fn orgym_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Cell>()?;
    m.add_function(wrap_pyfunction!(encode_frame, m)?)?;
    m.add_function(wrap_pyfunction!(decode_frame, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_plan, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(export_summary, m)?)?;
    m.add_function(wrap_pyfunction!(replay_into_features, m)?)?;
    m.add_function(wrap_pyfunction!(parse_kpm_csv, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_table, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(joint_action_count, m)?)?;
    m.add_function(wrap_pyfunction!(action_directive, m)?)?;
    m.add_function(wrap_pyfunction!(window_features, m)?)?;
    m.add("DEFAULT_E2_PORT", harness::DEFAULT_E2_PORT)?;
    Ok(())
}
