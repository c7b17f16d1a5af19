//! Experiment harness: plans, deterministic engine, TCP transport mode,
//! run summaries, and dataset replay.

pub mod engine;
pub mod net;
pub mod plan;
pub mod replay;
pub mod summary;

pub use engine::{run_experiment, run_with_monitor_xapp, RunError, RunOutput};
pub use net::{run_experiment_net, DEFAULT_E2_PORT};
pub use plan::{
    build_prioritization_plan, build_stairs_plan, build_v_plan, validate_plan, EventKind,
    ExperimentPlan, TimedEvent, TimelineConflict, XappSpec, MINUTE_MS,
};
pub use replay::{replay_dataset, replay_into_features, ReplayError};
pub use summary::{compute_summary, export_summary, CdfPoint, RunSummary, SummaryError};
