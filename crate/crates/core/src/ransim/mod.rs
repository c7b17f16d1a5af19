//! Deterministic per-TTI simulator of sliced base stations.

pub mod cell;
pub mod config;
pub mod kpm;
pub mod sched;

pub use cell::{Cell, ControlDirective, KpmRecord, SliceTable};
pub use config::{
    check_ranges_disjoint, parse_radio_config, ConfigError, FadingConfig, RbgRange,
    ScenarioConfig, SchedPolicy, TrafficModel, UeSpec,
};
