//! Experiment plans: a scenario, a timeline of scheduled events, and the
//! built-in catalog (stairs, V, prioritization).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ransim::{check_ranges_disjoint, parse_radio_config, RbgRange, ScenarioConfig};

pub const MINUTE_MS: u64 = 60_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    pub bs_id: String,
    pub duration_ms: u64,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub timeline: Vec<TimedEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimedEvent {
    pub at_ms: u64,
    #[serde(flatten)]
    pub event: EventKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Re-partition the cell's RBG ranges (issued through the controller).
    ApplyAllocation {
        #[serde(with = "alloc_keys")]
        allocation: BTreeMap<u32, RbgRange>,
    },
    /// Bring an xApp online (it subscribes on start).
    StartXapp { xapp: XappSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "xapp", rename_all = "snake_case")]
pub enum XappSpec {
    Prioritize {
        target_slice: u32,
        boost_share: f64,
        report_period_ms: u64,
    },
}

/// Slice-id map keys as JSON strings. The tagged-enum representation above
/// buffers values generically, which defeats serde_json's native
/// integer-key handling, so spell the conversion out.
mod alloc_keys {
    use super::*;
    use serde::de::Error;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<u32, RbgRange>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<u32, RbgRange>, D::Error> {
        let raw = BTreeMap::<String, RbgRange>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("bad slice id key {k:?}")))
            })
            .collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TimelineConflict {
    #[error("timeline events out of order at t={0} ms")]
    OutOfOrder(u64),
    #[error("event at t={at} ms beyond run duration {duration} ms")]
    BeyondDuration { at: u64, duration: u64 },
    #[error("event references undefined slice {0}")]
    UndefinedSlice(u32),
    #[error("allocation invalid: {0}")]
    BadAllocation(String),
    #[error("xapp parameter invalid: {0}")]
    BadXapp(String),
}

/// Static plan validation: time-ordered events, every referenced slice
/// defined, allocations well-formed for the plan's cell.
pub fn validate_plan(plan: &ExperimentPlan) -> Result<(), TimelineConflict> {
    let n_slices = plan.scenario.n_slices() as u32;
    let mut prev = 0u64;
    for ev in &plan.timeline {
        if ev.at_ms < prev {
            return Err(TimelineConflict::OutOfOrder(ev.at_ms));
        }
        prev = ev.at_ms;
        if ev.at_ms >= plan.duration_ms {
            return Err(TimelineConflict::BeyondDuration {
                at: ev.at_ms,
                duration: plan.duration_ms,
            });
        }
        match &ev.event {
            EventKind::ApplyAllocation { allocation } => {
                for (slice, range) in allocation {
                    if *slice >= n_slices {
                        return Err(TimelineConflict::UndefinedSlice(*slice));
                    }
                    if range.first() > range.last() || range.last() >= plan.scenario.rbg_count {
                        return Err(TimelineConflict::BadAllocation(format!(
                            "range [{},{}] outside [0,{})",
                            range.first(),
                            range.last(),
                            plan.scenario.rbg_count
                        )));
                    }
                }
                check_ranges_disjoint(allocation, plan.scenario.rbg_count)
                    .map_err(|e| TimelineConflict::BadAllocation(e.to_string()))?;
            }
            EventKind::StartXapp {
                xapp:
                    XappSpec::Prioritize {
                        target_slice,
                        boost_share,
                        report_period_ms,
                    },
            } => {
                if *target_slice >= n_slices {
                    return Err(TimelineConflict::UndefinedSlice(*target_slice));
                }
                if !(*boost_share > 0.0 && *boost_share <= 0.9) {
                    return Err(TimelineConflict::BadXapp(format!(
                        "boost share {boost_share} outside (0, 0.9]"
                    )));
                }
                if *report_period_ms < plan.scenario.kpm_window_ms {
                    return Err(TimelineConflict::BadXapp(format!(
                        "report period {report_period_ms} ms below KPM window {} ms",
                        plan.scenario.kpm_window_ms
                    )));
                }
            }
        }
    }
    Ok(())
}

pub const CATALOG_BS_ID: &str = "gnb:311-048-01000501";

/// Percent-of-grid to RBG count; exact halves round up (applied to the
/// first-listed slice, the second takes the remainder).
fn pct_rbgs(pct: f64, rbg_count: u16) -> u16 {
    (pct / 100.0 * rbg_count as f64).round() as u16
}

fn two_slice_split(pct_a: f64, rbg_count: u16) -> BTreeMap<u32, RbgRange> {
    let a = pct_rbgs(pct_a, rbg_count);
    let mut m = BTreeMap::new();
    m.insert(0, RbgRange(0, a - 1));
    m.insert(1, RbgRange(a, rbg_count - 1));
    m
}

fn saturated_two_slice_scenario(pct_a: f64) -> ScenarioConfig {
    let rbg_count = 17u16;
    let a = pct_rbgs(pct_a, rbg_count);
    parse_radio_config(&format!(
        r#"{{"network-slicing": true,
            "rbg-count": {rbg_count},
            "slice-allocation": {{"0":[0,{}],"1":[{a},{}]}},
            "slice-scheduling-policy": [0,0],
            "slice-users": {{"0":[0,1],"1":[2,3]}},
            "ues": [{{"id":0,"spectral-efficiency":6000,"saturated":true}},
                    {{"id":1,"spectral-efficiency":6000,"saturated":true}},
                    {{"id":2,"spectral-efficiency":6000,"saturated":true}},
                    {{"id":3,"spectral-efficiency":6000,"saturated":true}}],
            "kpm-window-ms": 100,
            "seed": 1}}"#,
        a - 1,
        rbg_count - 1
    ))
    .expect("catalog scenario is valid")
}

/// Three one-minute phases: slice A on 75% / 50% / 25% of the RBGs, slice B
/// on the complement. Saturated downlink traffic on both slices.
pub fn build_stairs_plan() -> ExperimentPlan {
    let scenario = saturated_two_slice_scenario(75.0);
    let rbg = scenario.rbg_count;
    ExperimentPlan {
        name: "stairs".into(),
        bs_id: CATALOG_BS_ID.into(),
        duration_ms: 3 * MINUTE_MS,
        scenario,
        timeline: vec![
            TimedEvent {
                at_ms: MINUTE_MS,
                event: EventKind::ApplyAllocation {
                    allocation: two_slice_split(50.0, rbg),
                },
            },
            TimedEvent {
                at_ms: 2 * MINUTE_MS,
                event: EventKind::ApplyAllocation {
                    allocation: two_slice_split(25.0, rbg),
                },
            },
        ],
    }
}

/// Slice A on 75% / 25% / 75%, slice B on the complement.
pub fn build_v_plan() -> ExperimentPlan {
    let scenario = saturated_two_slice_scenario(75.0);
    let rbg = scenario.rbg_count;
    ExperimentPlan {
        name: "v".into(),
        bs_id: CATALOG_BS_ID.into(),
        duration_ms: 3 * MINUTE_MS,
        scenario,
        timeline: vec![
            TimedEvent {
                at_ms: MINUTE_MS,
                event: EventKind::ApplyAllocation {
                    allocation: two_slice_split(25.0, rbg),
                },
            },
            TimedEvent {
                at_ms: 2 * MINUTE_MS,
                event: EventKind::ApplyAllocation {
                    allocation: two_slice_split(75.0, rbg),
                },
            },
        ],
    }
}

/// Three slices on even 5/5/5 shares (two RBGs idle so the shares are
/// exactly equal); at t=150 s the prioritization xApp starts and boosts
/// slice 0 to 60% of the grid.
pub fn build_prioritization_plan() -> ExperimentPlan {
    let scenario = parse_radio_config(
        r#"{"network-slicing": true,
            "rbg-count": 17,
            "slice-allocation": {"0":[0,4],"1":[5,9],"2":[10,14]},
            "slice-scheduling-policy": [0,0,0],
            "slice-users": {"0":[0,1],"1":[2,3],"2":[4,5]},
            "ues": [{"id":0,"spectral-efficiency":6000,"saturated":true},
                    {"id":1,"spectral-efficiency":6000,"saturated":true},
                    {"id":2,"spectral-efficiency":6000,"saturated":true},
                    {"id":3,"spectral-efficiency":6000,"saturated":true},
                    {"id":4,"spectral-efficiency":6000,"saturated":true},
                    {"id":5,"spectral-efficiency":6000,"saturated":true}],
            "kpm-window-ms": 100,
            "seed": 1}"#,
    )
    .expect("catalog scenario is valid");
    ExperimentPlan {
        name: "prioritize".into(),
        bs_id: CATALOG_BS_ID.into(),
        duration_ms: 4 * MINUTE_MS,
        scenario,
        timeline: vec![TimedEvent {
            at_ms: 150_000,
            event: EventKind::StartXapp {
                xapp: XappSpec::Prioritize {
                    target_slice: 0,
                    boost_share: 0.6,
                    report_period_ms: 100,
                },
            },
        }],
    }
}
