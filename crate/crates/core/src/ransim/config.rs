//! Scenario configuration: SCOPE-style JSON keys plus simulator-only keys.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Inclusive RBG range `[first, last]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbgRange(pub u16, pub u16);

impl RbgRange {
    pub fn first(&self) -> u16 {
        self.0
    }
    pub fn last(&self) -> u16 {
        self.1
    }
    pub fn len(&self) -> u16 {
        self.1 - self.0 + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn contains(&self, rbg: u16) -> bool {
        rbg >= self.0 && rbg <= self.1
    }
    pub fn iter(&self) -> impl Iterator<Item = u16> {
        self.0..=self.1
    }
}

/// Slice scheduler codes as used by the config files: 0, 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SchedPolicy {
    RoundRobin,
    Waterfilling,
    ProportionalFair,
}

impl SchedPolicy {
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(SchedPolicy::RoundRobin),
            1 => Some(SchedPolicy::Waterfilling),
            2 => Some(SchedPolicy::ProportionalFair),
            _ => None,
        }
    }
    pub fn code(&self) -> u8 {
        match self {
            SchedPolicy::RoundRobin => 0,
            SchedPolicy::Waterfilling => 1,
            SchedPolicy::ProportionalFair => 2,
        }
    }
}

/// Downlink traffic offered to one UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrafficModel {
    /// Buffer pinned full every TTI.
    Saturated { saturated: bool },
    /// Constant bit rate in bits per second.
    Cbr {
        #[serde(rename = "traffic-bps")]
        rate_bps: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSpec {
    pub id: u32,
    /// Bits delivered by one RBG in one TTI.
    #[serde(rename = "spectral-efficiency")]
    pub efficiency_bits_per_rbg: f64,
    #[serde(flatten)]
    pub traffic: TrafficModel,
}

/// Optional AR(1) multiplicative fading on per-UE spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingConfig {
    pub coefficient: f64,
    pub sigma: f64,
}

/// Full experiment description for one cell, mirroring the SCOPE JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(rename = "network-slicing")]
    pub network_slicing: bool,
    #[serde(rename = "rbg-count")]
    pub rbg_count: u16,
    /// slice id -> inclusive RBG range. Keys are strings in the JSON form.
    #[serde(rename = "slice-allocation")]
    pub slice_allocation: BTreeMap<u32, RbgRange>,
    /// Policy code per slice, indexed by slice id.
    #[serde(rename = "slice-scheduling-policy")]
    pub slice_scheduling_policy: Vec<u8>,
    #[serde(rename = "slice-users")]
    pub slice_users: BTreeMap<u32, Vec<u32>>,
    pub ues: Vec<UeSpec>,
    #[serde(rename = "tti-ms")]
    pub tti_ms: u64,
    #[serde(rename = "kpm-window-ms")]
    pub kpm_window_ms: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fading: Option<FadingConfig>,
}

pub const DEFAULT_RBG_COUNT: u16 = 17;
pub const DEFAULT_TTI_MS: u64 = 1;
pub const DEFAULT_KPM_WINDOW_MS: u64 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("slice-allocation: RBG {rbg} claimed by slices {a} and {b}")]
    OverlappingRbgRanges { rbg: u16, a: u32, b: u32 },
    #[error("slice-scheduling-policy: unknown policy code {code} for slice {slice}")]
    UnknownPolicyCode { slice: u32, code: i64 },
    #[error("slice-users: UE {ue} listed more than once")]
    DuplicateUe { ue: u32 },
    #[error("slice-allocation: range [{first},{last}] for slice {slice} outside [0,{rbg_count})")]
    RangeOutOfBounds {
        slice: u32,
        first: u16,
        last: u16,
        rbg_count: u16,
    },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Deserialize, Default)]
struct RawConfig {
    #[serde(rename = "network-slicing")]
    network_slicing: Option<bool>,
    #[serde(rename = "rbg-count")]
    rbg_count: Option<u16>,
    #[serde(rename = "slice-allocation")]
    slice_allocation: Option<BTreeMap<String, (i64, i64)>>,
    #[serde(rename = "slice-scheduling-policy")]
    slice_scheduling_policy: Option<Vec<i64>>,
    #[serde(rename = "slice-users")]
    slice_users: Option<BTreeMap<String, Vec<u32>>>,
    ues: Option<Vec<UeSpec>>,
    #[serde(rename = "tti-ms")]
    tti_ms: Option<u64>,
    #[serde(rename = "kpm-window-ms")]
    kpm_window_ms: Option<u64>,
    seed: Option<u64>,
    fading: Option<FadingConfig>,
}

fn parse_slice_key(key: &str, field: &str) -> Result<u32, ConfigError> {
    key.parse().map_err(|_| ConfigError::Invalid {
        key: field.to_string(),
        reason: format!("slice id {key:?} is not an unsigned integer"),
    })
}

/// Parse and validate a SCOPE-style radio configuration.
///
/// Missing optional keys take the documented defaults; `network-slicing`
/// defaults to true when `slice-allocation` is present.
pub fn parse_radio_config(json_text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(json_text)
        .map_err(|e| ConfigError::MalformedJson(e.to_string()))?;

    let rbg_count = raw.rbg_count.unwrap_or(DEFAULT_RBG_COUNT);
    if rbg_count == 0 {
        return Err(ConfigError::Invalid {
            key: "rbg-count".into(),
            reason: "must be positive".into(),
        });
    }
    let network_slicing = raw
        .network_slicing
        .unwrap_or(raw.slice_allocation.is_some());

    let mut slice_allocation = BTreeMap::new();
    if let Some(alloc) = &raw.slice_allocation {
        for (k, &(first, last)) in alloc {
            let slice = parse_slice_key(k, "slice-allocation")?;
            if first < 0 || last < first || last >= rbg_count as i64 {
                return Err(ConfigError::RangeOutOfBounds {
                    slice,
                    first: first.max(0) as u16,
                    last: last.max(0) as u16,
                    rbg_count,
                });
            }
            slice_allocation.insert(slice, RbgRange(first as u16, last as u16));
        }
    }

    let mut slice_users: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    if let Some(users) = &raw.slice_users {
        for (k, ues) in users {
            let slice = parse_slice_key(k, "slice-users")?;
            slice_users.insert(slice, ues.clone());
        }
    }

    // The slice id set is the union of the allocation and user maps; ids must
    // be contiguous from 0 so the positional policy list is well defined.
    let mut slice_ids: Vec<u32> = slice_allocation
        .keys()
        .chain(slice_users.keys())
        .copied()
        .collect();
    slice_ids.sort_unstable();
    slice_ids.dedup();
    let n_slices = if network_slicing {
        slice_ids.len().max(1)
    } else {
        1
    };
    if network_slicing {
        for (pos, id) in slice_ids.iter().enumerate() {
            if *id != pos as u32 {
                return Err(ConfigError::Invalid {
                    key: "slice-allocation".into(),
                    reason: format!("slice ids must be contiguous from 0, found {id}"),
                });
            }
        }
    }

    let codes = raw
        .slice_scheduling_policy
        .unwrap_or_else(|| vec![0; n_slices]);
    if codes.len() != n_slices {
        return Err(ConfigError::Invalid {
            key: "slice-scheduling-policy".into(),
            reason: format!("{} codes given for {} slices", codes.len(), n_slices),
        });
    }
    let mut slice_scheduling_policy = Vec::with_capacity(codes.len());
    for (slice, &code) in codes.iter().enumerate() {
        let policy = SchedPolicy::from_code(code).ok_or(ConfigError::UnknownPolicyCode {
            slice: slice as u32,
            code,
        })?;
        slice_scheduling_policy.push(policy.code());
    }

    let ues = raw.ues.unwrap_or_default();

    let cfg = ScenarioConfig {
        network_slicing,
        rbg_count,
        slice_allocation,
        slice_scheduling_policy,
        slice_users,
        ues,
        tti_ms: raw.tti_ms.unwrap_or(DEFAULT_TTI_MS),
        kpm_window_ms: raw.kpm_window_ms.unwrap_or(DEFAULT_KPM_WINDOW_MS),
        seed: raw.seed.unwrap_or(0),
        fading: raw.fading,
    };
    validate_config(&cfg)?;
    Ok(cfg)
}

/// Range disjointness check shared by config parsing and control validation.
pub fn check_ranges_disjoint(
    ranges: &BTreeMap<u32, RbgRange>,
    rbg_count: u16,
) -> Result<(), ConfigError> {
    let mut owner: Vec<Option<u32>> = vec![None; rbg_count as usize];
    for (&slice, range) in ranges {
        if range.last() >= rbg_count {
            return Err(ConfigError::RangeOutOfBounds {
                slice,
                first: range.first(),
                last: range.last(),
                rbg_count,
            });
        }
        for rbg in range.iter() {
            if let Some(prev) = owner[rbg as usize] {
                return Err(ConfigError::OverlappingRbgRanges {
                    rbg,
                    a: prev,
                    b: slice,
                });
            }
            owner[rbg as usize] = Some(slice);
        }
    }
    Ok(())
}

/// Check all ScenarioConfig invariants.
pub fn validate_config(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    check_ranges_disjoint(&cfg.slice_allocation, cfg.rbg_count)?;

    if cfg.tti_ms == 0 {
        return Err(ConfigError::Invalid {
            key: "tti-ms".into(),
            reason: "must be positive".into(),
        });
    }
    if cfg.kpm_window_ms == 0 || cfg.kpm_window_ms % cfg.tti_ms != 0 {
        return Err(ConfigError::Invalid {
            key: "kpm-window-ms".into(),
            reason: "must be a positive multiple of tti-ms".into(),
        });
    }

    for code in &cfg.slice_scheduling_policy {
        if SchedPolicy::from_code(*code as i64).is_none() {
            return Err(ConfigError::UnknownPolicyCode {
                slice: 0,
                code: *code as i64,
            });
        }
    }

    // Every UE in slice-users must exist exactly once and belong to one slice.
    let mut seen = std::collections::BTreeSet::new();
    for ues in cfg.slice_users.values() {
        for ue in ues {
            if !seen.insert(*ue) {
                return Err(ConfigError::DuplicateUe { ue: *ue });
            }
            if !cfg.ues.iter().any(|s| s.id == *ue) {
                return Err(ConfigError::Invalid {
                    key: "slice-users".into(),
                    reason: format!("UE {ue} not present in ues"),
                });
            }
        }
    }
    let mut ue_ids = std::collections::BTreeSet::new();
    for ue in &cfg.ues {
        if !ue_ids.insert(ue.id) {
            return Err(ConfigError::DuplicateUe { ue: ue.id });
        }
        if !(ue.efficiency_bits_per_rbg > 0.0) || !ue.efficiency_bits_per_rbg.is_finite() {
            return Err(ConfigError::Invalid {
                key: "ues".into(),
                reason: format!("UE {} spectral-efficiency must be finite positive", ue.id),
            });
        }
    }
    Ok(())
}

impl ScenarioConfig {
    /// Number of slices (1 when slicing is disabled).
    pub fn n_slices(&self) -> usize {
        if self.network_slicing {
            self.slice_scheduling_policy.len()
        } else {
            1
        }
    }

    /// UE ids of one slice. With slicing disabled all UEs sit in slice 0.
    pub fn slice_ue_ids(&self, slice: u32) -> Vec<u32> {
        if self.network_slicing {
            self.slice_users.get(&slice).cloned().unwrap_or_default()
        } else if slice == 0 {
            self.ues.iter().map(|u| u.id).collect()
        } else {
            Vec::new()
        }
    }

    /// Active RBG range of one slice (full band when slicing is disabled).
    pub fn slice_range(&self, slice: u32) -> Option<RbgRange> {
        if self.network_slicing {
            self.slice_allocation.get(&slice).copied()
        } else if slice == 0 {
            Some(RbgRange(0, self.rbg_count - 1))
        } else {
            None
        }
    }
}
