//! Frozen-scenario environment: deterministic episodes against the
//! simulator, one control action per decision epoch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::reward::{compute_reward, RewardWeights};
use crate::ransim::{Cell, KpmRecord, ScenarioConfig};
use crate::xapp::{aggregate_windows, window_features, ActionSpace, FeatureVector};

/// A fully pinned scenario for oracle evaluation and offline training.
#[derive(Debug, Clone)]
pub struct FrozenScenario {
    pub cfg: ScenarioConfig,
    pub bs_id: String,
    pub broadband_slice: u32,
    pub time_sensitive_slice: u32,
    pub weights: RewardWeights,
    pub space: ActionSpace,
    /// KPM windows per decision epoch.
    pub epoch_windows: usize,
    /// Feature history length (W).
    pub feature_windows: usize,
}

impl FrozenScenario {
    pub fn n_actions(&self) -> usize {
        self.space.len()
    }

    pub fn obs_dim(&self) -> usize {
        3 * self.cfg.n_slices()
    }

    fn run_epoch(&self, cell: &mut Cell, ts0: u64) -> Vec<KpmRecord> {
        let ttis_per_window = (self.cfg.kpm_window_ms / self.cfg.tti_ms) as usize;
        let mut records = Vec::new();
        for w in 0..self.epoch_windows as u64 {
            for _ in 0..ttis_per_window {
                cell.step_tti();
            }
            records.extend(cell.emit_kpm_window(ts0 + (w + 1) * self.cfg.kpm_window_ms));
        }
        records
    }

    /// Simulate one action for `horizon_epochs` from an identical snapshot
    /// and return the mean per-epoch reward.
    pub fn evaluate_action(&self, action_id: usize, horizon_epochs: usize) -> f64 {
        let mut cell = Cell::new(self.cfg.clone(), &self.bs_id);
        let d = self.space.directive(action_id, &self.bs_id);
        cell.apply_control(&d).expect("catalog action must validate");
        let mut total = 0.0;
        let mut ts = 0;
        for _ in 0..horizon_epochs {
            let records = self.run_epoch(&mut cell, ts);
            ts += self.epoch_windows as u64 * self.cfg.kpm_window_ms;
            total += compute_reward(
                &records,
                &self.weights,
                self.broadband_slice,
                self.time_sensitive_slice,
            )
            .expect("both slices present");
        }
        total / horizon_epochs as f64
    }

    /// Scale raw features to roughly unit range for the nets.
    pub fn scale_obs(&self, features: &FeatureVector) -> Vec<f64> {
        let n = self.cfg.n_slices();
        let mut out = Vec::with_capacity(3 * n);
        for s in 0..n {
            let thr = features[3 * s];
            let buf = features[3 * s + 1];
            let tbs = features[3 * s + 2];
            out.push((thr / 50.0).clamp(-5.0, 5.0));
            out.push((buf / self.weights.buf_ref).clamp(-5.0, 5.0));
            out.push((tbs / self.weights.tb_ref).clamp(-5.0, 5.0));
        }
        out
    }
}

/// One live episode against a frozen scenario.
pub struct Episode {
    scenario: FrozenScenario,
    cell: Cell,
    windows: Vec<crate::xapp::WindowAggregate>,
    ts: u64,
    #[allow(dead_code)]
    rng: ChaCha8Rng,
}

impl Episode {
    pub fn new(scenario: &FrozenScenario, seed: u64) -> Self {
        let mut cfg = scenario.cfg.clone();
        cfg.seed = cfg.seed.wrapping_add(seed);
        let mut ep = Episode {
            scenario: scenario.clone(),
            cell: Cell::new(cfg, &scenario.bs_id),
            windows: Vec::new(),
            ts: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        // warm-up: fill the feature history under the initial configuration
        for _ in 0..scenario.feature_windows.div_ceil(scenario.epoch_windows) {
            let recs = ep.advance_epoch();
            ep.windows.extend(aggregate_windows(&recs));
        }
        ep
    }

    fn advance_epoch(&mut self) -> Vec<KpmRecord> {
        let records = self.scenario.run_epoch(&mut self.cell, self.ts);
        self.ts += self.scenario.epoch_windows as u64 * self.scenario.cfg.kpm_window_ms;
        records
    }

    pub fn observe(&self) -> Vec<f64> {
        let features = window_features(
            &self.windows,
            self.scenario.feature_windows,
            self.scenario.cfg.n_slices(),
        )
        .expect("warm-up guarantees history");
        self.scenario.scale_obs(&features)
    }

    /// Apply an action, run one epoch, return its reward.
    pub fn step(&mut self, action_id: usize) -> f64 {
        let d = self.scenario.space.directive(action_id, &self.scenario.bs_id);
        self.cell.apply_control(&d).expect("catalog action valid");
        let records = self.advance_epoch();
        let reward = compute_reward(
            &records,
            &self.scenario.weights,
            self.scenario.broadband_slice,
            self.scenario.time_sensitive_slice,
        )
        .expect("both slices present");
        self.windows.extend(aggregate_windows(&records));
        let keep = self.scenario.feature_windows.max(8);
        if self.windows.len() > keep {
            self.windows.drain(..self.windows.len() - keep);
        }
        reward
    }
}

/// Freeze an arbitrary two-slice config for training: slice 0 is treated as
/// broadband, slice 1 as time-sensitive. Reward references come from a
/// short calibration run at the configured allocation.
pub fn frozen_from_config(cfg: ScenarioConfig, bs_id: &str) -> Result<FrozenScenario, String> {
    if cfg.n_slices() != 2 {
        return Err(format!(
            "training scenario needs exactly 2 slices, got {}",
            cfg.n_slices()
        ));
    }
    let space = ActionSpace::joint(2, cfg.rbg_count);
    let mut sc = FrozenScenario {
        cfg,
        bs_id: bs_id.to_string(),
        broadband_slice: 0,
        time_sensitive_slice: 1,
        // placeholder references; replaced after calibration
        weights: RewardWeights::new(0.5, 0.5, 1.0, 1.0).unwrap(),
        space,
        epoch_windows: 4,
        feature_windows: 4,
    };
    let mut cell = Cell::new(sc.cfg.clone(), bs_id);
    let records = sc.run_epoch(&mut cell, 0);
    let tbs: u64 = records
        .iter()
        .filter(|r| r.slice_id == 0)
        .map(|r| r.dl_tx_tbs)
        .sum();
    let windows: std::collections::BTreeSet<u64> = records.iter().map(|r| r.ts_ms).collect();
    let buf: u64 = records
        .iter()
        .filter(|r| r.slice_id == 1)
        .map(|r| r.dl_buffer_bytes)
        .sum();
    let tb_ref = (tbs as f64).max(1.0);
    let buf_ref = (buf as f64 / windows.len().max(1) as f64).max(40_000.0);
    sc.weights = RewardWeights::new(0.5, 0.5, tb_ref, buf_ref).unwrap();
    Ok(sc)
}

/// The frozen two-slice scenario used across tests and the CLI: slice 0
/// broadband (saturated), slice 1 time-sensitive (CBR).
pub fn default_frozen_scenario(space: ActionSpace) -> FrozenScenario {
    let cfg = crate::ransim::parse_radio_config(
        r#"{"network-slicing": true,
            "rbg-count": 17,
            "slice-allocation": {"0":[0,7],"1":[8,16]},
            "slice-scheduling-policy": [0,0],
            "slice-users": {"0":[0,1],"1":[2,3]},
            "ues": [{"id":0,"spectral-efficiency":6000,"saturated":true},
                    {"id":1,"spectral-efficiency":6000,"saturated":true},
                    {"id":2,"spectral-efficiency":6000,"traffic-bps":9000000},
                    {"id":3,"spectral-efficiency":6000,"traffic-bps":9000000}],
            "kpm-window-ms": 100,
            "seed": 1}"#,
    )
    .unwrap();
    // tb_ref: 2 backlogged UEs x 100 TTIs/window x 4 windows = 800 TBs max
    let weights = RewardWeights::new(0.5, 0.5, 800.0, 40_000.0).unwrap();
    FrozenScenario {
        cfg,
        bs_id: "gnb:311-048-01000501".to_string(),
        broadband_slice: 0,
        time_sensitive_slice: 1,
        weights,
        space,
        epoch_windows: 4,
        feature_windows: 4,
    }
}
