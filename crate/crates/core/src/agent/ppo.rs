//! Clipped-surrogate policy optimization over the frozen-scenario episodes.
//! Everything here is hand-rolled on top of the dense nets in `net` so the
//! analytic gradients can be validated against finite differences.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::env::{Episode, FrozenScenario};
use super::net::{softmax, Adam, Grads, Mlp};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub lr: f64,
    /// Decisions collected per episode before an update.
    pub horizon: usize,
    /// Gradient passes over each collected trajectory.
    pub update_epochs: usize,
    pub entropy_coef: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip: 0.2,
            gamma: 0.99,
            lr: 3e-4,
            horizon: 16,
            update_epochs: 4,
            entropy_coef: 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PpoError {
    #[error("non-finite gradient encountered; update aborted")]
    NonFiniteGradient,
    #[error("checkpoint rejected: {0}")]
    BadCheckpoint(String),
}

/// Actor (logits over actions) and critic (scalar value) with optimizers.
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl ActorCritic {
    pub fn new<R: Rng>(obs_dim: usize, n_actions: usize, lr: f64, rng: &mut R) -> Self {
        let actor = Mlp::new(obs_dim, n_actions, rng);
        let critic = Mlp::new(obs_dim, 1, rng);
        let actor_opt = Adam::new(lr, actor.n_params());
        let critic_opt = Adam::new(lr, critic.n_params());
        ActorCritic {
            actor,
            critic,
            actor_opt,
            critic_opt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Sample,
    Greedy,
}

/// Pick an action and return its log-probability under the current actor.
/// Greedy ties break toward the lowest action index.
pub fn act<R: Rng>(actor: &Mlp, obs: &[f64], mode: ActMode, rng: &mut R) -> (usize, f64) {
    let probs = softmax(actor.forward(obs).output());
    let a = match mode {
        ActMode::Greedy => {
            let mut best = 0;
            for (i, p) in probs.iter().enumerate() {
                if *p > probs[best] {
                    best = i;
                }
            }
            best
        }
        ActMode::Sample => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        }
    };
    (a, probs[a].max(1e-300).ln())
}

/// On-policy rollout buffer.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub logps: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Reward-to-go with discount `gamma`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Log-probability of `action` under the actor's softmax policy.
pub fn log_prob(actor: &Mlp, obs: &[f64], action: usize) -> f64 {
    let probs = softmax(actor.forward(obs).output());
    probs[action].max(1e-300).ln()
}

/// Mean clipped-surrogate actor loss (plus entropy bonus) for the current
/// actor parameters against a fixed trajectory. Used directly by the
/// finite-difference gradient checks.
pub fn actor_loss(actor: &Mlp, traj: &Trajectory, advantages: &[f64], cfg: &PpoConfig) -> f64 {
    let n = traj.len() as f64;
    let mut total = 0.0;
    for t in 0..traj.len() {
        let probs = softmax(actor.forward(&traj.obs[t]).output());
        let logp = probs[traj.actions[t]].max(1e-300).ln();
        let ratio = (logp - traj.logps[t]).exp();
        let adv = advantages[t];
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        let entropy: f64 = -probs.iter().map(|p| p * p.max(1e-300).ln()).sum::<f64>();
        total += -unclipped.min(clipped) - cfg.entropy_coef * entropy;
    }
    total / n
}

/// Analytic gradient of `actor_loss` with respect to the actor parameters.
pub fn actor_grads(
    actor: &Mlp,
    traj: &Trajectory,
    advantages: &[f64],
    cfg: &PpoConfig,
) -> Grads {
    let n = traj.len() as f64;
    let mut grads = Grads::zeros_like(actor);
    for t in 0..traj.len() {
        let cache = actor.forward(&traj.obs[t]);
        let probs = softmax(cache.output());
        let a = traj.actions[t];
        let logp = probs[a].max(1e-300).ln();
        let ratio = (logp - traj.logps[t]).exp();
        let adv = advantages[t];
        // min(r*A, clip(r)*A) has zero gradient once the clipped branch is
        // active and binding; otherwise dL/dlogp = -A*r.
        let clip_active =
            (adv >= 0.0 && ratio > 1.0 + cfg.clip) || (adv < 0.0 && ratio < 1.0 - cfg.clip);
        let dlogp = if clip_active { 0.0 } else { -adv * ratio / n };
        let entropy: f64 = -probs.iter().map(|p| p * p.max(1e-300).ln()).sum::<f64>();
        let mut d_logits = vec![0.0; probs.len()];
        for (k, dk) in d_logits.iter_mut().enumerate() {
            // d logp_a / d z_k = 1{k=a} - p_k
            let onehot = if k == a { 1.0 } else { 0.0 };
            *dk = dlogp * (onehot - probs[k]);
            // d(-H)/d z_k = p_k (ln p_k + H)
            *dk += cfg.entropy_coef * probs[k] * (probs[k].max(1e-300).ln() + entropy) / n;
        }
        actor.backward(&cache, &d_logits, &mut grads);
    }
    grads
}

/// Mean squared error of the critic against the discounted returns.
pub fn critic_loss(critic: &Mlp, traj: &Trajectory, returns: &[f64]) -> f64 {
    let n = traj.len() as f64;
    traj.obs
        .iter()
        .zip(returns)
        .map(|(obs, r)| {
            let v = critic.forward(obs).output()[0];
            (v - r) * (v - r)
        })
        .sum::<f64>()
        / n
}

pub fn critic_grads(critic: &Mlp, traj: &Trajectory, returns: &[f64]) -> Grads {
    let n = traj.len() as f64;
    let mut grads = Grads::zeros_like(critic);
    for (obs, r) in traj.obs.iter().zip(returns) {
        let cache = critic.forward(obs);
        let v = cache.output()[0];
        critic.backward(&cache, &[2.0 * (v - r) / n], &mut grads);
    }
    grads
}

#[derive(Debug, Clone, Copy)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub mean_reward: f64,
}

/// One full update over a collected trajectory. On a non-finite gradient the
/// networks and optimizer state are left untouched.
pub fn ppo_update(
    nets: &mut ActorCritic,
    traj: &Trajectory,
    cfg: &PpoConfig,
) -> Result<UpdateStats, PpoError> {
    assert!(!traj.is_empty());
    let returns = discounted_returns(&traj.rewards, cfg.gamma);
    // baseline from the pre-update critic, held fixed across epochs
    let advantages: Vec<f64> = traj
        .obs
        .iter()
        .zip(&returns)
        .map(|(obs, r)| r - nets.critic.forward(obs).output()[0])
        .collect();

    // dry-run all epochs on scratch copies so a blow-up midway leaves the
    // real networks unchanged
    let mut actor = nets.actor.clone();
    let mut critic = nets.critic.clone();
    let mut actor_opt = nets.actor_opt.clone();
    let mut critic_opt = nets.critic_opt.clone();
    let mut stats = UpdateStats {
        actor_loss: 0.0,
        critic_loss: 0.0,
        mean_reward: traj.rewards.iter().sum::<f64>() / traj.len() as f64,
    };
    for _ in 0..cfg.update_epochs {
        let ag = actor_grads(&actor, traj, &advantages, cfg);
        let cg = critic_grads(&critic, traj, &returns);
        if !ag.is_finite() || !cg.is_finite() {
            return Err(PpoError::NonFiniteGradient);
        }
        actor_opt.step(&mut actor, &ag);
        critic_opt.step(&mut critic, &cg);
    }
    stats.actor_loss = actor_loss(&actor, traj, &advantages, cfg);
    stats.critic_loss = critic_loss(&critic, traj, &returns);
    if !stats.actor_loss.is_finite() || !stats.critic_loss.is_finite() {
        return Err(PpoError::NonFiniteGradient);
    }
    nets.actor = actor;
    nets.critic = critic;
    nets.actor_opt = actor_opt;
    nets.critic_opt = critic_opt;
    Ok(stats)
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub obs_dim: usize,
    pub n_actions: usize,
    pub actor: Mlp,
    pub critic: Mlp,
}

impl Checkpoint {
    pub fn from_nets(nets: &ActorCritic) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            obs_dim: nets.actor.n_in(),
            n_actions: nets.actor.n_out(),
            actor: nets.actor.clone(),
            critic: nets.critic.clone(),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).unwrap())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, PpoError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PpoError::BadCheckpoint(e.to_string()))?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).map_err(|e| PpoError::BadCheckpoint(e.to_string()))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(PpoError::BadCheckpoint(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        if ckpt.actor.n_in() != ckpt.obs_dim || ckpt.actor.n_out() != ckpt.n_actions {
            return Err(PpoError::BadCheckpoint("shape header mismatch".into()));
        }
        Ok(ckpt)
    }

    pub fn into_nets(self, lr: f64) -> ActorCritic {
        let actor_opt = Adam::new(lr, self.actor.n_params());
        let critic_opt = Adam::new(lr, self.critic.n_params());
        ActorCritic {
            actor: self.actor,
            critic: self.critic,
            actor_opt,
            critic_opt,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainRow {
    pub episode: usize,
    pub mean_reward: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
}

pub const TRAINING_LOG_HEADER: &str = "episode,mean_reward,actor_loss,critic_loss";

pub fn training_log_row(r: &TrainRow) -> String {
    format!(
        "{},{:.6},{:.6},{:.6}",
        r.episode, r.mean_reward, r.actor_loss, r.critic_loss
    )
}

/// Run `episodes` on-policy episodes against a frozen scenario, one update
/// per episode. Deterministic given `seed`.
pub fn train<R: Rng>(
    scenario: &FrozenScenario,
    cfg: &PpoConfig,
    episodes: usize,
    rng: &mut R,
) -> Result<(ActorCritic, Vec<TrainRow>), PpoError> {
    let mut nets = ActorCritic::new(scenario.obs_dim(), scenario.n_actions(), cfg.lr, rng);
    let mut rows = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut episode = Episode::new(scenario, ep as u64);
        let mut traj = Trajectory::default();
        for _ in 0..cfg.horizon {
            let obs = episode.observe();
            let (a, logp) = act(&nets.actor, &obs, ActMode::Sample, rng);
            let reward = episode.step(a);
            traj.obs.push(obs);
            traj.actions.push(a);
            traj.rewards.push(reward);
            traj.logps.push(logp);
        }
        let stats = ppo_update(&mut nets, &traj, cfg)?;
        rows.push(TrainRow {
            episode: ep,
            mean_reward: stats.mean_reward,
            actor_loss: stats.actor_loss,
            critic_loss: stats.critic_loss,
        });
    }
    Ok((nets, rows))
}
