//! Learning stack: reward shaping, frozen-scenario environment, dense nets
//! with manual backprop, exhaustive oracle, and the policy optimizer.

pub mod env;
pub mod net;
pub mod oracle;
pub mod ppo;
pub mod reward;

pub use env::{default_frozen_scenario, frozen_from_config, Episode, FrozenScenario};
pub use net::{softmax, Adam, Grads, Mlp, HIDDEN_LAYERS, HIDDEN_WIDTH};
pub use oracle::{oracle_policy, oracle_policy_over, ActionSpaceTooLarge, MAX_ORACLE_ACTIONS};
pub use ppo::{
    act, ppo_update, train, ActMode, ActorCritic, Checkpoint, PpoConfig, PpoError, TrainRow,
    Trajectory,
};
pub use reward::{compute_reward, RewardError, RewardWeights};
