//! Exhaustive-search oracle: simulates every action of an enumerable space
//! from an identical snapshot. Independent of the learned policies; used to
//! test them and the action-space dominance property.

use thiserror::Error;

use super::env::FrozenScenario;

pub const MAX_ORACLE_ACTIONS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
#[error("action space too large for exhaustive evaluation: {0}")]
pub struct ActionSpaceTooLarge(pub usize);

/// Best action id plus the full value table, tie-break lowest id.
pub fn oracle_policy(
    scenario: &FrozenScenario,
    horizon_epochs: usize,
) -> Result<(usize, Vec<f64>), ActionSpaceTooLarge> {
    let ids: Vec<usize> = (0..scenario.n_actions()).collect();
    let (best, values) = oracle_policy_over(scenario, &ids, horizon_epochs)?;
    Ok((best, values))
}

/// Oracle restricted to an explicit action-id subset. Returns the best id
/// (from `ids`) and the value per listed action.
pub fn oracle_policy_over(
    scenario: &FrozenScenario,
    ids: &[usize],
    horizon_epochs: usize,
) -> Result<(usize, Vec<f64>), ActionSpaceTooLarge> {
    if ids.len() > MAX_ORACLE_ACTIONS {
        return Err(ActionSpaceTooLarge(ids.len()));
    }
    let values: Vec<f64> = ids
        .iter()
        .map(|a| scenario.evaluate_action(*a, horizon_epochs))
        .collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    Ok((ids[best], values))
}
