use crate::error::{Error, Result};
use crate::model::{Mdp, Validate};

/// Utilities from value iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest change in the last sweep.
    pub last_delta: f64,
}

/// Chosen action index per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub actions: Vec<usize>,
}

impl Policy {
    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }
}

/// Value iteration from `U = 0`, stopping when a sweep changes no utility by
/// `epsilon * (1 - γ) / γ` or more.
pub fn mdp_value_iteration(model: &Mdp, epsilon: f64) -> Result<(UtilityTable, Policy)> {
    mdp_value_iteration_capped(model, epsilon, None)
}

/// As [`mdp_value_iteration`] with an optional sweep cap. With `γ = 1` the cap
/// is mandatory and the result is the finite-horizon utility after `cap` sweeps.
pub fn mdp_value_iteration_capped(
    model: &Mdp,
    epsilon: f64,
    max_iterations: Option<usize>,
) -> Result<(UtilityTable, Policy)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    model.validate().into_result()?;
    let gamma = model.discount;
    if gamma >= 1.0 && max_iterations.is_none() {
        return Err(Error::NonConvergent);
    }
    let threshold = epsilon * (1.0 - gamma) / gamma;
    let n = model.num_states();
    let mut u = vec![0.0; n];
    let mut iterations = 0;
    let mut last_delta = f64::INFINITY;
    let mut converged = false;
    while max_iterations.is_none_or(|cap| iterations < cap) {
        let next = backup(model, &u);
        last_delta = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        u = next;
        iterations += 1;
        if last_delta < threshold {
            converged = true;
            break;
        }
    }
    let policy = greedy_policy(model, &u);
    Ok((
        UtilityTable {
            values: u,
            iterations,
            converged,
            last_delta,
        },
        policy,
    ))
}

fn q_value(model: &Mdp, u: &[f64], s: usize, a: usize) -> f64 {
    let row = model.row(s, a).expect("applicable action has a row");
    row.probs().iter().zip(u).map(|(p, v)| p * v).sum()
}

/// One Bellman sweep `R(s) + γ max_a Σ P(s'|s,a) U(s')`.
pub fn backup(model: &Mdp, u: &[f64]) -> Vec<f64> {
    (0..model.num_states())
        .map(|s| {
            let best = model
                .applicable(s)
                .map(|a| q_value(model, u, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
            model.reward[s] + model.discount * best
        })
        .collect()
}

/// Greedy action per state; ties go to the earliest declared action.
pub fn greedy_policy(model: &Mdp, u: &[f64]) -> Policy {
    let actions = (0..model.num_states())
        .map(|s| {
            let mut best = None;
            for a in model.applicable(s) {
                let q = q_value(model, u, s, a);
                if best.is_none_or(|(_, v)| q > v) {
                    best = Some((a, q));
                }
            }
            best.expect("validated states have an action").0
        })
        .collect();
    Policy { actions }
}
