use std::collections::BTreeMap;

use super::space::{Distribution, Range, StateSpace};
use super::validate::{Validate, ValidationReport};

/// A fully observable sequential decision problem with state-only reward.
///
/// The action range of a state is the set of actions with a transition row
/// from it; an absent `(state, action)` row means the action is inapplicable
/// there and all its successor probabilities are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub states: StateSpace,
    /// Union of all per-state action ranges, in declaration order.
    pub actions: Range,
    pub transition: BTreeMap<(usize, usize), Distribution>,
    pub reward: Vec<f64>,
    pub discount: f64,
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Applicable actions of `state` in declaration order.
    pub fn applicable(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.transition
            .range((state, 0)..=(state, usize::MAX))
            .map(|((_, a), _)| *a)
    }

    pub fn row(&self, state: usize, action: usize) -> Option<&Distribution> {
        self.transition.get(&(state, action))
    }

    /// `P(next | state, action)`, 0 for inapplicable actions.
    pub fn prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.row(state, action).map_or(0.0, |r| r[next])
    }
}

impl Validate for Mdp {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let s = self.num_states();
        report.check_discount(self.discount);
        report.check_reward(&self.reward, s);
        for (&(state, action), row) in &self.transition {
            if state >= s || action >= self.actions.len() {
                report.push(
                    format!("transition[{state}, {action}]"),
                    "state or action index out of range",
                );
                continue;
            }
            report.check_row(
                format!(
                    "transition[{}, {}]",
                    self.states.label(state),
                    self.actions.label(action)
                ),
                row,
                s,
            );
        }
        for state in 0..s {
            if self.applicable(state).next().is_none() {
                report.push(
                    format!("transition[{}]", self.states.label(state)),
                    "state has no applicable action",
                );
            }
        }
        report
    }
}
