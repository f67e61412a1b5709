use std::collections::BTreeMap;

use super::joint::JointSpace;
use super::space::{Belief, Distribution, Range, StateSpace};
use super::validate::{Validate, ValidationReport};
use crate::error::Result;

/// One component per agent, each an index into that agent's range.
pub type JointKey = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Actions,
    Observations,
}

/// A decentralized POMDP over an explicit agent set: joint state, per-agent
/// action and observation ranges, joint transition and sensor models, and a
/// team reward over states.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundDecPomdp {
    pub agents: Range,
    pub states: StateSpace,
    pub agent_actions: Vec<Range>,
    pub agent_observations: Vec<Range>,
    /// `(s, joint action) -> P(s' | s, a)`. Every pair needs a row.
    pub transition: BTreeMap<(usize, JointKey), Distribution>,
    /// `sensor[s'][joint observation] = P(o | s')`; absent keys are 0.
    pub sensor: Vec<BTreeMap<JointKey, f64>>,
    pub reward: Vec<f64>,
    pub discount: f64,
    pub initial_belief: Belief,
}

impl GroundDecPomdp {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn ranges(&self, kind: JointKind) -> &[Range] {
        match kind {
            JointKind::Actions => &self.agent_actions,
            JointKind::Observations => &self.agent_observations,
        }
    }

    /// The Cartesian product of the per-agent ranges of `kind`.
    pub fn joint_space(&self, kind: JointKind, cap: u64) -> Result<JointSpace> {
        JointSpace::new(self.ranges(kind).iter().map(Range::len).collect(), cap)
    }

    pub fn sensor_prob(&self, next: usize, obs: &[usize]) -> f64 {
        self.sensor[next].get(obs).copied().unwrap_or(0.0)
    }

    pub(crate) fn describe_key(&self, kind: JointKind, key: &[usize]) -> String {
        let ranges = self.ranges(kind);
        let parts: Vec<&str> = key
            .iter()
            .zip(ranges)
            .map(|(&x, r)| if x < r.len() { r.label(x) } else { "?" })
            .collect();
        format!("({})", parts.join(","))
    }

    fn key_defect(&self, kind: JointKind, key: &[usize]) -> Option<String> {
        let ranges = self.ranges(kind);
        if key.len() != self.num_agents() {
            return Some(format!(
                "arity {} does not match {} agents",
                key.len(),
                self.num_agents()
            ));
        }
        key.iter()
            .zip(ranges)
            .enumerate()
            .find(|(_, (&x, r))| x >= r.len())
            .map(|(i, (&x, _))| format!("component {i} = {x} is outside agent {i}'s range"))
    }
}

impl Validate for GroundDecPomdp {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.num_agents();
        let s = self.num_states();
        report.check_discount(self.discount);
        report.check_reward(&self.reward, s);
        report.check_belief(&self.initial_belief, s);
        if self.agent_actions.len() != n || self.agent_observations.len() != n {
            report.push(
                "actions",
                format!("need one action and observation range per agent ({n})"),
            );
            return report;
        }
        let mut valid_rows: u128 = 0;
        for ((state, key), row) in &self.transition {
            let field = format!("transition[{state}, {key:?}]");
            if *state >= s {
                report.push(field, "state index out of range");
                continue;
            }
            if let Some(problem) = self.key_defect(JointKind::Actions, key) {
                report.push(field, problem);
                continue;
            }
            valid_rows += 1;
            report.check_row(
                format!(
                    "transition[{}, {}]",
                    self.states.label(*state),
                    self.describe_key(JointKind::Actions, key)
                ),
                row,
                s,
            );
        }
        let joint: u128 = self
            .agent_actions
            .iter()
            .fold(1u128, |acc, r| acc.saturating_mul(r.len() as u128));
        let expected = joint.saturating_mul(s as u128);
        if valid_rows < expected {
            report.push(
                "transition",
                format!(
                    "{} of {expected} (state, joint action) rows missing",
                    expected - valid_rows
                ),
            );
        }
        if self.sensor.len() != s {
            report.push(
                "sensor",
                format!("has {} rows for {s} states", self.sensor.len()),
            );
        }
        for (next, row) in self.sensor.iter().enumerate().take(s) {
            let field = format!("sensor[{}]", self.states.label(next));
            for key in row.keys() {
                if let Some(problem) = self.key_defect(JointKind::Observations, key) {
                    report.push(field.clone(), problem);
                }
            }
            report.check_sparse_row(&field, row.values().copied());
        }
        report
    }
}
