use super::mdp::Mdp;
use super::space::{Belief, Distribution, Range};
use super::validate::{Validate, ValidationReport};
use crate::error::{Error, Result};

/// An MDP whose state is seen only through a state-dependent sensor model.
#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    pub base: Mdp,
    pub observations: Range,
    /// `sensor[s'][o] = P(o | s')`.
    pub sensor: Vec<Distribution>,
    pub initial_belief: Option<Belief>,
}

impl Pomdp {
    pub fn num_states(&self) -> usize {
        self.base.num_states()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn obs_prob(&self, next: usize, obs: usize) -> f64 {
        self.sensor[next][obs]
    }
}

impl Validate for Pomdp {
    fn validate(&self) -> ValidationReport {
        let mut report = self.base.validate();
        let s = self.num_states();
        if self.sensor.len() != s {
            report.push(
                "sensor",
                format!("has {} rows for {} states", self.sensor.len(), s),
            );
        }
        for (i, row) in self.sensor.iter().enumerate().take(s) {
            report.check_row(
                format!("sensor[{}]", self.base.states.label(i)),
                row,
                self.observations.len(),
            );
        }
        if let Some(b) = &self.initial_belief {
            report.check_belief(b, s);
        }
        report
    }
}

/// Bayes filter: `b'(s') ∝ P(o | s') Σ_s P(s' | s, a) b(s)`.
pub fn belief_update(model: &Pomdp, belief: &Belief, action: usize, obs: usize) -> Result<Belief> {
    let n = model.num_states();
    if belief.len() != n {
        return Err(Error::InvalidParams(format!(
            "belief has dimension {}, model has {n} states",
            belief.len()
        )));
    }
    if obs >= model.num_observations() || action >= model.base.actions.len() {
        return Err(Error::RangeMismatch(format!(
            "action {action} or observation {obs} out of range"
        )));
    }
    let mut next = vec![0.0; n];
    for (s, &bs) in belief.probs().iter().enumerate() {
        if bs <= 0.0 {
            continue;
        }
        let row = model.base.row(s, action).ok_or_else(|| {
            Error::InvalidParams(format!(
                "action {} is not applicable in state {}",
                model.base.actions.label(action),
                model.base.states.label(s)
            ))
        })?;
        for (sp, p) in row.probs().iter().enumerate() {
            next[sp] += p * bs;
        }
    }
    for (sp, v) in next.iter_mut().enumerate() {
        *v *= model.obs_prob(sp, obs);
    }
    let norm: f64 = next.iter().sum();
    if norm <= 0.0 {
        return Err(Error::ZeroProbabilityObservation);
    }
    Ok(Belief::from_distribution(Distribution::from_raw(
        next.into_iter().map(|v| v / norm).collect(),
    )))
}
