use std::collections::BTreeMap;

use num_bigint::BigUint;

use super::partition::Partitioning;
use crate::counting::{CountingVariable, HistogramSpace, HistogramTuple};
use crate::error::Result;
use crate::model::{
    Belief, Distribution, JointKind, JointSpace, Range, StateSpace, Validate, ValidationReport,
};

/// A DecPOMDP whose transition and sensor models are keyed by histogram
/// tuples, one histogram per partition.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedDecPomdp {
    pub agents: Range,
    pub partitioning: Partitioning,
    pub states: StateSpace,
    /// `(s, action histograms) -> P(s' | s, h)`.
    pub transition: BTreeMap<(usize, HistogramTuple), Distribution>,
    /// `sensor[s'][observation histograms]`, summed over the ground tuples
    /// each key stands for. Absent keys are 0.
    pub sensor: Vec<BTreeMap<HistogramTuple, f64>>,
    pub reward: Vec<f64>,
    pub discount: f64,
    pub initial_belief: Belief,
}

impl LiftedDecPomdp {
    pub fn num_partitions(&self) -> usize {
        self.partitioning.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn counting_variable(&self, kind: JointKind, k: usize) -> CountingVariable {
        CountingVariable {
            partition: k,
            range: self.partitioning.range(kind, k).clone(),
            partition_size: self.partitioning.size(k),
        }
    }

    pub fn counting_variables(&self, kind: JointKind) -> Vec<CountingVariable> {
        (0..self.num_partitions())
            .map(|k| self.counting_variable(kind, k))
            .collect()
    }

    /// Number of histogram tuples of `kind`.
    pub fn key_count(&self, kind: JointKind) -> BigUint {
        self.counting_variables(kind)
            .iter()
            .map(CountingVariable::histogram_count)
            .product()
    }

    /// Materialized per-partition histogram ranges of `kind`.
    pub fn histogram_spaces(&self, kind: JointKind, cap: u64) -> Result<Vec<HistogramSpace>> {
        self.counting_variables(kind)
            .iter()
            .map(|c| HistogramSpace::new(c.partition_size, c.range.len(), cap))
            .collect()
    }

    /// Enumerates histogram tuples of `kind` in mixed-radix order, first
    /// partition most significant.
    pub fn histogram_tuples(&self, kind: JointKind, cap: u64) -> Result<Vec<HistogramTuple>> {
        let spaces = self.histogram_spaces(kind, cap)?;
        let index = JointSpace::new(spaces.iter().map(HistogramSpace::len).collect(), cap)?;
        Ok(index
            .iter()
            .map(|ranks| {
                HistogramTuple(
                    ranks
                        .iter()
                        .zip(&spaces)
                        .map(|(&r, sp)| sp.get(r).clone())
                        .collect(),
                )
            })
            .collect())
    }

    pub fn sensor_prob(&self, next: usize, obs: &HistogramTuple) -> f64 {
        self.sensor[next].get(obs).copied().unwrap_or(0.0)
    }

    pub(crate) fn key_defect(&self, kind: JointKind, key: &HistogramTuple) -> Option<String> {
        let k = self.num_partitions();
        if key.0.len() != k {
            return Some(format!(
                "key {key} has {} parts for {k} partitions",
                key.0.len()
            ));
        }
        key.0.iter().enumerate().find_map(|(p, h)| {
            let crv = self.counting_variable(kind, p);
            (!crv.admits(h)).then(|| {
                format!(
                    "histogram {h} does not fit partition {p} ({} members, {} values)",
                    crv.partition_size,
                    crv.range.len()
                )
            })
        })
    }
}

impl Validate for LiftedDecPomdp {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let s = self.num_states();
        report.check_discount(self.discount);
        report.check_reward(&self.reward, s);
        report.check_belief(&self.initial_belief, s);
        if self.partitioning.num_agents() != self.num_agents() {
            report.push(
                "partitions",
                format!(
                    "cover {} agents, model declares {}",
                    self.partitioning.num_agents(),
                    self.num_agents()
                ),
            );
            return report;
        }
        let mut valid_rows = BigUint::ZERO;
        for ((state, key), row) in &self.transition {
            let field = format!("transition[{state}, {key}]");
            if *state >= s {
                report.push(field, "state index out of range");
                continue;
            }
            if let Some(problem) = self.key_defect(JointKind::Actions, key) {
                report.push(field, problem);
                continue;
            }
            valid_rows += 1u32;
            report.check_row(
                format!("transition[{}, {key}]", self.states.label(*state)),
                row,
                s,
            );
        }
        let expected = self.key_count(JointKind::Actions) * s;
        if valid_rows < expected {
            report.push(
                "transition",
                format!(
                    "{} of {expected} (state, action histogram) rows missing",
                    &expected - &valid_rows
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
