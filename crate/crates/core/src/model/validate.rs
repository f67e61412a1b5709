use std::fmt;

use super::space::{Belief, Distribution, PROB_TOLERANCE};

/// One violated invariant, located by the model field it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// Every invariant a model breaks. Empty iff the model is well-formed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    /// `Ok(())` when empty, otherwise the report as an error.
    pub fn into_result(self) -> crate::Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::InvalidModel(self))
        }
    }

    pub(crate) fn check_discount(&mut self, discount: f64) {
        if !(discount > 0.0 && discount <= 1.0) {
            self.push("discount", format!("{discount} is outside (0, 1]"));
        }
    }

    pub(crate) fn check_reward(&mut self, reward: &[f64], states: usize) {
        if reward.len() != states {
            self.push(
                "reward",
                format!("has {} entries for {} states", reward.len(), states),
            );
        }
        if let Some((i, r)) = reward.iter().enumerate().find(|(_, r)| !r.is_finite()) {
            self.push(format!("reward[{i}]"), format!("{r} is not finite"));
        }
    }

    pub(crate) fn check_row(&mut self, field: impl Into<String>, row: &Distribution, len: usize) {
        let field = field.into();
        if row.len() != len {
            self.push(
                field.clone(),
                format!("row has {} entries, range has {len}", row.len()),
            );
        }
        if let Some(problem) = row.defect() {
            self.push(field, format!("row not normalized: {problem}"));
        }
    }

    pub(crate) fn check_belief(&mut self, belief: &Belief, states: usize) {
        self.check_row("initial_belief", belief.distribution(), states);
    }

    /// Checks the entries of a sparse row.
    pub(crate) fn check_sparse_row<I>(&mut self, field: &str, entries: I)
    where
        I: IntoIterator<Item = f64>,
    {
        let mut sum = 0.0;
        for p in entries {
            if !p.is_finite() || !(-PROB_TOLERANCE..=1.0 + PROB_TOLERANCE).contains(&p) {
                self.push(field, format!("probability {p} outside [0, 1]"));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            self.push(field, format!("row not normalized: sums to {sum}, not 1"));
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

/// Anything whose invariants can be checked after construction.
pub trait Validate {
    fn validate(&self) -> ValidationReport;
}

pub fn validate_model<M: Validate + ?Sized>(model: &M) -> ValidationReport {
    model.validate()
}
