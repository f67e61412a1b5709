use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance for row sums and probability comparisons.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Characters reserved by the key syntax of the model format.
const RESERVED: &[char] = &['(', ')', ',', '|', '[', ']'];

/// An ordered set of unique labels: a state space, or an action or
/// observation range. Indices follow declaration order.
#[derive(Clone, PartialEq, Eq)]
pub struct Range {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

/// The range of the state variable.
pub type StateSpace = Range;

impl Range {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidParams("range must not be empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.trim() != l || l.contains(RESERVED) {
                return Err(Error::InvalidParams(format!(
                    "label {l:?} is empty, padded or uses one of ( ) , | [ ]"
                )));
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidParams(format!("duplicate label {l:?}")));
            }
        }
        Ok(Range { labels, index })
    }

    /// `prefix0, prefix1, ...`
    pub fn numbered(prefix: &str, n: usize) -> Self {
        Range::new((0..n).map(|i| format!("{prefix}{i}"))).expect("numbered labels are valid")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

impl fmt::Debug for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.labels).finish()
    }
}

/// A probability vector over a finite range.
///
/// [`Distribution::new`] checks and renormalizes; [`Distribution::from_raw`]
/// stores whatever it is given so that validation can report the defect.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let d = Distribution(probs);
        if let Some(problem) = d.defect() {
            return Err(Error::InvalidParams(problem));
        }
        let sum = d.sum();
        Ok(Distribution(
            d.0.into_iter().map(|p| (p / sum).clamp(0.0, 1.0)).collect(),
        ))
    }

    pub fn from_raw(probs: Vec<f64>) -> Self {
        Distribution(probs)
    }

    pub fn point(len: usize, at: usize) -> Self {
        let mut v = vec![0.0; len];
        v[at] = 1.0;
        Distribution(v)
    }

    pub fn uniform(len: usize) -> Self {
        Distribution(vec![1.0 / len as f64; len])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Describes the first violated invariant, if any.
    pub fn defect(&self) -> Option<String> {
        if self.0.is_empty() {
            return Some("empty distribution".into());
        }
        if let Some((i, p)) =
            self.0.iter().enumerate().find(|(_, p)| {
                !p.is_finite() || **p < -PROB_TOLERANCE || **p > 1.0 + PROB_TOLERANCE
            })
        {
            return Some(format!("entry {i} = {p} outside [0, 1]"));
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Some(format!("sums to {sum}, not 1"));
        }
        None
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        let n = self.len().max(other.len());
        (0..n)
            .map(|i| {
                let a = self.0.get(i).copied().unwrap_or(0.0);
                let b = other.0.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A probability distribution over the states of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Distribution);

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Distribution::new(probs).map(Belief)
    }

    pub fn from_distribution(d: Distribution) -> Self {
        Belief(d)
    }

    pub fn uniform(states: usize) -> Self {
        Belief(Distribution::uniform(states))
    }

    pub fn point(states: usize, at: usize) -> Self {
        Belief(Distribution::point(states, at))
    }

    pub fn distribution(&self) -> &Distribution {
        &self.0
    }

    pub fn probs(&self) -> &[f64] {
        self.0.probs()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Inner product with a value vector over states.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.0.probs().iter().zip(values).map(|(b, v)| b * v).sum()
    }
}

impl std::ops::Index<usize> for Belief {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_rejects_duplicates_and_reserved_characters() {
        assert!(Range::new(["a", "b"]).is_ok());
        assert!(Range::new(["a", "a"]).is_err());
        assert!(Range::new(["a,b"]).is_err());
        assert!(Range::new(Vec::<String>::new()).is_err());
        assert!(Range::new([" a"]).is_err());
    }

    #[test]
    fn distribution_renormalizes_within_tolerance_only() {
        let d = Distribution::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((d.sum() - 1.0).abs() < 1e-15);
        assert!(Distribution::new(vec![0.5, 0.4]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn raw_distribution_reports_defect() {
        let d = Distribution::from_raw(vec![0.6, 0.3]);
        assert!(d.defect().unwrap().contains("sums to"));
        assert!(Distribution::uniform(4).defect().is_none());
    }
}
