//! Counting random variables and their histogram ranges.
//!
//! A histogram `[n_1, ..., n_r]` records how many members of a partition take
//! each value of the partition's base range, in the range's declared order.
//! It forgets *which* member took which value; that is what collapses the
//! `r^n` ground tuples of a partition into `C(n + r - 1, r - 1)` keys.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::model::Range;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(counts: Vec<u64>, partition_size: u64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParams("histogram over an empty range".into()));
        }
        let total: u64 = counts.iter().sum();
        if total != partition_size {
            return Err(Error::InvalidParams(format!(
                "histogram counts sum to {total}, partition size is {partition_size}"
            )));
        }
        Ok(Histogram { counts })
    }

    /// All `size` members on range value `at`.
    pub fn peak(range_len: usize, at: usize, size: u64) -> Self {
        let mut counts = vec![0; range_len];
        counts[at] = size;
        Histogram { counts }
    }

    pub(crate) fn from_counts(counts: Vec<u64>) -> Self {
        debug_assert!(!counts.is_empty());
        Histogram { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn range_len(&self) -> usize {
        self.counts.len()
    }

    pub fn partition_size(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of ground tuples collapsed into this histogram: `n! / Π n_l!`.
    pub fn multiplicity(&self) -> BigUint {
        let mut acc = BigUint::one();
        let mut seen = 0u64;
        for &c in &self.counts {
            seen += c;
            acc *= binomial(seen, c);
        }
        acc
    }

    /// True iff one count holds the whole partition. The empty partition has
    /// no peak.
    pub fn is_peak_shaped(&self) -> bool {
        let n = self.partition_size();
        n > 0 && self.counts.iter().filter(|&&c| c != 0).count() == 1
    }
}

impl fmt::Display for Histogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for Histogram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::InvalidParams(format!("histogram {s:?} is not bracketed")))?;
        let counts = inner
            .split(',')
            .map(|c| c.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidParams(format!("histogram {s:?}: {e}")))?;
        Ok(Histogram::from_counts(counts))
    }
}

pub fn is_peak_shaped(h: &Histogram) -> bool {
    h.is_peak_shaped()
}

pub fn histogram_multiplicity(h: &Histogram) -> BigUint {
    h.multiplicity()
}

/// One histogram per partition: a lifted joint action or observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistogramTuple(pub Vec<Histogram>);

impl HistogramTuple {
    pub fn parts(&self) -> &[Histogram] {
        &self.0
    }

    pub fn multiplicity(&self) -> BigUint {
        self.0.iter().map(Histogram::multiplicity).product()
    }

    pub fn is_peak_shaped(&self) -> bool {
        self.0.iter().all(Histogram::is_peak_shaped)
    }
}

impl fmt::Display for HistogramTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{h}")?;
        }
        Ok(())
    }
}

impl FromStr for HistogramTuple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split('|')
            .map(str::parse)
            .collect::<Result<Vec<_>>>()
            .map(HistogramTuple)
    }
}

/// The counting variable of one partition over its action or observation range.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingVariable {
    pub partition: usize,
    pub range: Range,
    pub partition_size: u64,
}

impl CountingVariable {
    pub fn new(partition: usize, range: Range, partition_size: u64) -> Result<Self> {
        if partition_size == 0 {
            return Err(Error::InvalidParams(format!(
                "partition {partition} has no members"
            )));
        }
        Ok(CountingVariable {
            partition,
            range,
            partition_size,
        })
    }

    pub fn histogram_count(&self) -> BigUint {
        histogram_count(self.partition_size, self.range.len() as u64)
    }

    /// Checks range length and partition size of `h` against this variable.
    pub fn admits(&self, h: &Histogram) -> bool {
        h.range_len() == self.range.len() && h.partition_size() == self.partition_size
    }
}

/// `C(n, k)` exactly.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Size of the histogram range of a counting variable over `r` values and
/// `n` members: `C(n + r - 1, r - 1)`.
pub fn histogram_count(n: u64, r: u64) -> BigUint {
    assert!(r >= 1, "histogram range must be non-empty");
    binomial(n + r - 1, r - 1)
}

/// Every histogram of `crv`, each exactly once, in reverse-lexicographic
/// order of counts (`[n,0,..]` first, `[..,0,n]` last).
pub fn enumerate_histograms(crv: &CountingVariable, cap: u64) -> Result<HistogramIter> {
    histograms(crv.partition_size, crv.range.len(), cap)
}

/// Histograms of `n` members over `r` values; see [`enumerate_histograms`].
pub fn histograms(n: u64, r: usize, cap: u64) -> Result<HistogramIter> {
    if r == 0 {
        return Err(Error::InvalidParams(
            "histogram range must be non-empty".into(),
        ));
    }
    let total = histogram_count(n, r as u64);
    if total > BigUint::from(cap) {
        return Err(Error::capacity(
            format!("histograms of {n} members over {r} values"),
            total,
            cap,
        ));
    }
    let mut first = vec![0; r];
    first[0] = n;
    Ok(HistogramIter { next: Some(first) })
}

#[derive(Debug)]
pub struct HistogramIter {
    next: Option<Vec<u64>>,
}

impl Iterator for HistogramIter {
    type Item = Histogram;

    fn next(&mut self) -> Option<Histogram> {
        let out = self.next.take()?;
        let r = out.len();
        // Move one unit from the rightmost non-zero position (excluding the
        // last) one step right, and gather the tail mass behind it.
        if let Some(j) = (0..r.saturating_sub(1)).rev().find(|&j| out[j] > 0) {
            let mut c = out.clone();
            let tail = c[r - 1];
            c[r - 1] = 0;
            c[j] -= 1;
            c[j + 1] = tail + 1;
            self.next = Some(c);
        }
        Some(Histogram::from_counts(out))
    }
}

/// Histogram of the partition members' values in `tuple`.
///
/// `tuple` is indexed by agent, `members` lists the partition's agents, and
/// each value is an index into the CRV's base range.
pub fn tuple_to_histogram(
    tuple: &[usize],
    crv: &CountingVariable,
    members: &[usize],
) -> Result<Histogram> {
    let mut counts = vec![0u64; crv.range.len()];
    for &m in members {
        let v = *tuple.get(m).ok_or_else(|| {
            Error::RangeMismatch(format!(
                "agent {m} missing from a tuple of arity {}",
                tuple.len()
            ))
        })?;
        if v >= counts.len() {
            return Err(Error::RangeMismatch(format!(
                "agent {m} takes value {v}, range has {} values",
                counts.len()
            )));
        }
        counts[v] += 1;
    }
    Histogram::new(counts, members.len() as u64)
}

/// Materialized histogram range with constant-time ranking, for desk-scale
/// lifted models and solvers.
#[derive(Debug, Clone)]
pub struct HistogramSpace {
    items: Vec<Histogram>,
    index: HashMap<Histogram, usize>,
}

impl HistogramSpace {
    pub fn new(n: u64, r: usize, cap: u64) -> Result<Self> {
        let items: Vec<Histogram> = histograms(n, r, cap)?.collect();
        let index = items
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, h)| (h, i))
            .collect();
        Ok(HistogramSpace { items, index })
    }

    /// A space over an explicit subset of histograms, ranked in the given order.
    pub fn from_items(items: Vec<Histogram>) -> Self {
        let index = items
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, h)| (h, i))
            .collect();
        HistogramSpace { items, index }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> &Histogram {
        &self.items[i]
    }

    pub fn rank(&self, h: &Histogram) -> Option<usize> {
        self.index.get(h).copied()
    }

    pub fn rank_counts(&self, counts: &[u64]) -> Option<usize> {
        // Hash lookup needs an owned key; counts are short.
        self.index
            .get(&Histogram::from_counts(counts.to_vec()))
            .copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Histogram> {
        self.items.iter()
    }
}

/// Multiplicity as a float, for probability arithmetic on desk-scale models.
pub(crate) fn multiplicity_f64(h: &Histogram) -> f64 {
    h.multiplicity().to_f64().unwrap_or(f64::INFINITY)
}

pub(crate) fn multiplicity_f64_tuple(t: &HistogramTuple) -> f64 {
    t.0.iter().map(multiplicity_f64).product()
}
