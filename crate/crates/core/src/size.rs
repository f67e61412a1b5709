//! Worst-case representation sizes of ground, lifted and peak-shaped models,
//! as log2 bounds plus exact histogram key counts.

use num_bigint::BigUint;

use crate::counting::histogram_count;
use crate::error::{Error, Result};
use crate::lifting::LiftedDecPomdp;
use crate::model::{GroundDecPomdp, JointKind};

/// Sizes of one partition: member count and range lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionShape {
    pub size: u64,
    pub actions: u64,
    pub observations: u64,
}

/// Parameters of the size bounds. `a`, `o` and `n` are maxima over agents or
/// partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeParams {
    pub s: u64,
    pub agents: u64,
    pub partitions: u64,
    pub a: u64,
    pub o: u64,
    pub n: u64,
    pub shapes: Vec<PartitionShape>,
}

impl SizeParams {
    /// `k` partitions of `n` agents each, all with `a` actions and `o`
    /// observations.
    pub fn uniform(s: u64, k: u64, n: u64, a: u64, o: u64) -> Result<Self> {
        let shape = PartitionShape {
            size: n,
            actions: a,
            observations: o,
        };
        Self::from_shapes(s, vec![shape; k as usize])
    }

    pub fn from_shapes(s: u64, shapes: Vec<PartitionShape>) -> Result<Self> {
        let max = |f: fn(&PartitionShape) -> u64| shapes.iter().map(f).max().unwrap_or(0);
        let p = SizeParams {
            s,
            agents: shapes.iter().map(|p| p.size).sum(),
            partitions: shapes.len() as u64,
            a: max(|p| p.actions),
            o: max(|p| p.observations),
            n: max(|p| p.size),
            shapes,
        };
        p.check()?;
        Ok(p)
    }

    pub fn from_lifted(model: &LiftedDecPomdp) -> Result<Self> {
        let part = &model.partitioning;
        let shapes = (0..part.len())
            .map(|k| PartitionShape {
                size: part.size(k),
                actions: part.action_range(k).len() as u64,
                observations: part.observation_range(k).len() as u64,
            })
            .collect();
        Self::from_shapes(model.num_states() as u64, shapes)
    }

    /// Every agent its own partition.
    pub fn from_ground(model: &GroundDecPomdp) -> Result<Self> {
        let shapes = (0..model.num_agents())
            .map(|i| PartitionShape {
                size: 1,
                actions: model.agent_actions[i].len() as u64,
                observations: model.agent_observations[i].len() as u64,
            })
            .collect();
        Self::from_shapes(model.num_states() as u64, shapes)
    }

    fn check(&self) -> Result<()> {
        let fields = [
            ("s", self.s),
            ("N", self.agents),
            ("K", self.partitions),
            ("a", self.a),
            ("o", self.o),
            ("n", self.n),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParams(format!(
                "size parameter {name} must be at least 1"
            )));
        }
        if self
            .shapes
            .iter()
            .any(|p| p.size == 0 || p.actions == 0 || p.observations == 0)
        {
            return Err(Error::InvalidParams(
                "partition sizes and ranges must be at least 1".into(),
            ));
        }
        if self.n > self.agents {
            return Err(Error::InvalidParams(format!(
                "largest partition ({}) exceeds the agent count ({})",
                self.n, self.agents
            )));
        }
        Ok(())
    }
}

/// Exact histogram key counts of one partition's counting variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionKeyCounts {
    pub partition: usize,
    pub size: u64,
    pub action_keys: BigUint,
    pub observation_keys: BigUint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeReport {
    pub params: SizeParams,
    pub log2_t_ground: f64,
    pub log2_omega_ground: f64,
    pub log2_t_lifted: f64,
    pub log2_omega_lifted: f64,
    pub log2_t_peak: f64,
    pub log2_omega_peak: f64,
    pub lifted_key_counts: Vec<PartitionKeyCounts>,
    /// Whether `K·a·log2(n) <= N·log2(a)`, the condition for the lifted
    /// transition bound to be no larger than the ground one.
    pub lifted_not_larger: bool,
}

fn lg(x: u64) -> f64 {
    (x as f64).log2()
}

/// `s·s·a^N` and `s·o^N`, as log2.
pub fn ground_sizes(p: &SizeParams) -> (f64, f64) {
    let n = p.agents as f64;
    (2.0 * lg(p.s) + n * lg(p.a), lg(p.s) + n * lg(p.o))
}

/// `s·s·(n^a)^K` and `s·(n^o)^K` as log2, with exact per-partition key counts
/// `C(n_k + r - 1, r - 1)`.
pub fn lifted_sizes(p: &SizeParams) -> (f64, f64, Vec<PartitionKeyCounts>) {
    let k = p.partitions as f64;
    let counts = p
        .shapes
        .iter()
        .enumerate()
        .map(|(i, sh)| PartitionKeyCounts {
            partition: i,
            size: sh.size,
            action_keys: histogram_count(sh.size, sh.actions),
            observation_keys: histogram_count(sh.size, sh.observations),
        })
        .collect();
    (
        2.0 * lg(p.s) + (p.a as f64) * k * lg(p.n),
        lg(p.s) + (p.o as f64) * k * lg(p.n),
        counts,
    )
}

/// `s·s·a^K` and `s·o^K` as log2: every partition acts and observes as one.
pub fn peak_sizes(p: &SizeParams) -> (f64, f64) {
    let k = p.partitions as f64;
    (2.0 * lg(p.s) + k * lg(p.a), lg(p.s) + k * lg(p.o))
}

pub fn size_report(p: &SizeParams) -> SizeReport {
    let (tg, og) = ground_sizes(p);
    let (tl, ol, counts) = lifted_sizes(p);
    let (tp, op) = peak_sizes(p);
    SizeReport {
        params: p.clone(),
        log2_t_ground: tg,
        log2_omega_ground: og,
        log2_t_lifted: tl,
        log2_omega_lifted: ol,
        log2_t_peak: tp,
        log2_omega_peak: op,
        lifted_key_counts: counts,
        lifted_not_larger: (p.partitions * p.a) as f64 * lg(p.n) <= p.agents as f64 * lg(p.a),
    }
}

/// Exact number of joint keys of `kind` in a ground model: `Π_i |range_i|`.
pub fn ground_key_count(model: &GroundDecPomdp, kind: JointKind) -> BigUint {
    model
        .ranges(kind)
        .iter()
        .map(|r| BigUint::from(r.len()))
        .product()
}

/// Exact number of histogram tuples of `kind` in a lifted model.
pub fn lifted_key_count(model: &LiftedDecPomdp, kind: JointKind) -> BigUint {
    model.key_count(kind)
}
