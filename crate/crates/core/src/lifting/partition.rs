use crate::error::{Error, Result};
use crate::model::{GroundDecPomdp, JointKind, Range, PROB_TOLERANCE};

/// Disjoint agent sets covering the agent set, each with one shared action
/// and observation range. Partition identity is positional.
#[derive(Debug, Clone, PartialEq)]
pub struct Partitioning {
    blocks: Vec<Vec<usize>>,
    actions: Vec<Range>,
    observations: Vec<Range>,
    names: Vec<Option<String>>,
    num_agents: usize,
}

impl Partitioning {
    /// Members are stored sorted; block order is kept as given.
    pub fn new(
        blocks: Vec<Vec<usize>>,
        actions: Vec<Range>,
        observations: Vec<Range>,
        num_agents: usize,
    ) -> Result<Self> {
        let k = blocks.len();
        if k == 0 || actions.len() != k || observations.len() != k {
            return Err(Error::InvalidParams(format!(
                "{k} partitions need {k} action and observation ranges"
            )));
        }
        let mut owner = vec![None; num_agents];
        let mut blocks = blocks;
        for (b, members) in blocks.iter_mut().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidParams(format!("partition {b} is empty")));
            }
            members.sort_unstable();
            for &m in members.iter() {
                match owner.get_mut(m) {
                    None => {
                        return Err(Error::InvalidParams(format!(
                            "agent {m} does not exist ({num_agents} agents)"
                        )))
                    }
                    Some(Some(prev)) => {
                        return Err(Error::InvalidParams(format!(
                            "agent {m} is in partitions {prev} and {b}"
                        )))
                    }
                    Some(slot) => *slot = Some(b),
                }
            }
        }
        if let Some(missing) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidParams(format!(
                "agent {missing} is in no partition"
            )));
        }
        Ok(Partitioning {
            blocks,
            actions,
            observations,
            names: vec![None; k],
            num_agents,
        })
    }

    pub fn with_names(mut self, names: Vec<Option<String>>) -> Self {
        assert_eq!(names.len(), self.blocks.len());
        self.names = names;
        self
    }

    /// Number of partitions, K.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn members(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn size(&self, k: usize) -> u64 {
        self.blocks[k].len() as u64
    }

    pub fn sizes(&self) -> Vec<u64> {
        (0..self.len()).map(|k| self.size(k)).collect()
    }

    pub fn action_range(&self, k: usize) -> &Range {
        &self.actions[k]
    }

    pub fn observation_range(&self, k: usize) -> &Range {
        &self.observations[k]
    }

    pub fn range(&self, kind: JointKind, k: usize) -> &Range {
        match kind {
            JointKind::Actions => &self.actions[k],
            JointKind::Observations => &self.observations[k],
        }
    }

    pub fn name(&self, k: usize) -> Option<&str> {
        self.names[k].as_deref()
    }

    pub fn names(&self) -> &[Option<String>] {
        &self.names
    }

    pub fn partition_of(&self, agent: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&agent).is_ok())
            .expect("partitioning covers every agent")
    }

    /// Every member's declared ranges in `model` must equal the partition's.
    pub fn check_ranges(&self, model: &GroundDecPomdp) -> Result<()> {
        if model.num_agents() != self.num_agents {
            return Err(Error::RangeMismatch(format!(
                "partitioning covers {} agents, model has {}",
                self.num_agents,
                model.num_agents()
            )));
        }
        for (k, members) in self.blocks.iter().enumerate() {
            for &m in members {
                if model.agent_actions[m] != self.actions[k]
                    || model.agent_observations[m] != self.observations[k]
                {
                    return Err(Error::RangeMismatch(format!(
                        "agent {} has ranges different from partition {k}",
                        model.agents.label(m)
                    )));
                }
            }
        }
        Ok(())
    }

    fn ordered_by_first_member(mut parts: Vec<(Vec<usize>, Range, Range)>, n: usize) -> Self {
        parts.sort_by_key(|(b, _, _)| b[0]);
        let (blocks, (actions, observations)): (Vec<_>, (Vec<_>, Vec<_>)) =
            parts.into_iter().map(|(b, a, o)| (b, (a, o))).unzip();
        Partitioning::new(blocks, actions, observations, n).expect("grouping covers all agents")
    }
}

/// Coarsest partitioning whose agents share action and observation ranges.
pub fn range_partition(model: &GroundDecPomdp) -> Partitioning {
    let mut parts: Vec<(Vec<usize>, Range, Range)> = Vec::new();
    for i in 0..model.num_agents() {
        let (a, o) = (&model.agent_actions[i], &model.agent_observations[i]);
        match parts.iter_mut().find(|(_, pa, po)| pa == a && po == o) {
            Some((members, _, _)) => members.push(i),
            None => parts.push((vec![i], a.clone(), o.clone())),
        }
    }
    Partitioning::ordered_by_first_member(parts, model.num_agents())
}

fn swap(key: &[usize], i: usize, j: usize) -> Vec<usize> {
    let mut k = key.to_vec();
    k.swap(i, j);
    k
}

/// Describes the first transition or sensor entry that changes when agents
/// `i` and `j` exchange their components, or `None` if the exchange is a
/// symmetry of the model.
pub fn transposition_defect(model: &GroundDecPomdp, i: usize, j: usize) -> Option<String> {
    for ((s, a), row) in &model.transition {
        let b = swap(a, i, j);
        let label = |k: &[usize]| model.describe_key(JointKind::Actions, k);
        match model.transition.get(&(*s, b.clone())) {
            None => {
                return Some(format!(
                    "transition row for {} exists but {} does not",
                    label(a),
                    label(&b)
                ))
            }
            Some(other) if row.max_abs_diff(other) > PROB_TOLERANCE => {
                return Some(format!(
                    "P(. | {}, {}) differs from P(. | {}, {})",
                    model.states.label(*s),
                    label(a),
                    model.states.label(*s),
                    label(&b)
                ))
            }
            Some(_) => {}
        }
    }
    for (next, row) in model.sensor.iter().enumerate() {
        for (o, &p) in row {
            let swapped = swap(o, i, j);
            let q = row.get(&swapped).copied().unwrap_or(0.0);
            if (p - q).abs() > PROB_TOLERANCE {
                return Some(format!(
                    "P({} | {}) = {p} but P({} | {}) = {q}",
                    model.describe_key(JointKind::Observations, o),
                    model.states.label(next),
                    model.describe_key(JointKind::Observations, &swapped),
                    model.states.label(next),
                ));
            }
        }
    }
    None
}

/// A failed transposition found while refining.
#[derive(Debug, Clone, PartialEq)]
pub struct Asymmetry {
    pub agents: (usize, usize),
    pub detail: String,
}

/// Refinement result with the first asymmetry that forced a split.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub partitioning: Partitioning,
    pub first_asymmetry: Option<Asymmetry>,
}

/// Splits each candidate partition into the coarsest blocks whose within-block
/// transpositions leave T and Ω unchanged.
pub fn symmetry_refine(
    model: &GroundDecPomdp,
    candidate: &Partitioning,
    cap: u64,
) -> Result<Partitioning> {
    refine_with_witness(model, candidate, cap).map(|r| r.partitioning)
}

pub fn refine_with_witness(
    model: &GroundDecPomdp,
    candidate: &Partitioning,
    cap: u64,
) -> Result<Refinement> {
    candidate.check_ranges(model)?;
    model.joint_space(JointKind::Actions, cap)?;
    model.joint_space(JointKind::Observations, cap)?;

    let mut first_asymmetry = None;
    let mut parts = Vec::new();
    for (k, members) in candidate.blocks().iter().enumerate() {
        let (a, o) = (candidate.action_range(k), candidate.observation_range(k));
        // Adjacent transpositions generate the symmetric group on the block.
        let failing = members
            .windows(2)
            .find_map(|w| transposition_defect(model, w[0], w[1]).map(|d| (w[0], w[1], d)));
        let Some((i, j, detail)) = failing else {
            parts.push((members.clone(), a.clone(), o.clone()));
            continue;
        };
        first_asymmetry.get_or_insert(Asymmetry {
            agents: (i, j),
            detail,
        });
        // "(i j) is a symmetry" is an equivalence relation on agents, since
        // (i k) = (i j)(j k)(i j); classes are found against representatives.
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &m in members {
            match classes
                .iter_mut()
                .find(|c| transposition_defect(model, c[0], m).is_none())
            {
                Some(c) => c.push(m),
                None => classes.push(vec![m]),
            }
        }
        parts.extend(classes.into_iter().map(|c| (c, a.clone(), o.clone())));
    }
    Ok(Refinement {
        partitioning: Partitioning::ordered_by_first_member(parts, model.num_agents()),
        first_asymmetry,
    })
}
