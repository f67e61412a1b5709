use std::collections::BTreeMap;

use num_bigint::BigUint;

use super::lifted::LiftedDecPomdp;
use super::partition::Partitioning;
use crate::counting::{Histogram, HistogramTuple};
use crate::error::{Error, Result};
use crate::model::{Distribution, GroundDecPomdp, JointKind, JointSpace, Validate, PROB_TOLERANCE};

/// Histogram tuple of a ground joint tuple under `partitioning`.
pub fn key_histograms(
    partitioning: &Partitioning,
    kind: JointKind,
    key: &[usize],
) -> HistogramTuple {
    HistogramTuple(
        (0..partitioning.len())
            .map(|k| {
                let mut counts = vec![0u64; partitioning.range(kind, k).len()];
                for &m in partitioning.members(k) {
                    counts[key[m]] += 1;
                }
                Histogram::from_counts(counts)
            })
            .collect(),
    )
}

/// Builds the lifted model of `model` under `partitioning`.
///
/// Fails with `NotLiftable` when two ground rows that share a histogram key
/// disagree, or a sensor key's mass is not spread evenly over its tuples.
pub fn lift(model: &GroundDecPomdp, partitioning: &Partitioning) -> Result<LiftedDecPomdp> {
    model.validate().into_result()?;
    partitioning.check_ranges(model)?;

    let mut transition: BTreeMap<(usize, HistogramTuple), (Distribution, &[usize])> =
        BTreeMap::new();
    for ((s, a), row) in &model.transition {
        let h = key_histograms(partitioning, JointKind::Actions, a);
        match transition.get(&(*s, h.clone())) {
            None => {
                transition.insert((*s, h), (row.clone(), a));
            }
            Some((first, witness)) => {
                if first.max_abs_diff(row) > PROB_TOLERANCE {
                    return Err(Error::NotLiftable {
                        reason: format!(
                            "P(. | {}, {}) and P(. | {}, {}) share histogram key {h} but differ",
                            model.states.label(*s),
                            model.describe_key(JointKind::Actions, witness),
                            model.states.label(*s),
                            model.describe_key(JointKind::Actions, a),
                        ),
                        transposition: None,
                    });
                }
            }
        }
    }

    let mut sensor = Vec::with_capacity(model.num_states());
    for (next, row) in model.sensor.iter().enumerate() {
        // per key: (mass, positive entries, min and max positive entry)
        let mut acc: BTreeMap<HistogramTuple, (f64, u64, f64, f64)> = BTreeMap::new();
        for (o, &p) in row {
            let h = key_histograms(partitioning, JointKind::Observations, o);
            let e = acc
                .entry(h)
                .or_insert((0.0, 0, f64::INFINITY, f64::NEG_INFINITY));
            e.0 += p;
            if p > PROB_TOLERANCE {
                e.1 += 1;
                e.2 = e.2.min(p);
                e.3 = e.3.max(p);
            }
        }
        let mut lifted_row = BTreeMap::new();
        for (h, (mass, positive, lo, hi)) in acc {
            if positive > 0
                && (BigUint::from(positive) != h.multiplicity() || hi - lo > PROB_TOLERANCE)
            {
                return Err(Error::NotLiftable {
                    reason: format!(
                        "observation mass for key {h} at {} is not uniform over its {} tuples",
                        model.states.label(next),
                        h.multiplicity()
                    ),
                    transposition: None,
                });
            }
            lifted_row.insert(h, mass);
        }
        sensor.push(lifted_row);
    }

    Ok(LiftedDecPomdp {
        agents: model.agents.clone(),
        partitioning: partitioning.clone(),
        states: model.states.clone(),
        transition: transition
            .into_iter()
            .map(|(k, (row, _))| (k, row))
            .collect(),
        sensor,
        reward: model.reward.clone(),
        discount: model.discount,
        initial_belief: model.initial_belief.clone(),
    })
}

/// Expands a lifted model over explicit agents. Each ground joint action uses
/// its histogram's row; each ground observation gets its key's mass divided
/// by the key's multiplicity.
pub fn ground(lifted: &LiftedDecPomdp, cap: u64) -> Result<GroundDecPomdp> {
    lifted.validate().into_result()?;
    let part = &lifted.partitioning;
    let owner: Vec<usize> = (0..lifted.num_agents())
        .map(|i| part.partition_of(i))
        .collect();
    let agent_actions: Vec<_> = owner
        .iter()
        .map(|&k| part.action_range(k).clone())
        .collect();
    let agent_observations: Vec<_> = owner
        .iter()
        .map(|&k| part.observation_range(k).clone())
        .collect();

    let actions = JointSpace::new(agent_actions.iter().map(|r| r.len()).collect(), cap)?;
    let observations = JointSpace::new(agent_observations.iter().map(|r| r.len()).collect(), cap)?;

    let mut transition = BTreeMap::new();
    for a in actions.iter() {
        let h = key_histograms(part, JointKind::Actions, &a);
        for s in 0..lifted.num_states() {
            let row = lifted
                .transition
                .get(&(s, h.clone()))
                .expect("validated lifted model has every row");
            transition.insert((s, a.clone()), row.clone());
        }
    }

    let mut sensor = vec![BTreeMap::new(); lifted.num_states()];
    for o in observations.iter() {
        let h = key_histograms(part, JointKind::Observations, &o);
        let m = crate::counting::multiplicity_f64_tuple(&h);
        for (next, row) in lifted.sensor.iter().enumerate() {
            if let Some(&p) = row.get(&h) {
                sensor[next].insert(o.clone(), p / m);
            }
        }
    }

    Ok(GroundDecPomdp {
        agents: lifted.agents.clone(),
        states: lifted.states.clone(),
        agent_actions,
        agent_observations,
        transition,
        sensor,
        reward: lifted.reward.clone(),
        discount: lifted.discount,
        initial_belief: lifted.initial_belief.clone(),
    })
}

fn scalar_distance(a: &GroundDecPomdp, b: &GroundDecPomdp) -> f64 {
    let reward = a
        .reward
        .iter()
        .zip(&b.reward)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let belief = a
        .initial_belief
        .distribution()
        .max_abs_diff(b.initial_belief.distribution());
    reward.max(belief).max((a.discount - b.discount).abs())
}

fn sparse_distance<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let one = a
        .iter()
        .map(|(k, p)| (p - b.get(k).copied().unwrap_or(0.0)).abs());
    let other = b
        .iter()
        .filter(|(k, _)| !a.contains_key(k))
        .map(|(_, p)| p.abs());
    one.chain(other).fold(0.0, f64::max)
}

/// Largest absolute difference between corresponding entries of two ground
/// models, or `None` when their spaces or transition keys differ.
pub fn ground_distance(a: &GroundDecPomdp, b: &GroundDecPomdp) -> Option<f64> {
    if a.agents != b.agents
        || a.states != b.states
        || a.agent_actions != b.agent_actions
        || a.agent_observations != b.agent_observations
        || a.reward.len() != b.reward.len()
        || a.sensor.len() != b.sensor.len()
        || !a.transition.keys().eq(b.transition.keys())
    {
        return None;
    }
    let t = a
        .transition
        .values()
        .zip(b.transition.values())
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max);
    let o = a
        .sensor
        .iter()
        .zip(&b.sensor)
        .map(|(x, y)| sparse_distance(x, y))
        .fold(0.0, f64::max);
    Some(t.max(o).max(scalar_distance(a, b)))
}

/// As [`ground_distance`], for lifted models.
pub fn lifted_distance(a: &LiftedDecPomdp, b: &LiftedDecPomdp) -> Option<f64> {
    if a.agents != b.agents
        || a.partitioning != b.partitioning
        || a.states != b.states
        || a.reward.len() != b.reward.len()
        || a.sensor.len() != b.sensor.len()
        || !a.transition.keys().eq(b.transition.keys())
    {
        return None;
    }
    let t = a
        .transition
        .values()
        .zip(b.transition.values())
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max);
    let o = a
        .sensor
        .iter()
        .zip(&b.sensor)
        .map(|(x, y)| sparse_distance(x, y))
        .fold(0.0, f64::max);
    let reward = a
        .reward
        .iter()
        .zip(&b.reward)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let belief = a
        .initial_belief
        .distribution()
        .max_abs_diff(b.initial_belief.distribution());
    Some(
        t.max(o)
            .max(reward)
            .max(belief)
            .max((a.discount - b.discount).abs()),
    )
}
