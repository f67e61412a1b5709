//! Seeded random models for tests, benchmarks and `gen-random`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counting::HistogramTuple;
use crate::error::Result;
use crate::lifting::{LiftedDecPomdp, Partitioning};
use crate::model::{Belief, Distribution, JointKind, Mdp, Pomdp, Range, DEFAULT_ENUMERATION_CAP};
pub use crate::size::PartitionShape;

/// The generator used for every seeded instance.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector; about a third of the entries are zeroed when
/// `sparse` is set (at least one entry stays positive).
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, len: usize, sparse: bool) -> Distribution {
    let mut w: Vec<f64> = (0..len)
        .map(|_| {
            if sparse && rng.random_bool(1.0 / 3.0) {
                0.0
            } else {
                rng.random_range(0.05..1.0)
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..len)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    Distribution::from_raw(w.into_iter().map(|x| x / total).collect())
}

fn random_reward<R: Rng + ?Sized>(rng: &mut R, states: usize) -> Vec<f64> {
    (0..states).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Every action applicable in every state.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, states: usize, actions: usize) -> Mdp {
    let mut transition = BTreeMap::new();
    for s in 0..states {
        for a in 0..actions {
            transition.insert((s, a), random_distribution(rng, states, true));
        }
    }
    Mdp {
        states: Range::numbered("s", states),
        actions: Range::numbered("a", actions),
        transition,
        reward: random_reward(rng, states),
        discount: rng.random_range(0.5..0.95),
    }
}

pub fn random_pomdp<R: Rng + ?Sized>(
    rng: &mut R,
    states: usize,
    actions: usize,
    observations: usize,
) -> Pomdp {
    let base = random_mdp(rng, states, actions);
    let sensor = (0..states)
        .map(|_| random_distribution(rng, observations, false))
        .collect();
    Pomdp {
        base,
        observations: Range::numbered("o", observations),
        sensor,
        initial_belief: Some(Belief::from_distribution(random_distribution(
            rng, states, false,
        ))),
    }
}

/// A random lifted model. Agents are assigned to partitions in shuffled
/// order, so partition members need not be contiguous.
pub fn random_lifted<R: Rng + ?Sized>(
    rng: &mut R,
    states: usize,
    shapes: &[PartitionShape],
) -> Result<LiftedDecPomdp> {
    let n: usize = shapes.iter().map(|p| p.size as usize).sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut blocks = Vec::with_capacity(shapes.len());
    let mut start = 0;
    for shape in shapes {
        let end = start + shape.size as usize;
        blocks.push(order[start..end].to_vec());
        start = end;
    }
    let partitioning = Partitioning::new(
        blocks,
        shapes
            .iter()
            .enumerate()
            .map(|(k, p)| Range::numbered(&format!("a{k}_"), p.actions as usize))
            .collect(),
        shapes
            .iter()
            .enumerate()
            .map(|(k, p)| Range::numbered(&format!("o{k}_"), p.observations as usize))
            .collect(),
        n,
    )?;
    let mut model = LiftedDecPomdp {
        agents: Range::numbered("agent", n),
        partitioning,
        states: Range::numbered("s", states),
        transition: BTreeMap::new(),
        sensor: Vec::new(),
        reward: random_reward(rng, states),
        discount: rng.random_range(0.5..0.95),
        initial_belief: Belief::from_distribution(random_distribution(rng, states, false)),
    };
    let action_keys = model.histogram_tuples(JointKind::Actions, DEFAULT_ENUMERATION_CAP)?;
    for s in 0..states {
        for key in &action_keys {
            model
                .transition
                .insert((s, key.clone()), random_distribution(rng, states, true));
        }
    }
    let obs_keys: Vec<HistogramTuple> =
        model.histogram_tuples(JointKind::Observations, DEFAULT_ENUMERATION_CAP)?;
    model.sensor = (0..states)
        .map(|_| {
            let d = random_distribution(rng, obs_keys.len(), true);
            obs_keys
                .iter()
                .cloned()
                .zip(d.probs().iter().copied())
                .collect()
        })
        .collect();
    Ok(model)
}

/// A random lifted model with at most `max_agents` agents, range sizes up to
/// `max_range` and up to `max_states` states. Its ground form is liftable by
/// construction.
pub fn random_liftable<R: Rng + ?Sized>(
    rng: &mut R,
    max_agents: usize,
    max_range: usize,
    max_states: usize,
) -> Result<LiftedDecPomdp> {
    let n = rng.random_range(1..=max_agents);
    let mut left = n;
    let mut shapes = Vec::new();
    while left > 0 {
        let size = rng.random_range(1..=left);
        left -= size;
        shapes.push(PartitionShape {
            size: size as u64,
            actions: rng.random_range(1..=max_range) as u64,
            observations: rng.random_range(1..=max_range) as u64,
        });
    }
    let states = rng.random_range(1..=max_states);
    random_lifted(rng, states, &shapes)
}
