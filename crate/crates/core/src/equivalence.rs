//! End-to-end check that lifting preserves the optimal value.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::lifting::{lift, range_partition, refine_with_witness, LiftedDecPomdp, Partitioning};
use crate::model::{GroundDecPomdp, JointKind, DEFAULT_ENUMERATION_CAP};
use crate::size::{ground_key_count, lifted_key_count, size_report, SizeParams, SizeReport};
use crate::solvers::{decpomdp_exhaustive_with, lifted_exhaustive_with, SolverCaps};

/// Largest `|ground - lifted|` that still passes.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub horizon: usize,
    pub ground_value: f64,
    pub lifted_value: f64,
    /// `lifted_value - ground_value`.
    pub delta: f64,
    pub pass: bool,
    pub partitioning: Partitioning,
    pub size_comparison: SizeReport,
    /// Exact joint key counts: ground (actions, observations).
    pub ground_keys: (BigUint, BigUint),
    /// Exact histogram tuple counts: lifted (actions, observations).
    pub lifted_keys: (BigUint, BigUint),
}

/// Lifts `model` along its coarsest symmetric partitioning and returns it with
/// that partitioning.
///
/// With more than one agent and no pair of interchangeable agents there is
/// nothing to lift; this is reported as [`Error::NotLiftable`] carrying the
/// first transposition that broke symmetry.
pub fn lift_symmetric(model: &GroundDecPomdp) -> Result<LiftedDecPomdp> {
    let candidate = range_partition(model);
    let refined = refine_with_witness(model, &candidate, DEFAULT_ENUMERATION_CAP)?;
    let part = &refined.partitioning;
    if model.num_agents() > 1 && part.len() == model.num_agents() {
        let (reason, transposition) = match refined.first_asymmetry {
            Some(a) => (
                format!(
                    "no two agents are interchangeable; swapping {} and {} changes {}",
                    model.agents.label(a.agents.0),
                    model.agents.label(a.agents.1),
                    a.detail
                ),
                Some(a.agents),
            ),
            None => (
                "no two agents share action and observation ranges".to_string(),
                None,
            ),
        };
        return Err(Error::NotLiftable {
            reason,
            transposition,
        });
    }
    lift(model, part)
}

pub fn verify_equivalence(model: &GroundDecPomdp, horizon: usize) -> Result<EquivalenceReport> {
    verify_equivalence_with(model, horizon, SolverCaps::default())
}

/// Lifts `model`, solves both forms exactly at `horizon` and compares the
/// optimal values and representation sizes.
pub fn verify_equivalence_with(
    model: &GroundDecPomdp,
    horizon: usize,
    caps: SolverCaps,
) -> Result<EquivalenceReport> {
    let lifted = lift_symmetric(model)?;
    let ground_value = decpomdp_exhaustive_with(model, horizon, caps)?.value;
    let lifted_value = lifted_exhaustive_with(&lifted, horizon, false, caps)?.value;
    let delta = lifted_value - ground_value;
    Ok(EquivalenceReport {
        horizon,
        ground_value,
        lifted_value,
        delta,
        pass: delta.abs() < EQUIVALENCE_TOLERANCE,
        size_comparison: size_report(&SizeParams::from_lifted(&lifted)?),
        ground_keys: (
            ground_key_count(model, JointKind::Actions),
            ground_key_count(model, JointKind::Observations),
        ),
        lifted_keys: (
            lifted_key_count(&lifted, JointKind::Actions),
            lifted_key_count(&lifted, JointKind::Observations),
        ),
        partitioning: lifted.partitioning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::ground;
    use crate::model::symmetric_pair;
    use crate::nano::{generate_nano, NanoParams};

    #[test]
    fn symmetric_pair_passes() {
        let r = verify_equivalence(&symmetric_pair(), 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.partitioning.len(), 1);
        assert_eq!(r.ground_keys.1, BigUint::from(4u32));
        assert_eq!(r.lifted_keys.1, BigUint::from(3u32));
    }

    #[test]
    fn single_agent_passes_trivially() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let shapes = [crate::random::PartitionShape {
            size: 1,
            actions: 2,
            observations: 2,
        }];
        let l = crate::random::random_lifted(&mut rng, 2, &shapes).unwrap();
        let g = ground(&l, DEFAULT_ENUMERATION_CAP).unwrap();
        let r = verify_equivalence(&g, 2).unwrap();
        assert!(r.pass);
        assert_eq!(r.delta, 0.0);
    }

    #[test]
    fn asymmetric_pair_is_not_liftable() {
        let mut m = symmetric_pair();
        // agent 0's push alone now also reaches s1
        let key = vec![0, 1];
        m.transition.insert(
            (0, key),
            crate::model::Distribution::from_raw(vec![0.2, 0.8]),
        );
        match verify_equivalence(&m, 1) {
            Err(Error::NotLiftable { transposition, .. }) => {
                assert_eq!(transposition, Some((0, 1)))
            }
            other => panic!("expected NotLiftable, got {other:?}"),
        }
    }

    #[test]
    fn nano_desk_instance_passes() {
        let p = NanoParams {
            partition_size: 2,
            ..NanoParams::default()
        };
        let g = ground(&generate_nano(&p).unwrap(), DEFAULT_ENUMERATION_CAP).unwrap();
        let r = verify_equivalence(&g, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.partitioning.len(), 2);
    }
}
