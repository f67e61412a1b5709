//! Partitions of interchangeable agents and the ground/lifted compilers.

mod compile;
mod lifted;
mod partition;

pub use compile::{ground, ground_distance, key_histograms, lift, lifted_distance};
pub use lifted::LiftedDecPomdp;
pub use partition::{
    range_partition, refine_with_witness, symmetry_refine, transposition_defect, Asymmetry,
    Partitioning, Refinement,
};

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::counting::HistogramTuple;
    use crate::model::{
        symmetric_pair, Belief, Distribution, GroundDecPomdp, Range, Validate,
        DEFAULT_ENUMERATION_CAP,
    };
    use crate::Error;

    const CAP: u64 = DEFAULT_ENUMERATION_CAP;

    fn key(s: &str) -> HistogramTuple {
        s.parse().unwrap()
    }

    /// Three agents over {x, y}; agent 0 pushes twice as hard as 1 and 2.
    fn lopsided_triple() -> GroundDecPomdp {
        let acts = Range::new(["x", "y"]).unwrap();
        let obs = Range::new(["p", "q"]).unwrap();
        let mut transition = BTreeMap::new();
        for s in 0..2 {
            for a0 in 0..2 {
                for a1 in 0..2 {
                    for a2 in 0..2 {
                        let go = (2 * a0 + a1 + a2) as f64 / 4.0;
                        transition.insert(
                            (s, vec![a0, a1, a2]),
                            Distribution::from_raw(vec![1.0 - go, go]),
                        );
                    }
                }
            }
        }
        let mut row = BTreeMap::new();
        for o0 in 0..2 {
            for o1 in 0..2 {
                for o2 in 0..2 {
                    row.insert(vec![o0, o1, o2], 0.125);
                }
            }
        }
        GroundDecPomdp {
            agents: Range::new(["a", "b", "c"]).unwrap(),
            states: Range::new(["s0", "s1"]).unwrap(),
            agent_actions: vec![acts.clone(), acts.clone(), acts],
            agent_observations: vec![obs.clone(), obs.clone(), obs],
            transition,
            sensor: vec![row.clone(), row],
            reward: vec![0.0, 1.0],
            discount: 0.9,
            initial_belief: Belief::uniform(2),
        }
    }

    #[test]
    fn range_partition_groups_equal_ranges() {
        let mut m = lopsided_triple();
        assert_eq!(range_partition(&m).blocks(), &[vec![0, 1, 2]]);
        m.agent_actions[1] = Range::new(["x", "y", "z"]).unwrap();
        assert_eq!(range_partition(&m).blocks(), &[vec![0, 2], vec![1]]);
    }

    #[test]
    fn refinement_isolates_the_odd_agent() {
        let m = lopsided_triple();
        let r = refine_with_witness(&m, &range_partition(&m), CAP).unwrap();
        assert_eq!(r.partitioning.blocks(), &[vec![0], vec![1, 2]]);
        assert_eq!(r.first_asymmetry.unwrap().agents, (0, 1));
        // already refined partitions are fixed points
        let again = symmetry_refine(&m, &r.partitioning, CAP).unwrap();
        assert_eq!(again, r.partitioning);
    }

    #[test]
    fn sensor_asymmetry_is_detected() {
        let mut m = symmetric_pair();
        m.sensor[1].insert(vec![0, 1], 0.35);
        m.sensor[1].insert(vec![1, 0], 0.15);
        assert!(transposition_defect(&m, 0, 1).is_some());
        let refined = symmetry_refine(&m, &range_partition(&m), CAP).unwrap();
        assert_eq!(refined.blocks(), &[vec![0], vec![1]]);
    }

    #[test]
    fn refine_rejects_mismatched_candidate() {
        let mut m = symmetric_pair();
        m.agent_observations[1] = Range::new(["p", "q", "r"]).unwrap();
        let bad = Partitioning::new(
            vec![vec![0, 1]],
            vec![m.agent_actions[0].clone()],
            vec![m.agent_observations[0].clone()],
            2,
        )
        .unwrap();
        assert!(matches!(
            symmetry_refine(&m, &bad, CAP),
            Err(Error::RangeMismatch(_))
        ));
    }

    #[test]
    fn lifting_aggregates_uniform_sensor_mass() {
        let m = symmetric_pair();
        let l = lift(&m, &range_partition(&m)).unwrap();
        assert!(l.validate().is_empty());
        let row = &l.sensor[0];
        assert_eq!(row.len(), 3);
        assert!((row[&key("[2,0]")] - 0.25).abs() < 1e-12);
        assert!((row[&key("[1,1]")] - 0.5).abs() < 1e-12);
        assert!((row[&key("[0,2]")] - 0.25).abs() < 1e-12);
        // 3 action histograms x 2 states
        assert_eq!(l.transition.len(), 6);
        assert_eq!(l.transition[&(0, key("[1,1]"))].probs(), &[0.5, 0.5]);
    }

    #[test]
    fn asymmetric_transition_is_not_liftable() {
        let m = lopsided_triple();
        let err = lift(&m, &range_partition(&m)).unwrap_err();
        assert!(matches!(err, Error::NotLiftable { .. }), "{err}");
    }

    #[test]
    fn uneven_sensor_mass_is_not_liftable() {
        let mut m = symmetric_pair();
        m.sensor[0].insert(vec![0, 1], 0.3);
        m.sensor[0].insert(vec![1, 0], 0.2);
        assert!(matches!(
            lift(&m, &range_partition(&m)),
            Err(Error::NotLiftable { .. })
        ));
    }

    #[test]
    fn lifted_model_under_refined_partitioning_round_trips() {
        let m = lopsided_triple();
        let p = symmetry_refine(&m, &range_partition(&m), CAP).unwrap();
        let l = lift(&m, &p).unwrap();
        assert!(l.validate().is_empty());
        let g = ground(&l, CAP).unwrap();
        assert!(ground_distance(&g, &m).unwrap() < 1e-12);
        let l2 = lift(&g, &p).unwrap();
        assert!(lifted_distance(&l, &l2).unwrap() < 1e-12);
    }

    #[test]
    fn ground_spreads_mass_by_multiplicity() {
        let m = symmetric_pair();
        let l = lift(&m, &range_partition(&m)).unwrap();
        let g = ground(&l, CAP).unwrap();
        assert!((g.sensor_prob(0, &[0, 1]) - 0.25).abs() < 1e-12);
        assert!(ground(&l, 3).unwrap_err().is_capacity());
    }

    #[test]
    fn lifted_validation_reports_bad_keys_and_gaps() {
        let m = symmetric_pair();
        let mut l = lift(&m, &range_partition(&m)).unwrap();
        l.transition.remove(&(1, key("[0,2]")));
        l.sensor[0].insert(key("[3,0]"), 0.0);
        let report = l.validate().to_string();
        assert!(report.contains("1 of 6"), "{report}");
        assert!(report.contains("[3,0]"), "{report}");
    }
}
