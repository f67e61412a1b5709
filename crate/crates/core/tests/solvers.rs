use std::collections::BTreeMap;

use liftdec::lifting::{ground, lift, range_partition, symmetry_refine, LiftedDecPomdp};
use liftdec::model::{
    Belief, Distribution, GroundDecPomdp, Mdp, Pomdp, Range, DEFAULT_ENUMERATION_CAP,
};
use liftdec::random::{random_liftable, random_mdp, random_pomdp};
use liftdec::solvers::{
    backup, decpomdp_exhaustive, lifted_exhaustive, mdp_value_iteration, pomdp_plan_iteration,
    ConditionalPlan, JointPolicy,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CAP: u64 = DEFAULT_ENUMERATION_CAP;

/// Every depth-`d` plan over `a` actions and `o` observations.
fn all_plans(d: usize, a: usize, o: usize) -> Vec<ConditionalPlan> {
    if d == 1 {
        return (0..a).map(ConditionalPlan::leaf).collect();
    }
    let sub = all_plans(d - 1, a, o);
    let mut out = Vec::new();
    for action in 0..a {
        let mut idx = vec![0usize; o];
        loop {
            out.push(ConditionalPlan {
                action,
                subplans: idx.iter().map(|&i| sub[i].clone()).collect(),
            });
            let Some(pos) = (0..o).rev().find(|&k| idx[k] + 1 < sub.len()) else {
                break;
            };
            idx[pos] += 1;
            idx[pos + 1..].iter_mut().for_each(|x| *x = 0);
        }
    }
    out
}

/// Expected discounted reward of running `plans` from `s`, by explicit
/// recursion over states and joint observations.
fn eval_ground(m: &GroundDecPomdp, s: usize, plans: &[&ConditionalPlan]) -> f64 {
    if plans[0].subplans.is_empty() {
        return m.reward[s];
    }
    let a: Vec<usize> = plans.iter().map(|p| p.action).collect();
    let row = &m.transition[&(s, a)];
    let mut future = 0.0;
    for (next, &p) in row.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (o, &q) in &m.sensor[next] {
            let subs: Vec<&ConditionalPlan> =
                plans.iter().zip(o).map(|(pl, &oi)| pl.after(oi)).collect();
            future += p * q * eval_ground(m, next, &subs);
        }
    }
    m.reward[s] + m.discount * future
}

fn value_of(m: &GroundDecPomdp, plans: &[&ConditionalPlan]) -> f64 {
    (0..m.num_states())
        .map(|s| m.initial_belief[s] * eval_ground(m, s, plans))
        .sum()
}

/// Ground plans of a lifted policy, assigned to partition members in order.
fn ground_plans<'a>(l: &LiftedDecPomdp, policy: &'a JointPolicy) -> Vec<&'a ConditionalPlan> {
    let mut out = vec![None; l.num_agents()];
    for (k, comp) in policy.components.iter().enumerate() {
        let mut members = l.partitioning.members(k).iter();
        for a in comp {
            for _ in 0..a.count {
                out[*members.next().unwrap()] = Some(&a.plan);
            }
        }
    }
    out.into_iter().map(Option::unwrap).collect()
}

fn brute_force_optimum(m: &GroundDecPomdp, h: usize) -> f64 {
    let per_agent: Vec<Vec<ConditionalPlan>> = (0..m.num_agents())
        .map(|i| all_plans(h, m.agent_actions[i].len(), m.agent_observations[i].len()))
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; per_agent.len()];
    loop {
        let plans: Vec<&ConditionalPlan> =
            idx.iter().zip(&per_agent).map(|(&i, p)| &p[i]).collect();
        best = best.max(value_of(m, &plans));
        let Some(pos) = (0..idx.len())
            .rev()
            .find(|&k| idx[k] + 1 < per_agent[k].len())
        else {
            break;
        };
        idx[pos] += 1;
        idx[pos + 1..].iter_mut().for_each(|x| *x = 0);
    }
    best
}

fn small_ground(seed: u64) -> (LiftedDecPomdp, GroundDecPomdp) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = random_liftable(&mut rng, 3, 2, 2).unwrap();
    let g = ground(&l, CAP).unwrap();
    (l, g)
}

#[test]
fn ground_solver_matches_brute_force() {
    for seed in 0..12 {
        let (_, g) = small_ground(seed);
        for h in 1..=2 {
            let sol = decpomdp_exhaustive(&g, h).unwrap();
            let oracle = brute_force_optimum(&g, h);
            assert!(
                (sol.value - oracle).abs() < 1e-9,
                "seed {seed} h {h}: {} vs {oracle}",
                sol.value
            );
            let plans = sol.policy.agent_plans();
            assert!((value_of(&g, &plans) - sol.value).abs() < 1e-9);
        }
    }
}

#[test]
fn ground_solver_matches_brute_force_at_horizon_three() {
    // two agents, binary ranges: 128 plans each
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let shapes = [liftdec::random::PartitionShape {
        size: 2,
        actions: 2,
        observations: 2,
    }];
    let l = liftdec::random::random_lifted(&mut rng, 2, &shapes).unwrap();
    let g = ground(&l, CAP).unwrap();
    let sol = decpomdp_exhaustive(&g, 3).unwrap();
    assert!((sol.value - brute_force_optimum(&g, 3)).abs() < 1e-9);
}

#[test]
fn lifted_policy_value_is_its_ground_value() {
    for seed in 0..20 {
        let (l, g) = small_ground(seed);
        for h in 1..=3 {
            for peak in [false, true] {
                let sol = lifted_exhaustive(&l, h, peak).unwrap();
                let plans = ground_plans(&l, &sol.policy);
                assert!(
                    (value_of(&g, &plans) - sol.value).abs() < 1e-9,
                    "seed {seed} h {h} peak {peak}"
                );
            }
        }
    }
}

#[test]
fn single_agent_reduces_to_pomdp() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let p = random_pomdp(&mut rng, 3, 2, 2);
        let mut sensor = Vec::new();
        for s in 0..3 {
            sensor.push(
                (0..2)
                    .map(|o| (vec![o], p.obs_prob(s, o)))
                    .collect::<BTreeMap<_, _>>(),
            );
        }
        let g = GroundDecPomdp {
            agents: Range::new(["solo"]).unwrap(),
            states: p.base.states.clone(),
            agent_actions: vec![p.base.actions.clone()],
            agent_observations: vec![p.observations.clone()],
            transition: p
                .base
                .transition
                .iter()
                .map(|((s, a), d)| ((*s, vec![*a]), d.clone()))
                .collect(),
            sensor,
            reward: p.base.reward.clone(),
            discount: p.base.discount,
            initial_belief: p.initial_belief.clone().unwrap(),
        };
        for h in 1..=3 {
            let dec = decpomdp_exhaustive(&g, h).unwrap().value;
            let pomdp = pomdp_plan_iteration(&p, h).unwrap();
            let b0 = g.initial_belief.probs();
            assert!((dec - pomdp.value_at(b0)).abs() < 1e-9);
        }
    }
}

#[test]
fn open_loop_search_with_one_observation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let shapes = [
        liftdec::random::PartitionShape {
            size: 1,
            actions: 2,
            observations: 1,
        },
        liftdec::random::PartitionShape {
            size: 1,
            actions: 2,
            observations: 1,
        },
    ];
    let l = liftdec::random::random_lifted(&mut rng, 3, &shapes).unwrap();
    let g = ground(&l, CAP).unwrap();
    // action sequences per agent: 2^(h-1) relevant choices, all enumerated
    for h in 1..=3 {
        let oracle = brute_force_optimum(&g, h);
        let sol = decpomdp_exhaustive(&g, h).unwrap();
        assert!((sol.value - oracle).abs() < 1e-9);
    }
}

#[test]
fn value_grows_with_horizon_when_rewards_are_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..8 {
        let mut l = random_liftable(&mut rng, 3, 2, 3).unwrap();
        l.reward.iter_mut().for_each(|r| *r = r.abs());
        let g = ground(&l, CAP).unwrap();
        let mut last = f64::NEG_INFINITY;
        for h in 1..=3 {
            let v = decpomdp_exhaustive(&g, h).unwrap().value;
            assert!(v >= last - 1e-12);
            last = v;
        }
    }
}

#[test]
fn asymmetric_model_lifts_under_refined_partitioning() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shapes = [
        liftdec::random::PartitionShape {
            size: 1,
            actions: 2,
            observations: 2,
        },
        liftdec::random::PartitionShape {
            size: 2,
            actions: 2,
            observations: 2,
        },
    ];
    let l = liftdec::random::random_lifted(&mut rng, 2, &shapes).unwrap();
    let g = ground(&l, CAP).unwrap();
    let p = symmetry_refine(&g, &range_partition(&g), CAP).unwrap();
    assert_eq!(p.len(), 2);
    let l2 = lift(&g, &p).unwrap();
    for h in 1..=3 {
        let a = decpomdp_exhaustive(&g, h).unwrap().value;
        let b = lifted_exhaustive(&l2, h, false).unwrap().value;
        assert!((a - b).abs() < 1e-9);
    }
}

/// Finite-horizon MDP values: `V_1 = R`, `V_{k+1} = R + γ max_a T V_k`.
fn finite_horizon(m: &Mdp, h: usize) -> Vec<f64> {
    let mut v = m.reward.clone();
    for _ in 1..h {
        v = backup(m, &v);
    }
    v
}

#[test]
fn fully_observable_pomdp_matches_finite_horizon_mdp() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let base = random_mdp(&mut rng, 3, 2);
        let p = Pomdp {
            observations: base.states.clone(),
            sensor: (0..3).map(|s| Distribution::point(3, s)).collect(),
            base: base.clone(),
            initial_belief: None,
        };
        for h in 1..=3 {
            let sol = pomdp_plan_iteration(&p, h).unwrap();
            let v = finite_horizon(&base, h);
            for (s, &vs) in v.iter().enumerate() {
                let corner = Belief::point(3, s);
                assert!((sol.value_at(corner.probs()) - vs).abs() < 1e-9);
            }
        }
    }
}

/// Alpha vectors of every depth-`h` plan, by direct recursion.
fn all_alphas(p: &Pomdp, h: usize) -> Vec<Vec<f64>> {
    fn alpha(p: &Pomdp, plan: &ConditionalPlan) -> Vec<f64> {
        let ns = p.num_states();
        if plan.subplans.is_empty() {
            return p.base.reward.clone();
        }
        let subs: Vec<Vec<f64>> = plan.subplans.iter().map(|c| alpha(p, c)).collect();
        (0..ns)
            .map(|s| {
                let future: f64 = (0..ns)
                    .map(|n| {
                        p.base.prob(s, plan.action, n)
                            * (0..p.num_observations())
                                .map(|o| p.obs_prob(n, o) * subs[o][n])
                                .sum::<f64>()
                    })
                    .sum();
                p.base.reward[s] + p.base.discount * future
            })
            .collect()
    }
    all_plans(h, p.base.actions.len(), p.num_observations())
        .iter()
        .map(|plan| alpha(p, plan))
        .collect()
}

fn upper(vs: &[Vec<f64>], b: f64) -> f64 {
    vs.iter()
        .map(|a| b * a[0] + (1.0 - b) * a[1])
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn pruned_surface_equals_all_plans_surface() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let p = random_pomdp(&mut rng, 2, 2, 2);
        let kept: Vec<Vec<f64>> = pomdp_plan_iteration(&p, 2)
            .unwrap()
            .vectors
            .into_iter()
            .map(|v| v.alpha)
            .collect();
        let all = all_alphas(&p, 2);
        for i in 0..=20 {
            let b = i as f64 * 0.05;
            assert!((upper(&kept, b) - upper(&all, b)).abs() < 1e-9);
        }
    }
}

#[test]
fn decpomdp_horizon_one_ignores_observations() {
    let (_, mut g) = small_ground(2);
    let v1 = decpomdp_exhaustive(&g, 1).unwrap().value;
    let expected: f64 = (0..g.num_states())
        .map(|s| g.initial_belief[s] * g.reward[s])
        .sum();
    assert!((v1 - expected).abs() < 1e-12);
    for row in &mut g.sensor {
        for p in row.values_mut() {
            *p = 0.0;
        }
        let first = row.keys().next().unwrap().clone();
        row.insert(first, 1.0);
    }
    assert!((decpomdp_exhaustive(&g, 1).unwrap().value - expected).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lifted_and_ground_values_agree(seed in any::<u64>(), h in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_liftable(&mut rng, 4, 2, 3).unwrap();
        let g = ground(&l, CAP).unwrap();
        let a = decpomdp_exhaustive(&g, h).unwrap().value;
        let b = lifted_exhaustive(&l, h, false).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        let peak = lifted_exhaustive(&l, h, true).unwrap().value;
        prop_assert!(peak <= b + 1e-12);
    }

    #[test]
    fn bellman_residual_below_stopping_bound(seed in any::<u64>(), eps in 1e-6f64..1e-1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, 5, 3);
        let (u, _) = mdp_value_iteration(&m, eps).unwrap();
        let bound = eps * (1.0 - m.discount) / m.discount;
        let residual = backup(&m, &u.values)
            .iter()
            .zip(&u.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prop_assert!(u.converged);
        prop_assert!(residual < bound);
    }

    #[test]
    fn pruning_is_sound_on_a_coarse_grid(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_pomdp(&mut rng, 2, 2, 2);
        let kept: Vec<Vec<f64>> = pomdp_plan_iteration(&p, 2).unwrap().vectors.into_iter().map(|v| v.alpha).collect();
        let all = all_alphas(&p, 2);
        for i in 0..=20 {
            let b = i as f64 * 0.05;
            for q in &all {
                prop_assert!(upper(&kept, b) >= b * q[0] + (1.0 - b) * q[1] - 1e-9);
            }
        }
    }
}
