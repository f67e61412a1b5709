use super::plan::{
    DepthStats, JointPolicy, PlanAssignment, PlanForest, PlanNode, SolveStats, SolverCaps,
};
use super::pomdp::{check_horizon, growth_error, plan_growth};
use super::prune::dominance_prune_indices;
use crate::error::{Error, Result};
use crate::model::{GroundDecPomdp, JointKind, JointSpace, Validate};

/// An optimal joint policy and its expected discounted reward from the
/// initial belief.
#[derive(Debug, Clone, PartialEq)]
pub struct DecSolution {
    pub policy: JointPolicy,
    pub value: f64,
    pub stats: SolveStats,
}

/// Values of every joint plan at one depth, `values[rank * S + s]`, with joint
/// ranks in mixed radix over the per-agent plan counts (agent 0 most
/// significant).
#[derive(Debug, Clone)]
struct Table {
    space: JointSpace,
    values: Vec<f64>,
}

struct Dense<'m> {
    model: &'m GroundDecPomdp,
    ns: usize,
    actions: JointSpace,
    /// `t[(s * |JA| + ja) * S + s']`
    t: Vec<f64>,
    /// Non-zero `(joint observation, P(o | s'))` per `s'`.
    sensor: Vec<Vec<(Vec<usize>, f64)>>,
}

impl<'m> Dense<'m> {
    fn new(model: &'m GroundDecPomdp, cap: u64) -> Result<Self> {
        let ns = model.num_states();
        let actions = model.joint_space(JointKind::Actions, cap)?;
        let mut t = vec![0.0; ns * actions.len() * ns];
        for ((s, a), row) in &model.transition {
            let ja = actions.rank(a).expect("validated key");
            t[(s * actions.len() + ja) * ns..][..ns].copy_from_slice(row.probs());
        }
        let sensor = model
            .sensor
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(o, &p)| (o.clone(), p))
                    .collect()
            })
            .collect();
        Ok(Dense {
            model,
            ns,
            actions,
            t,
            sensor,
        })
    }

    /// `W(s') = Σ_o Ω(o|s') V_prev(children(q, o), s')`.
    fn future(&self, q: &[usize], level: &[Vec<PlanNode>], prev: &Table, w: &mut [f64]) {
        let strides = prev.space.strides();
        for (next, wn) in w.iter_mut().enumerate() {
            *wn = self.sensor[next]
                .iter()
                .map(|(o, p)| {
                    let r: usize = q
                        .iter()
                        .enumerate()
                        .map(|(i, &qi)| level[i][qi].children[o[i]] * strides[i])
                        .sum();
                    p * prev.values[r * self.ns + next]
                })
                .sum();
        }
    }

    fn value(&self, s: usize, ja: usize, w: &[f64]) -> f64 {
        let row = &self.t[(s * self.actions.len() + ja) * self.ns..][..self.ns];
        let future: f64 = row.iter().zip(w).map(|(p, x)| p * x).sum();
        self.model.reward[s] + self.model.discount * future
    }

    fn joint_action(&self, q: &[usize], level: &[Vec<PlanNode>]) -> usize {
        let strides = self.actions.strides();
        q.iter()
            .enumerate()
            .map(|(i, &qi)| level[i][qi].action * strides[i])
            .sum()
    }
}

fn check_joint(counts: &[usize], ns: usize, cap: u64) -> Result<JointSpace> {
    let total = counts
        .iter()
        .fold(ns as u128, |acc, &c| acc.saturating_mul(c as u128));
    if total > cap as u128 {
        let exact = counts
            .iter()
            .fold(num_bigint::BigUint::from(ns), |acc, &c| acc * c);
        return Err(Error::capacity("joint plan values", exact, cap));
    }
    JointSpace::new(counts.to_vec(), cap)
}

/// Candidate depth-`d` plans per agent from the surviving depth-`d-1` plans.
fn expand(
    model: &GroundDecPomdp,
    prev: Option<&[Vec<PlanNode>]>,
    caps: SolverCaps,
) -> Result<Vec<Vec<PlanNode>>> {
    (0..model.num_agents())
        .map(|i| {
            let na = model.agent_actions[i].len();
            let Some(prev) = prev else {
                if na as u64 > caps.plans {
                    return Err(Error::capacity("depth-1 plans", na, caps.plans));
                }
                return Ok((0..na)
                    .map(|a| PlanNode {
                        action: a,
                        children: vec![],
                    })
                    .collect());
            };
            let (np, no) = (prev[i].len(), model.agent_observations[i].len());
            if plan_growth(na, np, no) > caps.plans as u128 {
                return Err(growth_error(
                    &format!("plans of agent {}", model.agents.label(i)),
                    na,
                    np,
                    no,
                    caps.plans,
                ));
            }
            let branches = JointSpace::new(vec![np; no], caps.plans)?;
            Ok((0..na)
                .flat_map(|a| {
                    branches.iter().map(move |children| PlanNode {
                        action: a,
                        children,
                    })
                })
                .collect())
        })
        .collect()
}

/// Removes, agent by agent until nothing changes, every plan whose value
/// vector over (other agents' surviving plans, state) is never the unique
/// best. Returns the surviving indices per agent.
pub(crate) fn iterated_elimination(
    counts: &[usize],
    ns: usize,
    value: impl Fn(&[usize], usize) -> f64,
) -> Vec<Vec<usize>> {
    let n = counts.len();
    let mut alive: Vec<Vec<usize>> = counts.iter().map(|&c| (0..c).collect()).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if alive[i].len() <= 1 {
                continue;
            }
            let others: Vec<usize> = (0..n)
                .map(|j| if j == i { 1 } else { alive[j].len() })
                .collect();
            let contexts = JointSpace::new(others, u64::MAX).expect("bounded by the value table");
            let vectors: Vec<Vec<f64>> = alive[i]
                .iter()
                .map(|&p| {
                    let mut v = Vec::with_capacity(contexts.len() * ns);
                    let mut q = vec![0; n];
                    for c in contexts.iter() {
                        for j in 0..n {
                            q[j] = if j == i { p } else { alive[j][c[j]] };
                        }
                        v.extend((0..ns).map(|s| value(&q, s)));
                    }
                    v
                })
                .collect();
            let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
            let keep = dominance_prune_indices(&refs);
            if keep.len() < alive[i].len() {
                alive[i] = keep.into_iter().map(|k| alive[i][k]).collect();
                changed = true;
            }
        }
    }
    alive
}

pub fn decpomdp_exhaustive(model: &GroundDecPomdp, horizon: usize) -> Result<DecSolution> {
    decpomdp_exhaustive_with(model, horizon, SolverCaps::default())
}

/// Exact finite-horizon joint policy search. Plans are built bottom-up; below
/// the horizon, dominated plans are eliminated per agent against every
/// combination of the other agents' plans and the state, which never changes
/// the optimal value.
pub fn decpomdp_exhaustive_with(
    model: &GroundDecPomdp,
    horizon: usize,
    caps: SolverCaps,
) -> Result<DecSolution> {
    check_horizon(horizon)?;
    model.validate().into_result()?;
    let dense = Dense::new(model, caps.joint)?;
    let (n, ns) = (model.num_agents(), model.num_states());
    let belief = model.initial_belief.probs();
    let mut forests = vec![PlanForest::default(); n];
    let mut stats = SolveStats::default();
    let mut prev: Option<(Vec<Vec<PlanNode>>, Table)> = None;

    for depth in 1..=horizon {
        let level = expand(model, prev.as_ref().map(|(l, _)| l.as_slice()), caps)?;
        let counts: Vec<usize> = level.iter().map(Vec::len).collect();
        let space = check_joint(&counts, ns, caps.joint)?;
        let mut w = vec![0.0; ns];
        let mut eval = |q: &[usize], out: &mut dyn FnMut(usize, f64)| match &prev {
            None => (0..ns).for_each(|s| out(s, model.reward[s])),
            Some((_, table)) => {
                dense.future(q, &level, table, &mut w);
                let ja = dense.joint_action(q, &level);
                (0..ns).for_each(|s| out(s, dense.value(s, ja, &w)));
            }
        };

        if depth == horizon {
            let mut best: Option<(Vec<usize>, f64)> = None;
            for q in space.iter() {
                let mut v = 0.0;
                eval(&q, &mut |s, x| {
                    if belief[s] > 0.0 {
                        v += belief[s] * x;
                    }
                });
                if best.as_ref().is_none_or(|(_, b)| v > *b) {
                    best = Some((q, v));
                }
            }
            let (q, value) = best.expect("joint plan space is non-empty");
            stats.depths.push(DepthStats {
                depth,
                generated: counts.iter().map(|&c| c as u64).collect(),
                surviving: counts.iter().map(|&c| c as u64).collect(),
            });
            stats.joint_policies_evaluated = space.len() as u64;
            let mut components = Vec::with_capacity(n);
            for (i, forest) in forests.iter_mut().enumerate() {
                forest.levels.push(level[i].clone());
                components.push(vec![PlanAssignment {
                    plan: forest.materialize(depth, q[i]),
                    count: 1,
                }]);
            }
            return Ok(DecSolution {
                policy: JointPolicy {
                    horizon,
                    components,
                },
                value,
                stats,
            });
        }

        let mut values = vec![0.0; space.len() * ns];
        for (r, q) in space.iter().enumerate() {
            eval(&q, &mut |s, x| values[r * ns + s] = x);
        }
        let alive = iterated_elimination(&counts, ns, |q, s| {
            values[space.rank(q).expect("in range") * ns + s]
        });
        let kept_counts: Vec<usize> = alive.iter().map(Vec::len).collect();
        let kept_space = JointSpace::new(kept_counts.clone(), caps.joint)?;
        let mut kept_values = vec![0.0; kept_space.len() * ns];
        let mut full = vec![0; n];
        for (r, k) in kept_space.iter().enumerate() {
            for i in 0..n {
                full[i] = alive[i][k[i]];
            }
            let src = space.rank(&full).expect("in range") * ns;
            kept_values[r * ns..][..ns].copy_from_slice(&values[src..][..ns]);
        }
        stats.depths.push(DepthStats {
            depth,
            generated: counts.iter().map(|&c| c as u64).collect(),
            surviving: kept_counts.iter().map(|&c| c as u64).collect(),
        });
        let kept_level: Vec<Vec<PlanNode>> = alive
            .iter()
            .zip(&level)
            .map(|(a, l)| a.iter().map(|&p| l[p].clone()).collect())
            .collect();
        for (forest, l) in forests.iter_mut().zip(&kept_level) {
            forest.levels.push(l.clone());
        }
        prev = Some((
            kept_level,
            Table {
                space: kept_space,
                values: kept_values,
            },
        ));
    }
    unreachable!("the loop returns at the horizon")
}
