use super::plan::{DepthStats, PlanForest, PlanNode, PlanValueVector, SolveStats, SolverCaps};
use super::prune::dominance_prune_indices;
use crate::error::{Error, Result};
use crate::model::{JointSpace, Pomdp, Validate};

/// The non-dominated plans of one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpSolution {
    pub horizon: usize,
    pub vectors: Vec<PlanValueVector>,
    pub stats: SolveStats,
}

impl PomdpSolution {
    /// The surviving plan with the highest value at `belief`; ties go to the
    /// earliest plan.
    pub fn best(&self, belief: &[f64]) -> &PlanValueVector {
        let mut best = &self.vectors[0];
        let mut value = best.value_at(belief);
        for v in &self.vectors[1..] {
            let x = v.value_at(belief);
            if x > value {
                best = v;
                value = x;
            }
        }
        best
    }

    pub fn value_at(&self, belief: &[f64]) -> f64 {
        self.best(belief).value_at(belief)
    }
}

pub(crate) fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    Ok(())
}

/// `actions * previous^observations`, saturating.
pub(crate) fn plan_growth(actions: usize, previous: usize, observations: usize) -> u128 {
    (previous as u128)
        .checked_pow(observations as u32)
        .and_then(|p| p.checked_mul(actions as u128))
        .unwrap_or(u128::MAX)
}

pub(crate) fn growth_error(
    what: &str,
    actions: usize,
    previous: usize,
    observations: usize,
    cap: u64,
) -> Error {
    let exact = num_bigint::BigUint::from(previous).pow(observations as u32) * actions;
    Error::capacity(what, exact, cap)
}

pub fn pomdp_plan_iteration(model: &Pomdp, horizon: usize) -> Result<PomdpSolution> {
    pomdp_plan_iteration_with(model, horizon, SolverCaps::default())
}

/// Builds depth-`d` plans from the surviving depth-`d-1` plans and prunes the
/// dominated ones, up to `horizon`. Depth-0 subplans are worth 0.
pub fn pomdp_plan_iteration_with(
    model: &Pomdp,
    horizon: usize,
    caps: SolverCaps,
) -> Result<PomdpSolution> {
    check_horizon(horizon)?;
    model.validate().into_result()?;
    let mdp = &model.base;
    let (ns, na, no) = (
        model.num_states(),
        mdp.actions.len(),
        model.num_observations(),
    );
    for s in 0..ns {
        for a in 0..na {
            if mdp.row(s, a).is_none() {
                return Err(Error::InvalidParams(format!(
                    "plan iteration needs every action applicable everywhere; {} has no row in {}",
                    mdp.actions.label(a),
                    mdp.states.label(s)
                )));
            }
        }
    }

    let mut forest = PlanForest::default();
    let mut stats = SolveStats::default();
    let mut alphas: Vec<Vec<f64>> = Vec::new();
    for depth in 1..=horizon {
        let prev = alphas.len();
        let (nodes, candidates) = if depth == 1 {
            if na as u64 > caps.plans {
                return Err(Error::capacity("depth-1 plans", na, caps.plans));
            }
            let nodes = (0..na)
                .map(|a| PlanNode {
                    action: a,
                    children: vec![],
                })
                .collect();
            (nodes, vec![mdp.reward.clone(); na])
        } else {
            if plan_growth(na, prev, no) > caps.plans as u128 {
                return Err(growth_error("POMDP plans", na, prev, no, caps.plans));
            }
            // g[a][o][q][s] = Σ_s' T(s'|s,a) Ω(o|s') α_q(s')
            let mut g = vec![vec![vec![vec![0.0; ns]; prev]; no]; na];
            for (a, ga) in g.iter_mut().enumerate() {
                for s in 0..ns {
                    let row = mdp.row(s, a).expect("checked above").probs();
                    for (next, &p) in row.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                        for (o, go) in ga.iter_mut().enumerate() {
                            let w = p * model.obs_prob(next, o);
                            if w == 0.0 {
                                continue;
                            }
                            for (q, alpha) in alphas.iter().enumerate() {
                                go[q][s] += w * alpha[next];
                            }
                        }
                    }
                }
            }
            let branches = JointSpace::new(vec![prev; no], caps.plans)?;
            let mut nodes = Vec::new();
            let mut candidates = Vec::new();
            for (a, ga) in g.iter().enumerate() {
                for sigma in branches.iter() {
                    let alpha: Vec<f64> = (0..ns)
                        .map(|s| {
                            let future: f64 =
                                sigma.iter().enumerate().map(|(o, &q)| ga[o][q][s]).sum();
                            mdp.reward[s] + mdp.discount * future
                        })
                        .collect();
                    candidates.push(alpha);
                    nodes.push(PlanNode {
                        action: a,
                        children: sigma,
                    });
                }
            }
            (nodes, candidates)
        };
        let refs: Vec<&[f64]> = candidates.iter().map(Vec::as_slice).collect();
        let keep = dominance_prune_indices(&refs);
        stats.depths.push(DepthStats {
            depth,
            generated: vec![nodes.len() as u64],
            surviving: vec![keep.len() as u64],
        });
        forest
            .levels
            .push(keep.iter().map(|&i| nodes[i].clone()).collect());
        alphas = keep.into_iter().map(|i| candidates[i].clone()).collect();
    }
    let vectors = alphas
        .into_iter()
        .enumerate()
        .map(|(i, alpha)| PlanValueVector {
            plan: forest.materialize(horizon, i),
            alpha,
        })
        .collect();
    Ok(PomdpSolution {
        horizon,
        vectors,
        stats,
    })
}
