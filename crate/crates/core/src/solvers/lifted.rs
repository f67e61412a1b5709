use std::collections::BTreeMap;

use super::decpomdp::DecSolution;
use super::plan::{
    DepthStats, JointPolicy, PlanAssignment, PlanForest, PlanNode, SolveStats, SolverCaps,
};
use super::pomdp::{check_horizon, growth_error, plan_growth};
use super::prune::{dominance_prune_indices, DOMINANCE_TOLERANCE};
use crate::counting::{Histogram, HistogramSpace};
use crate::error::{Error, Result};
use crate::lifting::LiftedDecPomdp;
use crate::model::{JointKind, JointSpace, Validate};

/// Surviving individual plans of one partition at one depth, and the
/// histograms of those plans over the partition's members.
#[derive(Debug, Clone)]
struct Level {
    plans: Vec<PlanNode>,
    hists: HistogramSpace,
}

/// `values[rank * S + s]`, ranks in mixed radix over the per-partition plan
/// histogram spaces.
#[derive(Debug, Clone)]
struct Table {
    space: JointSpace,
    values: Vec<f64>,
}

struct Dense<'m> {
    model: &'m LiftedDecPomdp,
    ns: usize,
    action_hists: Vec<HistogramSpace>,
    actions: JointSpace,
    t: Vec<f64>,
    obs_hists: Vec<HistogramSpace>,
    /// Non-zero `(observation histogram ranks, mass)` per `s'`.
    sensor: Vec<Vec<(Vec<usize>, f64)>>,
    binom: Vec<Vec<f64>>,
}

impl<'m> Dense<'m> {
    fn new(model: &'m LiftedDecPomdp, cap: u64) -> Result<Self> {
        let ns = model.num_states();
        let action_hists = model.histogram_spaces(JointKind::Actions, cap)?;
        let obs_hists = model.histogram_spaces(JointKind::Observations, cap)?;
        let actions = JointSpace::new(action_hists.iter().map(HistogramSpace::len).collect(), cap)?;
        let mut t = vec![0.0; ns * actions.len() * ns];
        for ((s, key), row) in &model.transition {
            let ranks: Vec<usize> = key
                .0
                .iter()
                .zip(&action_hists)
                .map(|(h, sp)| sp.rank(h).expect("validated key"))
                .collect();
            let ja = actions.rank(&ranks).expect("in range");
            t[(s * actions.len() + ja) * ns..][..ns].copy_from_slice(row.probs());
        }
        let sensor = model
            .sensor
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(key, &p)| {
                        let ranks = key
                            .0
                            .iter()
                            .zip(&obs_hists)
                            .map(|(h, sp)| sp.rank(h).expect("validated key"))
                            .collect();
                        (ranks, p)
                    })
                    .collect()
            })
            .collect();
        let n_max = model.partitioning.sizes().into_iter().max().unwrap_or(0) as usize;
        let mut binom = vec![vec![1.0; 1]; n_max + 1];
        for n in 1..=n_max {
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = binom[n - 1][k - 1] + binom[n - 1][k];
            }
            binom[n] = row;
        }
        Ok(Dense {
            model,
            ns,
            action_hists,
            actions,
            t,
            obs_hists,
            sensor,
            binom,
        })
    }

    fn multinomial(&self, counts: &[u64]) -> f64 {
        let mut left: u64 = counts.iter().sum();
        let mut acc = 1.0;
        for &c in counts {
            acc *= self.binom[left as usize][c as usize];
            left -= c;
        }
        acc
    }

    fn joint_action(&self, m: &[&[u64]], levels: &[Level]) -> usize {
        let strides = self.actions.strides();
        m.iter()
            .enumerate()
            .map(|(k, counts)| {
                let mut acts = vec![0u64; self.action_hists[k].get(0).range_len()];
                for (p, &c) in counts.iter().enumerate() {
                    acts[levels[k].plans[p].action] += c;
                }
                self.action_hists[k].rank_counts(&acts).expect("in range") * strides[k]
            })
            .sum()
    }

    fn value(&self, s: usize, ja: usize, w: &[f64]) -> f64 {
        let row = &self.t[(s * self.actions.len() + ja) * self.ns..][..self.ns];
        let future: f64 = row.iter().zip(w).map(|(p, x)| p * x).sum();
        self.model.reward[s] + self.model.discount * future
    }
}

/// Distributions over next-depth plan histograms of one partition: for plan
/// histogram `m` and observation histogram `h`, the members running each plan
/// receive observations by uniformly assigning `h` to the members.
struct Splitter<'a> {
    plans: &'a [PlanNode],
    binom: &'a [Vec<f64>],
    out: BTreeMap<Vec<u64>, f64>,
}

impl Splitter<'_> {
    fn rows(
        &mut self,
        rows: &[(usize, u64)],
        remaining: &mut [u64],
        next: &mut [u64],
        weight: f64,
    ) {
        match rows.split_first() {
            None => {
                if remaining.iter().all(|&r| r == 0) {
                    *self.out.entry(next.to_vec()).or_insert(0.0) += weight;
                }
            }
            Some((&(p, count), rest)) => self.cells(p, count, 0, rest, remaining, next, weight),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn cells(
        &mut self,
        p: usize,
        left: u64,
        o: usize,
        rest: &[(usize, u64)],
        remaining: &mut [u64],
        next: &mut [u64],
        weight: f64,
    ) {
        if o == remaining.len() {
            if left == 0 {
                self.rows(rest, remaining, next, weight);
            }
            return;
        }
        let child = self.plans[p].children[o];
        for c in 0..=left.min(remaining[o]) {
            remaining[o] -= c;
            next[child] += c;
            let w = weight * self.binom[left as usize][c as usize];
            self.cells(p, left - c, o + 1, rest, remaining, next, w);
            remaining[o] += c;
            next[child] -= c;
        }
    }
}

/// Per observation histogram rank, `(next plan histogram rank, probability)`.
type SplitTable = Vec<Vec<(usize, f64)>>;

fn split_table(dense: &Dense, k: usize, m: &[u64], level: &Level, prev: &Level) -> SplitTable {
    let rows: Vec<(usize, u64)> = m
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(p, &c)| (p, c))
        .collect();
    dense.obs_hists[k]
        .iter()
        .map(|h| {
            let mut splitter = Splitter {
                plans: &level.plans,
                binom: &dense.binom,
                out: BTreeMap::new(),
            };
            let mut remaining = h.counts().to_vec();
            let mut next = vec![0u64; prev.plans.len()];
            splitter.rows(&rows, &mut remaining, &mut next, 1.0);
            let norm = dense.multinomial(h.counts());
            splitter
                .out
                .into_iter()
                .map(|(counts, w)| (prev.hists.rank_counts(&counts).expect("in range"), w / norm))
                .collect()
        })
        .collect()
}

fn expand(
    model: &LiftedDecPomdp,
    prev: Option<&[Level]>,
    caps: SolverCaps,
) -> Result<Vec<Vec<PlanNode>>> {
    (0..model.num_partitions())
        .map(|k| {
            let na = model.partitioning.action_range(k).len();
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
            let (np, no) = (
                prev[k].plans.len(),
                model.partitioning.observation_range(k).len(),
            );
            if plan_growth(na, np, no) > caps.plans as u128 {
                return Err(growth_error(
                    &format!("plans of partition {k}"),
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

fn levels_for(model: &LiftedDecPomdp, plans: Vec<Vec<PlanNode>>, cap: u64) -> Result<Vec<Level>> {
    plans
        .into_iter()
        .enumerate()
        .map(|(k, plans)| {
            let hists = HistogramSpace::new(model.partitioning.size(k), plans.len(), cap)?;
            Ok(Level { plans, hists })
        })
        .collect()
}

fn check_joint(levels: &[Level], ns: usize, cap: u64) -> Result<JointSpace> {
    let counts: Vec<usize> = levels.iter().map(|l| l.hists.len()).collect();
    let total = counts
        .iter()
        .fold(ns as u128, |acc, &c| acc.saturating_mul(c as u128));
    if total > cap as u128 {
        let exact = counts
            .iter()
            .fold(num_bigint::BigUint::from(ns), |acc, &c| acc * c);
        return Err(Error::capacity("lifted joint plan values", exact, cap));
    }
    JointSpace::new(counts, cap)
}

/// Evaluates `V(m, s)` for plan histogram tuples at one depth.
struct Evaluator<'a> {
    dense: &'a Dense<'a>,
    levels: &'a [Level],
    prev: Option<(&'a [Level], &'a Table)>,
    /// `splits[k][m_rank][h_rank]`, filled on demand.
    splits: Vec<Vec<Option<SplitTable>>>,
    w: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(
        dense: &'a Dense<'a>,
        levels: &'a [Level],
        prev: Option<(&'a [Level], &'a Table)>,
    ) -> Self {
        Evaluator {
            dense,
            levels,
            prev,
            splits: levels.iter().map(|l| vec![None; l.hists.len()]).collect(),
            w: vec![0.0; dense.ns],
        }
    }

    /// Calls `out(s, V(m, s))` for every state.
    fn eval(&mut self, ranks: &[usize], mut out: impl FnMut(usize, f64)) {
        let dense = self.dense;
        let Some((prev_levels, table)) = self.prev else {
            (0..dense.ns).for_each(|s| out(s, dense.model.reward[s]));
            return;
        };
        for (k, &r) in ranks.iter().enumerate() {
            if self.splits[k][r].is_none() {
                let m = self.levels[k].hists.get(r).counts();
                self.splits[k][r] =
                    Some(split_table(dense, k, m, &self.levels[k], &prev_levels[k]));
            }
        }
        let strides = table.space.strides();
        for next in 0..dense.ns {
            let mut acc = 0.0;
            for (h, p) in &dense.sensor[next] {
                let lists: Vec<&[(usize, f64)]> = ranks
                    .iter()
                    .enumerate()
                    .map(|(k, &r)| self.splits[k][r].as_ref().expect("filled")[h[k]].as_slice())
                    .collect();
                acc += p * product_sum(&lists, strides, 0, 1.0, &table.values, dense.ns, next);
            }
            self.w[next] = acc;
        }
        let m: Vec<&[u64]> = ranks
            .iter()
            .enumerate()
            .map(|(k, &r)| self.levels[k].hists.get(r).counts())
            .collect();
        let ja = dense.joint_action(&m, self.levels);
        (0..dense.ns).for_each(|s| out(s, dense.value(s, ja, &self.w)));
    }
}

/// `Σ Π_k weight_k · V(Σ_k rank_k stride_k, s')` over one entry per list.
fn product_sum(
    lists: &[&[(usize, f64)]],
    strides: &[usize],
    base: usize,
    weight: f64,
    values: &[f64],
    ns: usize,
    next: usize,
) -> f64 {
    match lists.split_first() {
        None => weight * values[base * ns + next],
        Some((first, rest)) => first
            .iter()
            .map(|&(r, w)| {
                product_sum(
                    rest,
                    &strides[1..],
                    base + r * strides[0],
                    weight * w,
                    values,
                    ns,
                    next,
                )
            })
            .sum(),
    }
}

/// Per-partition plan elimination. The vector of plan `p` in partition `k`
/// ranges over (histogram of the other `n_k - 1` members, histograms of the
/// other partitions, state). With `dedupe_only`, only plans whose vectors
/// duplicate an earlier plan's are dropped.
fn eliminate(
    levels: &[Level],
    table: &Table,
    ns: usize,
    dedupe_only: bool,
    cap: u64,
) -> Result<Vec<Vec<usize>>> {
    let kk = levels.len();
    let mut alive: Vec<Vec<usize>> = levels
        .iter()
        .map(|l| (0..l.plans.len()).collect())
        .collect();
    let full_counts = |k: usize, alive_k: &[usize], counts: &[u64]| {
        let mut full = vec![0u64; levels[k].plans.len()];
        for (i, &c) in counts.iter().enumerate() {
            full[alive_k[i]] += c;
        }
        full
    };
    let mut changed = true;
    while changed {
        changed = false;
        for k in 0..kk {
            if alive[k].len() <= 1 {
                continue;
            }
            // Full-space ranks of every context histogram per partition.
            let n_k = levels[k].hists.get(0).partition_size();
            let own: Vec<Vec<u64>> = HistogramSpace::new(n_k - 1, alive[k].len(), cap)?
                .iter()
                .map(|h| full_counts(k, &alive[k], h.counts()))
                .collect();
            let mut others: Vec<Vec<usize>> = Vec::with_capacity(kk);
            for j in 0..kk {
                if j == k {
                    others.push(vec![0]);
                    continue;
                }
                let n_j = levels[j].hists.get(0).partition_size();
                others.push(
                    HistogramSpace::new(n_j, alive[j].len(), cap)?
                        .iter()
                        .map(|h| {
                            let full = full_counts(j, &alive[j], h.counts());
                            levels[j].hists.rank_counts(&full).expect("in range")
                        })
                        .collect(),
                );
            }
            let context = JointSpace::new(others.iter().map(Vec::len).collect(), u64::MAX)?;
            let strides = table.space.strides();
            let vectors: Vec<Vec<f64>> = alive[k]
                .iter()
                .map(|&p| {
                    let mut v = Vec::with_capacity(own.len() * context.len() * ns);
                    for base in &own {
                        let mut counts = base.clone();
                        counts[p] += 1;
                        let own_rank = levels[k].hists.rank_counts(&counts).expect("in range");
                        for c in context.iter() {
                            let rank: usize = (0..kk)
                                .map(|j| if j == k { own_rank } else { others[j][c[j]] } * strides[j])
                                .sum();
                            v.extend_from_slice(&table.values[rank * ns..][..ns]);
                        }
                    }
                    v
                })
                .collect();
            let keep: Vec<usize> = if dedupe_only {
                let mut keep: Vec<usize> = Vec::new();
                for (i, v) in vectors.iter().enumerate() {
                    let duplicate = keep.iter().any(|&j| {
                        vectors[j]
                            .iter()
                            .zip(v)
                            .all(|(a, b)| (a - b).abs() <= DOMINANCE_TOLERANCE)
                    });
                    if !duplicate {
                        keep.push(i);
                    }
                }
                keep
            } else {
                let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
                dominance_prune_indices(&refs)
            };
            if keep.len() < alive[k].len() {
                alive[k] = keep.into_iter().map(|i| alive[k][i]).collect();
                changed = true;
            }
        }
    }
    Ok(alive)
}

pub fn lifted_exhaustive(
    model: &LiftedDecPomdp,
    horizon: usize,
    peak_only: bool,
) -> Result<DecSolution> {
    lifted_exhaustive_with(model, horizon, peak_only, SolverCaps::default())
}

/// Exact finite-horizon search on a lifted model. A partition's policy is a
/// histogram over individual conditional plans: how many of its members run
/// each plan. With `peak_only`, every member of a partition runs the same
/// plan.
pub fn lifted_exhaustive_with(
    model: &LiftedDecPomdp,
    horizon: usize,
    peak_only: bool,
    caps: SolverCaps,
) -> Result<DecSolution> {
    check_horizon(horizon)?;
    model.validate().into_result()?;
    let dense = Dense::new(model, caps.joint)?;
    let (kk, ns) = (model.num_partitions(), model.num_states());
    let belief = model.initial_belief.probs();
    let mut forests = vec![PlanForest::default(); kk];
    let mut stats = SolveStats::default();
    let mut prev: Option<(Vec<Level>, Table)> = None;

    for depth in 1..=horizon {
        let plans = expand(model, prev.as_ref().map(|(l, _)| l.as_slice()), caps)?;
        let counts: Vec<u64> = plans.iter().map(|p| p.len() as u64).collect();

        if depth == horizon {
            let levels = if peak_only {
                let tuples = plans
                    .iter()
                    .fold(ns as u128, |a, p| a.saturating_mul(p.len() as u128));
                if tuples > caps.joint as u128 {
                    return Err(Error::capacity("peak plan tuples", tuples, caps.joint));
                }
                plans
                    .into_iter()
                    .enumerate()
                    .map(|(k, plans)| {
                        let n_k = model.partitioning.size(k);
                        let peaks = (0..plans.len())
                            .map(|p| Histogram::peak(plans.len(), p, n_k))
                            .collect();
                        Level {
                            plans,
                            hists: HistogramSpace::from_items(peaks),
                        }
                    })
                    .collect()
            } else {
                levels_for(model, plans, caps.joint)?
            };
            let mut evaluator = Evaluator::new(
                &dense,
                &levels,
                prev.as_ref().map(|(l, t)| (l.as_slice(), t)),
            );
            let candidates: Vec<Vec<usize>> = if peak_only {
                // peak ranks coincide with plan indices
                JointSpace::new(levels.iter().map(|l| l.plans.len()).collect(), caps.joint)?
                    .iter()
                    .collect()
            } else {
                check_joint(&levels, ns, caps.joint)?.iter().collect()
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, ranks) in candidates.iter().enumerate() {
                let mut v = 0.0;
                evaluator.eval(ranks, |s, x| {
                    if belief[s] > 0.0 {
                        v += belief[s] * x;
                    }
                });
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            let (i, value) = best.expect("non-empty");
            stats.depths.push(DepthStats {
                depth,
                generated: counts.clone(),
                surviving: counts,
            });
            stats.joint_policies_evaluated = candidates.len() as u64;
            let mut components = Vec::with_capacity(kk);
            for (k, forest) in forests.iter_mut().enumerate() {
                forest.levels.push(levels[k].plans.clone());
                let m = levels[k].hists.get(candidates[i][k]).counts();
                components.push(
                    m.iter()
                        .enumerate()
                        .filter(|(_, &c)| c > 0)
                        .map(|(p, &c)| PlanAssignment {
                            plan: forest.materialize(depth, p),
                            count: c,
                        })
                        .collect(),
                );
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

        let levels = levels_for(model, plans, caps.joint)?;
        let space = check_joint(&levels, ns, caps.joint)?;
        let mut values = vec![0.0; space.len() * ns];
        {
            let mut evaluator = Evaluator::new(
                &dense,
                &levels,
                prev.as_ref().map(|(l, t)| (l.as_slice(), t)),
            );
            for (r, ranks) in space.iter().enumerate() {
                evaluator.eval(&ranks, |s, x| values[r * ns + s] = x);
            }
        }
        let table = Table { space, values };
        let alive = eliminate(&levels, &table, ns, peak_only, caps.joint)?;

        let kept: Vec<Vec<PlanNode>> = alive
            .iter()
            .zip(&levels)
            .map(|(a, l)| a.iter().map(|&p| l.plans[p].clone()).collect())
            .collect();
        let kept_levels = levels_for(model, kept, caps.joint)?;
        let kept_space = check_joint(&kept_levels, ns, caps.joint)?;
        let mut kept_values = vec![0.0; kept_space.len() * ns];
        for (r, ranks) in kept_space.iter().enumerate() {
            let full: Vec<usize> = ranks
                .iter()
                .enumerate()
                .map(|(k, &rk)| {
                    let mut c = vec![0u64; levels[k].plans.len()];
                    for (i, &x) in kept_levels[k].hists.get(rk).counts().iter().enumerate() {
                        c[alive[k][i]] = x;
                    }
                    levels[k].hists.rank_counts(&c).expect("in range")
                })
                .collect();
            let src = table.space.rank(&full).expect("in range") * ns;
            kept_values[r * ns..][..ns].copy_from_slice(&table.values[src..][..ns]);
        }
        stats.depths.push(DepthStats {
            depth,
            generated: counts,
            surviving: alive.iter().map(|a| a.len() as u64).collect(),
        });
        for (forest, l) in forests.iter_mut().zip(&kept_levels) {
            forest.levels.push(l.plans.clone());
        }
        prev = Some((
            kept_levels,
            Table {
                space: kept_space,
                values: kept_values,
            },
        ));
    }
    unreachable!("the loop returns at the horizon")
}
