use serde_json::{json, Map, Value};

use super::{real, Model};
use crate::equivalence::EquivalenceReport;
use crate::model::{Mdp, Pomdp, Range};
use crate::size::{SizeParams, SizeReport};
use crate::solvers::{
    ConditionalPlan, DecSolution, Policy, PomdpSolution, SolveStats, UtilityTable,
};

/// Labels needed to print one agent's or partition's plans.
#[derive(Debug, Clone, Copy)]
pub struct PlanLabels<'a> {
    pub actions: &'a Range,
    pub observations: &'a Range,
}

/// `{"action": a, "then": {obs: subplan}}`; depth-1 plans have no `then`.
pub fn plan_document(plan: &ConditionalPlan, labels: PlanLabels<'_>) -> Value {
    let mut doc = Map::new();
    doc.insert("action".into(), json!(labels.actions.label(plan.action)));
    if !plan.subplans.is_empty() {
        let then: Map<String, Value> = plan
            .subplans
            .iter()
            .enumerate()
            .map(|(o, p)| {
                (
                    labels.observations.label(o).to_string(),
                    plan_document(p, labels),
                )
            })
            .collect();
        doc.insert("then".into(), Value::Object(then));
    }
    Value::Object(doc)
}

fn stats_document(stats: &SolveStats) -> Value {
    let depths: Vec<Value> = stats
        .depths
        .iter()
        .map(|d| json!({ "depth": d.depth, "generated": d.generated, "surviving": d.surviving }))
        .collect();
    json!({ "depths": depths, "joint_policies_evaluated": stats.joint_policies_evaluated })
}

fn per_state(states: &Range, values: impl IntoIterator<Item = Value>) -> Value {
    Value::Object(states.labels().iter().cloned().zip(values).collect())
}

pub fn mdp_solution_document(model: &Mdp, table: &UtilityTable, policy: &Policy) -> Value {
    json!({
        "converged": table.converged,
        "iterations": table.iterations,
        "kind": "mdp-solution",
        "last_delta": real(table.last_delta),
        "policy": per_state(&model.states, policy.actions.iter().map(|&a| json!(model.actions.label(a)))),
        "utility": per_state(&model.states, table.values.iter().map(|&u| real(u))),
    })
}

/// The surviving plans with their value vectors, plus the value and best plan
/// at the initial belief when the model has one.
pub fn pomdp_solution_document(model: &Pomdp, sol: &PomdpSolution) -> Value {
    let labels = PlanLabels {
        actions: &model.base.actions,
        observations: &model.observations,
    };
    let plans: Vec<Value> = sol
        .vectors
        .iter()
        .map(|v| {
            json!({
                "alpha": per_state(&model.base.states, v.alpha.iter().map(|&x| real(x))),
                "plan": plan_document(&v.plan, labels),
            })
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("horizon".into(), json!(sol.horizon));
    doc.insert("kind".into(), json!("pomdp-solution"));
    doc.insert("plans".into(), Value::Array(plans));
    doc.insert("stats".into(), stats_document(&sol.stats));
    if let Some(b) = &model.initial_belief {
        doc.insert("value".into(), real(sol.value_at(b.probs())));
        doc.insert(
            "best_plan".into(),
            plan_document(&sol.best(b.probs()).plan, labels),
        );
    }
    Value::Object(doc)
}

/// Ground solutions list one plan per agent; lifted solutions list, per
/// partition, how many members run each plan. Other model kinds give `null`.
pub fn dec_solution_document(model: &Model, sol: &DecSolution, peak_only: bool) -> Value {
    let components: Vec<Value> = match model {
        Model::DecPomdp(m) => sol
            .policy
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let labels = PlanLabels {
                    actions: &m.agent_actions[i],
                    observations: &m.agent_observations[i],
                };
                json!({ "agent": m.agents.label(i), "plan": plan_document(&c[0].plan, labels) })
            })
            .collect(),
        Model::Lifted(m) => sol
            .policy
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let part = &m.partitioning;
                let labels = PlanLabels {
                    actions: part.action_range(k),
                    observations: part.observation_range(k),
                };
                let plans: Vec<Value> = c
                    .iter()
                    .map(|pa| json!({ "count": pa.count, "plan": plan_document(&pa.plan, labels) }))
                    .collect();
                let name = part
                    .name(k)
                    .map_or_else(|| format!("partition{k}"), str::to_string);
                json!({ "partition": name, "plans": plans })
            })
            .collect(),
        _ => return Value::Null,
    };
    json!({
        "horizon": sol.policy.horizon,
        "kind": "decpomdp-solution",
        "peak_only": peak_only,
        "policy": components,
        "stats": stats_document(&sol.stats),
        "value": real(sol.value),
    })
}

pub fn size_params_document(p: &SizeParams) -> Value {
    let shapes: Vec<Value> = p
        .shapes
        .iter()
        .map(|s| json!({ "actions": s.actions, "observations": s.observations, "size": s.size }))
        .collect();
    json!({
        "a": p.a,
        "agents": p.agents,
        "kind": "size-params",
        "n": p.n,
        "o": p.o,
        "partitions": p.partitions,
        "s": p.s,
        "shapes": shapes,
    })
}

/// Exact key counts are decimal strings since they overflow 64 bits.
pub fn size_report_document(r: &SizeReport) -> Value {
    let counts: Vec<Value> = r
        .lifted_key_counts
        .iter()
        .map(|c| {
            json!({
                "action_keys": c.action_keys.to_string(),
                "observation_keys": c.observation_keys.to_string(),
                "partition": c.partition,
                "size": c.size,
            })
        })
        .collect();
    let pair = |t: f64, o: f64| json!({ "sensor": real(o), "transition": real(t) });
    json!({
        "kind": "size-report",
        "lifted_key_counts": counts,
        "lifted_not_larger": r.lifted_not_larger,
        "log2": {
            "ground": pair(r.log2_t_ground, r.log2_omega_ground),
            "lifted": pair(r.log2_t_lifted, r.log2_omega_lifted),
            "peak": pair(r.log2_t_peak, r.log2_omega_peak),
        },
        "params": size_params_document(&r.params),
    })
}

pub fn equivalence_document(r: &EquivalenceReport) -> Value {
    let part = &r.partitioning;
    let partitions: Vec<Value> = (0..part.len()).map(|k| json!(part.members(k))).collect();
    json!({
        "delta": real(r.delta),
        "ground_keys": { "actions": r.ground_keys.0.to_string(), "observations": r.ground_keys.1.to_string() },
        "ground_value": real(r.ground_value),
        "horizon": r.horizon,
        "kind": "equivalence-report",
        "lifted_keys": { "actions": r.lifted_keys.0.to_string(), "observations": r.lifted_keys.1.to_string() },
        "lifted_value": real(r.lifted_value),
        "partitions": partitions,
        "pass": r.pass,
        "size_comparison": size_report_document(&r.size_comparison),
    })
}
