use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{real, Model};
use crate::counting::HistogramTuple;
use crate::error::{Error, Result};
use crate::lifting::{LiftedDecPomdp, Partitioning};
use crate::model::{Belief, Distribution, GroundDecPomdp, Mdp, Pomdp, Range};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    action: String,
    next: BTreeMap<String, f64>,
    state: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorEntry {
    probs: BTreeMap<String, f64>,
    state: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDoc {
    actions: Vec<String>,
    discount: f64,
    #[allow(dead_code)]
    kind: String,
    reward: BTreeMap<String, f64>,
    states: Vec<String>,
    transition: Vec<TransitionEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PomdpDoc {
    actions: Vec<String>,
    discount: f64,
    #[serde(default)]
    initial_belief: Option<BTreeMap<String, f64>>,
    #[allow(dead_code)]
    kind: String,
    observations: Vec<String>,
    reward: BTreeMap<String, f64>,
    sensor: Vec<SensorEntry>,
    states: Vec<String>,
    transition: Vec<TransitionEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecDoc {
    actions: Vec<Vec<String>>,
    agents: Vec<String>,
    discount: f64,
    initial_belief: BTreeMap<String, f64>,
    #[allow(dead_code)]
    kind: String,
    observations: Vec<Vec<String>>,
    reward: BTreeMap<String, f64>,
    sensor: Vec<SensorEntry>,
    states: Vec<String>,
    transition: Vec<TransitionEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionDoc {
    actions: Vec<String>,
    members: Vec<String>,
    #[serde(default)]
    name: Option<String>,
    observations: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftedDoc {
    agents: Vec<String>,
    discount: f64,
    initial_belief: BTreeMap<String, f64>,
    #[allow(dead_code)]
    kind: String,
    partitions: Vec<PartitionDoc>,
    reward: BTreeMap<String, f64>,
    sensor: Vec<SensorEntry>,
    states: Vec<String>,
    transition: Vec<TransitionEntry>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn decode<T: DeserializeOwned>(value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut field = e.path().to_string();
        let message = e.inner().to_string();
        // serde reports a missing field at its parent
        if message.starts_with("missing field") {
            if let Some(name) = message.split('`').nth(1) {
                field = if field == "." {
                    name.to_string()
                } else {
                    format!("{field}.{name}")
                };
            }
        }
        schema(field, message)
    })
}

fn range(field: &str, labels: Vec<String>) -> Result<Range> {
    Range::new(labels).map_err(|e| schema(field, e.to_string()))
}

fn lookup(range: &Range, field: &str, label: &str) -> Result<usize> {
    range
        .index_of(label)
        .ok_or_else(|| schema(field, format!("unknown label {label:?}")))
}

fn dense(states: &Range, field: &str, map: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let mut out = vec![0.0; states.len()];
    for (label, &p) in map {
        out[lookup(states, field, label)?] = p;
    }
    Ok(out)
}

fn reward(states: &Range, map: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    if let Some(missing) = states.labels().iter().find(|l| !map.contains_key(*l)) {
        return Err(schema("reward", format!("no reward for state {missing:?}")));
    }
    dense(states, "reward", map)
}

/// Splits `(x,y)` into labels.
fn tuple_labels<'a>(field: &str, key: &'a str) -> Result<Vec<&'a str>> {
    let inner = key
        .strip_prefix('(')
        .and_then(|k| k.strip_suffix(')'))
        .ok_or_else(|| {
            schema(
                field,
                format!("joint key {key:?} is not of the form (x,y,...)"),
            )
        })?;
    Ok(inner.split(',').collect())
}

fn ground_key(ranges: &[Range], field: &str, key: &str) -> Result<Vec<usize>> {
    let labels = tuple_labels(field, key)?;
    if labels.len() != ranges.len() {
        return Err(schema(
            field,
            format!(
                "joint key {key:?} has {} components, expected {}",
                labels.len(),
                ranges.len()
            ),
        ));
    }
    labels
        .iter()
        .zip(ranges)
        .map(|(l, r)| lookup(r, field, l))
        .collect()
}

fn ground_key_string(ranges: &[Range], key: &[usize]) -> String {
    let labels: Vec<&str> = key.iter().zip(ranges).map(|(&i, r)| r.label(i)).collect();
    format!("({})", labels.join(","))
}

fn lifted_key(
    part: &Partitioning,
    ranges: &[&Range],
    field: &str,
    key: &str,
) -> Result<HistogramTuple> {
    let tuple: HistogramTuple = key
        .parse()
        .map_err(|e: Error| schema(field, e.to_string()))?;
    if tuple.0.len() != part.len() {
        return Err(schema(
            field,
            format!(
                "key {key:?} has {} histograms, expected {}",
                tuple.0.len(),
                part.len()
            ),
        ));
    }
    for (k, h) in tuple.0.iter().enumerate() {
        if h.range_len() != ranges[k].len() {
            return Err(schema(
                field,
                format!(
                    "histogram {} of {key:?} has {} entries, range has {}",
                    k,
                    h.range_len(),
                    ranges[k].len()
                ),
            ));
        }
        if h.partition_size() != part.size(k) {
            return Err(schema(
                field,
                format!(
                    "histogram {} of {key:?} sums to {}, partition has {} members",
                    k,
                    h.partition_size(),
                    part.size(k)
                ),
            ));
        }
    }
    Ok(tuple)
}

fn duplicate(field: &str) -> Error {
    schema(field, "duplicate entry")
}

pub(super) fn from_value(value: Value) -> Result<Model> {
    let kind = value
        .get("kind")
        .ok_or_else(|| schema("kind", "missing field `kind`"))?
        .as_str()
        .ok_or_else(|| schema("kind", "must be a string"))?
        .to_string();
    match kind.as_str() {
        "mdp" => mdp_from(decode(value)?).map(Model::Mdp),
        "pomdp" => pomdp_from(decode(value)?).map(Model::Pomdp),
        "decpomdp" => dec_from(decode(value)?).map(Model::DecPomdp),
        "lifted-decpomdp" => lifted_from(decode(value)?).map(Model::Lifted),
        other => Err(schema(
            "kind",
            format!("unknown kind {other:?}, expected mdp, pomdp, decpomdp or lifted-decpomdp"),
        )),
    }
}

fn mdp_parts(
    states: Vec<String>,
    actions: Vec<String>,
    transition: Vec<TransitionEntry>,
    reward_map: &BTreeMap<String, f64>,
    discount: f64,
) -> Result<Mdp> {
    let states = range("states", states)?;
    let actions = range("actions", actions)?;
    let mut rows = BTreeMap::new();
    for (i, t) in transition.iter().enumerate() {
        let field = format!("transition[{i}]");
        let s = lookup(&states, &format!("{field}.state"), &t.state)?;
        let a = lookup(&actions, &format!("{field}.action"), &t.action)?;
        let row = dense(&states, &format!("{field}.next"), &t.next)?;
        if rows.insert((s, a), Distribution::from_raw(row)).is_some() {
            return Err(duplicate(&field));
        }
    }
    Ok(Mdp {
        reward: reward(&states, reward_map)?,
        states,
        actions,
        transition: rows,
        discount,
    })
}

fn mdp_from(d: MdpDoc) -> Result<Mdp> {
    mdp_parts(d.states, d.actions, d.transition, &d.reward, d.discount)
}

fn pomdp_from(d: PomdpDoc) -> Result<Pomdp> {
    let base = mdp_parts(d.states, d.actions, d.transition, &d.reward, d.discount)?;
    let observations = range("observations", d.observations)?;
    let mut sensor: Vec<Option<Distribution>> = vec![None; base.num_states()];
    for (i, e) in d.sensor.iter().enumerate() {
        let field = format!("sensor[{i}]");
        let s = lookup(&base.states, &format!("{field}.state"), &e.state)?;
        let row = dense(&observations, &format!("{field}.probs"), &e.probs)?;
        if sensor[s].replace(Distribution::from_raw(row)).is_some() {
            return Err(duplicate(&field));
        }
    }
    let sensor = sensor
        .into_iter()
        .enumerate()
        .map(|(s, row)| {
            row.ok_or_else(|| {
                schema(
                    "sensor",
                    format!("no row for state {:?}", base.states.label(s)),
                )
            })
        })
        .collect::<Result<_>>()?;
    let initial_belief = match &d.initial_belief {
        Some(map) => Some(Belief::from_distribution(Distribution::from_raw(dense(
            &base.states,
            "initial_belief",
            map,
        )?))),
        None => None,
    };
    Ok(Pomdp {
        base,
        observations,
        sensor,
        initial_belief,
    })
}

fn sensor_rows<K: Ord>(
    states: &Range,
    entries: &[SensorEntry],
    mut key: impl FnMut(&str, &str) -> Result<K>,
) -> Result<Vec<BTreeMap<K, f64>>> {
    let mut rows: Vec<Option<BTreeMap<K, f64>>> = (0..states.len()).map(|_| None).collect();
    for (i, e) in entries.iter().enumerate() {
        let field = format!("sensor[{i}]");
        let s = lookup(states, &format!("{field}.state"), &e.state)?;
        let mut row = BTreeMap::new();
        for (k, &p) in &e.probs {
            row.insert(key(&format!("{field}.probs"), k)?, p);
        }
        if rows[s].replace(row).is_some() {
            return Err(duplicate(&field));
        }
    }
    rows.into_iter()
        .enumerate()
        .map(|(s, r)| {
            r.ok_or_else(|| schema("sensor", format!("no row for state {:?}", states.label(s))))
        })
        .collect()
}

fn dec_from(d: DecDoc) -> Result<GroundDecPomdp> {
    let agents = range("agents", d.agents)?;
    let states = range("states", d.states)?;
    let per_agent = |field: &str, lists: Vec<Vec<String>>| -> Result<Vec<Range>> {
        if lists.len() != agents.len() {
            return Err(schema(
                field,
                format!("{} ranges for {} agents", lists.len(), agents.len()),
            ));
        }
        lists
            .into_iter()
            .enumerate()
            .map(|(i, l)| range(&format!("{field}[{i}]"), l))
            .collect()
    };
    let agent_actions = per_agent("actions", d.actions)?;
    let agent_observations = per_agent("observations", d.observations)?;
    let mut transition = BTreeMap::new();
    for (i, t) in d.transition.iter().enumerate() {
        let field = format!("transition[{i}]");
        let s = lookup(&states, &format!("{field}.state"), &t.state)?;
        let a = ground_key(&agent_actions, &format!("{field}.action"), &t.action)?;
        let row = dense(&states, &format!("{field}.next"), &t.next)?;
        if transition
            .insert((s, a), Distribution::from_raw(row))
            .is_some()
        {
            return Err(duplicate(&field));
        }
    }
    let sensor = sensor_rows(&states, &d.sensor, |f, k| {
        ground_key(&agent_observations, f, k)
    })?;
    Ok(GroundDecPomdp {
        reward: reward(&states, &d.reward)?,
        initial_belief: Belief::from_distribution(Distribution::from_raw(dense(
            &states,
            "initial_belief",
            &d.initial_belief,
        )?)),
        agents,
        states,
        agent_actions,
        agent_observations,
        transition,
        sensor,
        discount: d.discount,
    })
}

fn lifted_from(d: LiftedDoc) -> Result<LiftedDecPomdp> {
    let agents = range("agents", d.agents)?;
    let states = range("states", d.states)?;
    let mut blocks = Vec::new();
    let mut actions = Vec::new();
    let mut observations = Vec::new();
    let mut names = Vec::new();
    for (k, p) in d.partitions.into_iter().enumerate() {
        let field = format!("partitions[{k}]");
        blocks.push(
            p.members
                .iter()
                .map(|m| lookup(&agents, &format!("{field}.members"), m))
                .collect::<Result<Vec<_>>>()?,
        );
        actions.push(range(&format!("{field}.actions"), p.actions)?);
        observations.push(range(&format!("{field}.observations"), p.observations)?);
        names.push(p.name);
    }
    let partitioning = Partitioning::new(blocks, actions, observations, agents.len())
        .map_err(|e| schema("partitions", e.to_string()))?
        .with_names(names);
    let action_ranges: Vec<&Range> = (0..partitioning.len())
        .map(|k| partitioning.action_range(k))
        .collect();
    let obs_ranges: Vec<&Range> = (0..partitioning.len())
        .map(|k| partitioning.observation_range(k))
        .collect();
    let mut transition = BTreeMap::new();
    for (i, t) in d.transition.iter().enumerate() {
        let field = format!("transition[{i}]");
        let s = lookup(&states, &format!("{field}.state"), &t.state)?;
        let key = lifted_key(
            &partitioning,
            &action_ranges,
            &format!("{field}.action"),
            &t.action,
        )?;
        let row = dense(&states, &format!("{field}.next"), &t.next)?;
        if transition
            .insert((s, key), Distribution::from_raw(row))
            .is_some()
        {
            return Err(duplicate(&field));
        }
    }
    let sensor = sensor_rows(&states, &d.sensor, |f, k| {
        lifted_key(&partitioning, &obs_ranges, f, k)
    })?;
    Ok(LiftedDecPomdp {
        reward: reward(&states, &d.reward)?,
        initial_belief: Belief::from_distribution(Distribution::from_raw(dense(
            &states,
            "initial_belief",
            &d.initial_belief,
        )?)),
        agents,
        partitioning,
        states,
        transition,
        sensor,
        discount: d.discount,
    })
}

fn labels(r: &Range) -> Value {
    json!(r.labels())
}

/// `{state: p}` for the positive entries.
fn sparse(states: &Range, probs: &[f64]) -> Value {
    let map: Map<String, Value> = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != 0.0)
        .map(|(s, &p)| (states.label(s).to_string(), real(p)))
        .collect();
    Value::Object(map)
}

fn reward_value(states: &Range, reward: &[f64]) -> Value {
    let map: Map<String, Value> = reward
        .iter()
        .enumerate()
        .map(|(s, &r)| (states.label(s).to_string(), real(r)))
        .collect();
    Value::Object(map)
}

fn transition_entry(states: &Range, s: usize, action: String, row: &Distribution) -> Value {
    json!({
        "action": action,
        "next": sparse(states, row.probs()),
        "state": states.label(s),
    })
}

fn sensor_entry<K>(
    states: &Range,
    s: usize,
    row: &BTreeMap<K, f64>,
    key: impl Fn(&K) -> String,
) -> Value {
    let probs: Map<String, Value> = row.iter().map(|(k, &p)| (key(k), real(p))).collect();
    json!({ "probs": probs, "state": states.label(s) })
}

fn mdp_fields(m: &Mdp, doc: &mut Map<String, Value>) {
    doc.insert("actions".into(), labels(&m.actions));
    doc.insert("discount".into(), real(m.discount));
    doc.insert("reward".into(), reward_value(&m.states, &m.reward));
    doc.insert("states".into(), labels(&m.states));
    let transition = m
        .transition
        .iter()
        .map(|(&(s, a), row)| transition_entry(&m.states, s, m.actions.label(a).to_string(), row))
        .collect();
    doc.insert("transition".into(), Value::Array(transition));
}

pub(super) fn to_value(model: &Model) -> Value {
    let mut doc = Map::new();
    doc.insert("kind".into(), json!(model.kind()));
    match model {
        Model::Mdp(m) => mdp_fields(m, &mut doc),
        Model::Pomdp(m) => {
            mdp_fields(&m.base, &mut doc);
            let states = &m.base.states;
            doc.insert("observations".into(), labels(&m.observations));
            let sensor = m
                .sensor
                .iter()
                .enumerate()
                .map(|(s, row)| {
                    let probs: Map<String, Value> = row
                        .probs()
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(o, &p)| (m.observations.label(o).to_string(), real(p)))
                        .collect();
                    json!({ "probs": probs, "state": states.label(s) })
                })
                .collect();
            doc.insert("sensor".into(), Value::Array(sensor));
            if let Some(b) = &m.initial_belief {
                doc.insert("initial_belief".into(), sparse(states, b.probs()));
            }
        }
        Model::DecPomdp(m) => {
            doc.insert("agents".into(), labels(&m.agents));
            doc.insert(
                "actions".into(),
                Value::Array(m.agent_actions.iter().map(labels).collect()),
            );
            doc.insert(
                "observations".into(),
                Value::Array(m.agent_observations.iter().map(labels).collect()),
            );
            dec_common(
                &m.states,
                &m.reward,
                m.discount,
                &m.initial_belief,
                &mut doc,
            );
            let transition = m
                .transition
                .iter()
                .map(|((s, a), row)| {
                    transition_entry(&m.states, *s, ground_key_string(&m.agent_actions, a), row)
                })
                .collect();
            doc.insert("transition".into(), Value::Array(transition));
            let sensor = m
                .sensor
                .iter()
                .enumerate()
                .map(|(s, row)| {
                    sensor_entry(&m.states, s, row, |k| {
                        ground_key_string(&m.agent_observations, k)
                    })
                })
                .collect();
            doc.insert("sensor".into(), Value::Array(sensor));
        }
        Model::Lifted(m) => {
            doc.insert("agents".into(), labels(&m.agents));
            let part = &m.partitioning;
            let partitions = (0..part.len())
                .map(|k| {
                    let mut p = Map::new();
                    p.insert("actions".into(), labels(part.action_range(k)));
                    let members: Vec<&str> =
                        part.members(k).iter().map(|&i| m.agents.label(i)).collect();
                    p.insert("members".into(), json!(members));
                    if let Some(name) = part.name(k) {
                        p.insert("name".into(), json!(name));
                    }
                    p.insert("observations".into(), labels(part.observation_range(k)));
                    Value::Object(p)
                })
                .collect();
            doc.insert("partitions".into(), Value::Array(partitions));
            dec_common(
                &m.states,
                &m.reward,
                m.discount,
                &m.initial_belief,
                &mut doc,
            );
            let transition = m
                .transition
                .iter()
                .map(|((s, key), row)| transition_entry(&m.states, *s, key.to_string(), row))
                .collect();
            doc.insert("transition".into(), Value::Array(transition));
            let sensor = m
                .sensor
                .iter()
                .enumerate()
                .map(|(s, row)| sensor_entry(&m.states, s, row, HistogramTuple::to_string))
                .collect();
            doc.insert("sensor".into(), Value::Array(sensor));
        }
    }
    Value::Object(doc)
}

fn dec_common(
    states: &Range,
    reward: &[f64],
    discount: f64,
    b0: &Belief,
    doc: &mut Map<String, Value>,
) {
    doc.insert("discount".into(), real(discount));
    doc.insert("initial_belief".into(), sparse(states, b0.probs()));
    doc.insert("reward".into(), reward_value(states, reward));
    doc.insert("states".into(), labels(states));
}
