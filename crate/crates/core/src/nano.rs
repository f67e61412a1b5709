//! The nanoscale medical scenario as a family of lifted DecPOMDPs.
//!
//! Nanosensors detect marker types and release tiles; once every marker is
//! present and enough sensors of each type released, a message assembles.
//! Nanobots detect messages and release medication. Each marker type has one
//! sensor partition and each message type one bot partition, all of the same
//! size, with actions `{release, noop}` and observations `{detect, none}`.
//!
//! State bits, most significant first: one per marker, one per message, and
//! (when `c_release > 0`) one "released last step" bit per bot partition so
//! that release costs stay a function of the state.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::counting::{binomial, Histogram, HistogramTuple};
use crate::error::{Error, Result};
use crate::lifting::{LiftedDecPomdp, Partitioning};
use crate::model::{Belief, Distribution, JointKind, Range, DEFAULT_ENUMERATION_CAP};
use crate::size::SizeParams;

pub const RELEASE: usize = 0;
pub const NOOP: usize = 1;
pub const DETECT: usize = 0;
pub const NONE: usize = 1;

/// Per-step probabilities, sensing error rates and reward weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NanoRates {
    pub marker_appear: f64,
    pub marker_persist: f64,
    pub assemble_prob: f64,
    /// P(detect) for an agent whose input is absent, from noise alone.
    pub false_positive: f64,
    /// P(detect) for an agent whose input is absent caused by another type
    /// being present.
    pub cross_type: f64,
    pub false_negative: f64,
    pub r_good: f64,
    pub r_bad: f64,
    pub c_release: f64,
    pub discount: f64,
    /// Probability that each marker is present initially.
    pub initial_marker_prob: f64,
}

impl Default for NanoRates {
    fn default() -> Self {
        NanoRates {
            marker_appear: 0.1,
            marker_persist: 0.9,
            assemble_prob: 0.8,
            false_positive: 0.05,
            cross_type: 0.05,
            false_negative: 0.1,
            r_good: 1.0,
            r_bad: 1.0,
            c_release: 0.1,
            discount: 0.9,
            initial_marker_prob: 0.5,
        }
    }
}

impl NanoRates {
    /// Applies the fields of a JSON object on top of `self`.
    pub fn with_overrides(&self, text: &str) -> Result<Self> {
        let patch: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let serde_json::Value::Object(patch) = patch else {
            return Err(Error::Schema {
                field: "rates".into(),
                message: "expected a JSON object".into(),
            });
        };
        let mut merged = serde_json::to_value(self).expect("rates serialize");
        merged
            .as_object_mut()
            .expect("rates are an object")
            .extend(patch);
        serde_json::from_value(merged).map_err(|e| Error::Schema {
            field: "rates".into(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NanoParams {
    pub kappa: usize,
    pub iota: usize,
    pub partition_size: u64,
    /// Fraction of a sensor partition that must release for assembly.
    pub release_threshold: f64,
    pub rates: NanoRates,
}

impl Default for NanoParams {
    fn default() -> Self {
        NanoParams {
            kappa: 1,
            iota: 1,
            partition_size: 3,
            release_threshold: 1.0,
            rates: NanoRates::default(),
        }
    }
}

/// κ = 4 marker types, ι = 1 message type, 64000 agents per partition. Release
/// cost is 0 so the state space is the plain `2^κ · 2^ι = 32` states.
pub fn nano_paper_preset() -> NanoParams {
    NanoParams {
        kappa: 4,
        iota: 1,
        partition_size: 64000,
        release_threshold: 1.0,
        rates: NanoRates {
            c_release: 0.0,
            ..NanoRates::default()
        },
    }
}

/// κ = ι = 1 with three agents per partition, noise-free sensing and
/// deterministic dynamics: markers never change, one full release assembles
/// the message.
pub fn nano_desk_preset() -> NanoParams {
    NanoParams {
        kappa: 1,
        iota: 1,
        partition_size: 3,
        release_threshold: 1.0,
        rates: NanoRates {
            marker_appear: 0.0,
            marker_persist: 1.0,
            assemble_prob: 1.0,
            false_positive: 0.0,
            cross_type: 0.0,
            false_negative: 0.0,
            ..NanoRates::default()
        },
    }
}

impl NanoParams {
    pub fn partitions(&self) -> usize {
        self.kappa + self.iota
    }

    pub fn has_release_bits(&self) -> bool {
        self.rates.c_release > 0.0
    }

    pub fn state_bits(&self) -> usize {
        self.kappa
            + self.iota
            + if self.has_release_bits() {
                self.iota
            } else {
                0
            }
    }

    /// Number of states; `None` if it does not fit in `u64`.
    pub fn state_count(&self) -> Option<u64> {
        1u64.checked_shl(self.state_bits() as u32)
    }

    /// Releases needed in a partition: `⌈θ · n⌉`.
    pub fn release_count(&self) -> u64 {
        ((self.release_threshold * self.partition_size as f64) - 1e-9)
            .ceil()
            .max(0.0) as u64
    }

    pub fn size_params(&self) -> Result<SizeParams> {
        self.check()?;
        let s = self
            .state_count()
            .ok_or_else(|| Error::InvalidParams("state count overflows u64".into()))?;
        SizeParams::uniform(s, self.partitions() as u64, self.partition_size, 2, 2)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.kappa == 0 || self.iota == 0 {
            return bad("kappa and iota must be at least 1".into());
        }
        if self.partition_size == 0 {
            return bad("partition_size must be at least 1".into());
        }
        if !(self.release_threshold > 0.0 && self.release_threshold <= 1.0) {
            return bad(format!(
                "theta {} is outside (0, 1]",
                self.release_threshold
            ));
        }
        let r = &self.rates;
        let probs = [
            ("marker_appear", r.marker_appear),
            ("marker_persist", r.marker_persist),
            ("assemble_prob", r.assemble_prob),
            ("false_positive", r.false_positive),
            ("cross_type", r.cross_type),
            ("false_negative", r.false_negative),
            ("initial_marker_prob", r.initial_marker_prob),
        ];
        if let Some((name, p)) = probs.iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
            return bad(format!("{name} = {p} is not a probability"));
        }
        if !(r.discount > 0.0 && r.discount <= 1.0) {
            return bad(format!("discount {} is outside (0, 1]", r.discount));
        }
        if ![r.r_good, r.r_bad, r.c_release]
            .iter()
            .all(|x| x.is_finite())
            || r.c_release < 0.0
        {
            return bad("reward weights must be finite and c_release non-negative".into());
        }
        Ok(())
    }
}

/// Decoded state bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NanoState {
    pub markers: Vec<bool>,
    pub messages: Vec<bool>,
    /// Empty unless the model carries release bits.
    pub released: Vec<bool>,
}

impl NanoState {
    pub fn decode(p: &NanoParams, index: usize) -> Self {
        let bits = p.state_bits();
        let bit = |i: usize| (index >> (bits - 1 - i)) & 1 == 1;
        let (k, i) = (p.kappa, p.iota);
        NanoState {
            markers: (0..k).map(bit).collect(),
            messages: (k..k + i).map(bit).collect(),
            released: (k + i..bits).map(bit).collect(),
        }
    }

    pub fn encode(&self) -> usize {
        self.markers
            .iter()
            .chain(&self.messages)
            .chain(&self.released)
            .fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn label(&self) -> String {
        let bits = |v: &[bool]| {
            v.iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect::<String>()
        };
        let mut s = format!("m{}_g{}", bits(&self.markers), bits(&self.messages));
        if !self.released.is_empty() {
            s.push_str(&format!("_b{}", bits(&self.released)));
        }
        s
    }

    fn all_markers(&self) -> bool {
        self.markers.iter().all(|&m| m)
    }

    /// P(detect) of one agent whose input is `own` of `inputs`.
    fn detect_prob(inputs: &[bool], own: usize, r: &NanoRates) -> f64 {
        if inputs[own] {
            1.0 - r.false_negative
        } else {
            let other = inputs.iter().enumerate().any(|(j, &x)| j != own && x);
            1.0 - (1.0 - r.false_positive) * (1.0 - if other { r.cross_type } else { 0.0 })
        }
    }
}

fn reward(p: &NanoParams, st: &NanoState) -> f64 {
    let r = &p.rates;
    let good = st.all_markers();
    let fired: Vec<bool> = if p.has_release_bits() {
        st.released.clone()
    } else {
        st.messages.clone()
    };
    fired
        .iter()
        .filter(|&&f| f)
        .map(|_| {
            let base = if good { r.r_good } else { -r.r_bad };
            base - if p.has_release_bits() {
                r.c_release
            } else {
                0.0
            }
        })
        .sum()
}

pub fn generate_nano(p: &NanoParams) -> Result<LiftedDecPomdp> {
    generate_nano_with_cap(p, DEFAULT_ENUMERATION_CAP)
}

/// Fails with `CapacityExceeded` when the model would hold more than `cap`
/// probability entries.
pub fn generate_nano_with_cap(p: &NanoParams, cap: u64) -> Result<LiftedDecPomdp> {
    p.check()?;
    let kk = p.partitions();
    let n = p.partition_size;
    let bits = p.state_bits();
    let s_big = BigUint::from(1u32) << bits;
    let keys = BigUint::from(n + 1).pow(kk as u32);
    let entries = &s_big * &s_big * &keys + &s_big * &keys;
    if entries > BigUint::from(cap) {
        return Err(Error::capacity("nano model entries", entries, cap));
    }
    let ns = 1usize << bits;
    let states: Vec<NanoState> = (0..ns).map(|i| NanoState::decode(p, i)).collect();

    let n_us = n as usize;
    let mut agent_labels = Vec::with_capacity(kk * n_us);
    let mut names = Vec::with_capacity(kk);
    for k in 0..kk {
        let (kind, j) = if k < p.kappa {
            ("sensor", k)
        } else {
            ("bot", k - p.kappa)
        };
        names.push(Some(format!("{kind}s{j}")));
        agent_labels.extend((0..n_us).map(|i| format!("{kind}{j}_{i}")));
    }
    let actions = Range::new(["release", "noop"])?;
    let observations = Range::new(["detect", "none"])?;
    let partitioning = Partitioning::new(
        (0..kk)
            .map(|k| (k * n_us..(k + 1) * n_us).collect())
            .collect(),
        vec![actions; kk],
        vec![observations; kk],
        kk * n_us,
    )?
    .with_names(names);

    let r = &p.rates;
    let initial: Vec<f64> = states
        .iter()
        .map(|st| {
            if st.messages.iter().chain(&st.released).any(|&b| b) {
                return 0.0;
            }
            st.markers
                .iter()
                .map(|&m| {
                    if m {
                        r.initial_marker_prob
                    } else {
                        1.0 - r.initial_marker_prob
                    }
                })
                .product()
        })
        .collect();

    let mut model = LiftedDecPomdp {
        agents: Range::new(agent_labels)?,
        partitioning,
        states: Range::new(states.iter().map(NanoState::label))?,
        transition: BTreeMap::new(),
        sensor: Vec::with_capacity(ns),
        reward: states.iter().map(|st| reward(p, st)).collect(),
        discount: r.discount,
        initial_belief: Belief::from_distribution(Distribution::from_raw(initial)),
    };

    let need = p.release_count();
    let action_keys = model.histogram_tuples(JointKind::Actions, cap)?;
    for (s, st) in states.iter().enumerate() {
        let marker_next: Vec<f64> = st
            .markers
            .iter()
            .map(|&m| if m { r.marker_persist } else { r.marker_appear })
            .collect();
        for key in &action_keys {
            let released = |k: usize| key.0[k].counts()[RELEASE] >= need;
            let enabled = st.all_markers() && (0..p.kappa).all(released);
            let assemble = if enabled { r.assemble_prob } else { 0.0 };
            let bots: Vec<bool> = (0..p.iota).map(|j| released(p.kappa + j)).collect();
            let row = states
                .iter()
                .map(|next| {
                    let mut prob = 1.0;
                    for (&b, &q) in next.markers.iter().zip(&marker_next) {
                        prob *= if b { q } else { 1.0 - q };
                    }
                    for &g in &next.messages {
                        prob *= if g { assemble } else { 1.0 - assemble };
                    }
                    if next.released.iter().zip(&bots).any(|(a, b)| a != b) {
                        prob = 0.0;
                    }
                    prob
                })
                .collect();
            model
                .transition
                .insert((s, key.clone()), Distribution::from_raw(row));
        }
    }

    let coefficient: Vec<f64> = (0..=n)
        .map(|d| binomial(n, d).to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let obs_keys = model.histogram_tuples(JointKind::Observations, cap)?;
    for st in &states {
        let detect: Vec<f64> = (0..kk)
            .map(|k| {
                if k < p.kappa {
                    NanoState::detect_prob(&st.markers, k, r)
                } else {
                    NanoState::detect_prob(&st.messages, k - p.kappa, r)
                }
            })
            .collect();
        let row: BTreeMap<HistogramTuple, f64> = obs_keys
            .iter()
            .filter_map(|key| {
                let prob: f64 = key
                    .0
                    .iter()
                    .zip(&detect)
                    .map(|(h, &q)| {
                        let d = h.counts()[DETECT];
                        coefficient[d as usize] * q.powi(d as i32) * (1.0 - q).powi((n - d) as i32)
                    })
                    .product();
                (prob > 0.0).then(|| (key.clone(), prob))
            })
            .collect();
        model.sensor.push(row);
    }
    Ok(model)
}

/// Histogram tuple with every member of every partition taking `value`.
pub fn uniform_key(p: &NanoParams, value: usize) -> HistogramTuple {
    HistogramTuple(
        (0..p.partitions())
            .map(|_| Histogram::peak(2, value, p.partition_size))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Validate;

    fn deterministic() -> NanoParams {
        NanoParams {
            kappa: 1,
            iota: 1,
            partition_size: 1,
            release_threshold: 1.0,
            rates: NanoRates {
                marker_appear: 0.0,
                marker_persist: 1.0,
                assemble_prob: 1.0,
                false_positive: 0.0,
                cross_type: 0.0,
                false_negative: 0.0,
                r_good: 1.0,
                r_bad: 1.0,
                c_release: 0.1,
                discount: 0.9,
                initial_marker_prob: 1.0,
            },
        }
    }

    fn key(s: &str) -> HistogramTuple {
        s.parse().unwrap()
    }

    fn step(m: &LiftedDecPomdp, s: usize, action: &str) -> usize {
        let row = &m.transition[&(s, key(action))];
        let next = row
            .probs()
            .iter()
            .position(|&p| p == 1.0)
            .expect("deterministic");
        next
    }

    #[test]
    fn deterministic_chain_by_hand() {
        let p = deterministic();
        let m = generate_nano(&p).unwrap();
        assert!(m.validate().is_empty(), "{}", m.validate());
        let start = m.states.index_of("m1_g0_b0").unwrap();
        assert_eq!(m.initial_belief[start], 1.0);
        // the sensor sees the marker
        assert_eq!(m.sensor[start][&key("[1,0]|[0,1]")], 1.0);
        // sensor releases, bot waits: the message assembles
        let s1 = step(&m, start, "[1,0]|[0,1]");
        assert_eq!(m.states.label(s1), "m1_g1_b0");
        // the bot now receives the message
        assert_eq!(m.sensor[s1][&key("[1,0]|[1,0]")], 1.0);
        // bot releases: bit set, reward r_good - c_release
        let s2 = step(&m, s1, "[0,1]|[1,0]");
        assert_eq!(m.states.label(s2), "m1_g0_b1");
        assert!((m.reward[s2] - 0.9).abs() < 1e-12);
        // nobody acts: everything but the marker clears
        let s3 = step(&m, s2, "[0,1]|[0,1]");
        assert_eq!(m.states.label(s3), "m1_g0_b0");
    }

    #[test]
    fn state_and_partition_counts() {
        let p = NanoParams {
            kappa: 2,
            iota: 1,
            rates: NanoRates {
                c_release: 0.0,
                ..NanoRates::default()
            },
            ..NanoParams::default()
        };
        let m = generate_nano(&p).unwrap();
        assert_eq!(m.num_states(), 8);
        assert_eq!(m.num_partitions(), 3);
        assert_eq!(m.partitioning.name(2), Some("bots0"));
    }

    #[test]
    fn rows_are_normalized_for_noisy_rates() {
        for kappa in 1..=2 {
            for iota in 1..=2 {
                let p = NanoParams {
                    kappa,
                    iota,
                    partition_size: 2,
                    ..NanoParams::default()
                };
                let m = generate_nano(&p).unwrap();
                assert!(m.validate().is_empty(), "{}", m.validate());
            }
        }
    }

    #[test]
    fn paper_preset_is_refused_but_sized() {
        let p = nano_paper_preset();
        assert!(generate_nano(&p).unwrap_err().is_capacity());
        let sp = p.size_params().unwrap();
        assert_eq!(
            (sp.s, sp.agents, sp.partitions, sp.a, sp.o, sp.n),
            (32, 320000, 5, 2, 2, 64000)
        );
    }

    #[test]
    fn threshold_rounds_up() {
        let p = NanoParams {
            partition_size: 30,
            release_threshold: 0.1,
            ..NanoParams::default()
        };
        assert_eq!(p.release_count(), 3);
        let p = NanoParams {
            partition_size: 3,
            release_threshold: 0.5,
            ..NanoParams::default()
        };
        assert_eq!(p.release_count(), 2);
    }

    #[test]
    fn rates_file_overrides_defaults() {
        let base = nano_desk_preset().rates;
        let r = base.with_overrides(r#"{"false_negative": 0.25}"#).unwrap();
        assert_eq!(r.false_negative, 0.25);
        assert_eq!(r.marker_persist, 1.0);
        assert!(matches!(
            base.with_overrides(r#"{"fnr": 1}"#),
            Err(Error::Schema { .. })
        ));
        assert!(matches!(
            base.with_overrides(r#"{"r_good": "x"}"#),
            Err(Error::Schema { .. })
        ));
        assert!(matches!(base.with_overrides("{"), Err(Error::Parse { .. })));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = NanoParams::default();
        p.rates.false_negative = 1.5;
        assert!(matches!(generate_nano(&p), Err(Error::InvalidParams(_))));
        let p = NanoParams {
            release_threshold: 0.0,
            ..NanoParams::default()
        };
        assert!(generate_nano(&p).is_err());
    }
}
