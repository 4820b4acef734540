//! Crowd outcomes fed back into the generator: per-factor acceptance
//! counters, smoothed factor weights, the sentence-length bound and a
//! structural comparison of valid and invalid schemas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pipeline::{normalized_mitkov, Draft, FactorWeights, PipelineConfig, SENTENCE_LENGTH_RANGE};
use crate::schema::Schema;
use crate::text::{noun_spans, PosTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Agreement,
    Triples,
    Mitkov,
}

impl Factor {
    pub const ALL: [Factor; 3] = [Factor::Agreement, Factor::Triples, Factor::Mitkov];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counter {
    pub offered: u64,
    pub accepted: u64,
}

impl Counter {
    fn record(&mut self, accepted: bool) {
        self.offered += 1;
        if accepted {
            self.accepted += 1;
        }
    }
}

/// Normalized salience at or above this counts as top-quartile.
pub const TOP_QUARTILE: f64 = 0.75;

pub const MIN_LENGTH_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityState {
    pub factors: BTreeMap<Factor, Counter>,
    pub subjects: BTreeMap<String, Counter>,
    /// Accepted sentence length → count.
    pub accepted_lengths: BTreeMap<usize, u64>,
    pub outcomes: u64,
    pub base_config: PipelineConfig,
}

impl Default for AdaptivityState {
    fn default() -> Self {
        AdaptivityState::new(PipelineConfig::default())
    }
}

/// Factors a draft satisfies, in [`Factor::ALL`] order.
pub fn satisfied_factors(draft: &Draft) -> [bool; 3] {
    let k = &draft.priority_key;
    [k.agreement, k.triples, normalized_mitkov(k.mitkov) >= TOP_QUARTILE]
}

impl AdaptivityState {
    pub fn new(base_config: PipelineConfig) -> Self {
        AdaptivityState {
            factors: Factor::ALL.iter().map(|&f| (f, Counter::default())).collect(),
            subjects: BTreeMap::new(),
            accepted_lengths: BTreeMap::new(),
            outcomes: 0,
            base_config,
        }
    }

    pub fn accepted_length_count(&self) -> usize {
        self.accepted_lengths.values().sum::<u64>() as usize
    }
}

/// Counts one terminal verdict. `accepted` covers both valid verdicts.
pub fn record_outcome(state: &AdaptivityState, draft: &Draft, accepted: bool) -> AdaptivityState {
    let mut s = state.clone();
    for (factor, sat) in Factor::ALL.iter().zip(satisfied_factors(draft)) {
        if sat {
            s.factors.entry(*factor).or_default().record(accepted);
        }
    }
    s.subjects.entry(draft.subject_tag.clone()).or_default().record(accepted);
    if accepted {
        *s.accepted_lengths.entry(draft.sentence_length).or_insert(0) += 1;
    }
    s.outcomes += 1;
    s
}

/// Add-one smoothed acceptance rate.
pub fn smoothed_rate(c: Counter) -> f64 {
    (c.accepted as f64 + 1.0) / (c.offered as f64 + 2.0)
}

pub fn update_factor_weights(state: &AdaptivityState) -> PipelineConfig {
    let raw: Vec<f64> = Factor::ALL
        .iter()
        .map(|f| smoothed_rate(state.factors.get(f).copied().unwrap_or_default()))
        .collect();
    let max = raw.iter().cloned().fold(f64::MIN, f64::max);
    let mut cfg = state.base_config.clone();
    cfg.factor_weights = FactorWeights { agreement: raw[0] / max, triples: raw[1] / max, mitkov: raw[2] / max };
    cfg
}

/// 90th percentile by the nearest-rank rule (rank ⌊0.9·n⌋ + 1, capped at n).
pub fn p90(histogram: &BTreeMap<usize, u64>) -> Option<usize> {
    let n: u64 = histogram.values().sum();
    if n == 0 {
        return None;
    }
    let rank = ((n as f64 * 0.9).floor() as u64 + 1).min(n);
    let mut seen = 0;
    for (&len, &count) in histogram {
        seen += count;
        if seen >= rank {
            return Some(len);
        }
    }
    None
}

pub fn update_sentence_length(state: &AdaptivityState) -> PipelineConfig {
    let mut cfg = state.base_config.clone();
    if state.accepted_length_count() >= MIN_LENGTH_SAMPLES {
        if let Some(p) = p90(&state.accepted_lengths) {
            let (lo, hi) = SENTENCE_LENGTH_RANGE;
            cfg.sentence_length_max = p.clamp(lo, hi);
        }
    }
    cfg
}

/// Weights and length bound combined; the version is the outcome count.
pub fn export_pipeline_config(state: &AdaptivityState) -> PipelineConfig {
    let mut cfg = update_factor_weights(state);
    cfg.sentence_length_max = update_sentence_length(state).sentence_length_max;
    cfg.version = state.base_config.version + state.outcomes;
    cfg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureMeans {
    pub nouns: f64,
    pub pronouns: f64,
    pub tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub valid: Option<StructureMeans>,
    pub invalid: Option<StructureMeans>,
    /// valid − invalid; `None` when either side is empty.
    pub deltas: Option<StructureMeans>,
}

fn means(schemas: &[Schema]) -> Option<StructureMeans> {
    if schemas.is_empty() {
        return None;
    }
    let n = schemas.len() as f64;
    let (mut nouns, mut pronouns, mut tokens) = (0usize, 0usize, 0usize);
    for s in schemas {
        let t = s.first.sentence.tokens();
        nouns += noun_spans(t).len();
        pronouns += t.iter().filter(|t| t.pos == PosTag::Pron).count();
        tokens += t.len();
    }
    Some(StructureMeans { nouns: nouns as f64 / n, pronouns: pronouns as f64 / n, tokens: tokens as f64 / n })
}

/// Per-set means over the first halves.
pub fn structural_compare(valid: &[Schema], invalid: &[Schema]) -> StructureReport {
    let (v, i) = (means(valid), means(invalid));
    let deltas = v.zip(i).map(|(v, i)| StructureMeans {
        nouns: v.nouns - i.nouns,
        pronouns: v.pronouns - i.pronouns,
        tokens: v.tokens - i.tokens,
    });
    StructureReport { valid: v, invalid: i, deltas }
}
