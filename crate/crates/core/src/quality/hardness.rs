use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::schema::{validate_schema, Schema, SchemaHalf};
use crate::text::{noun_spans, Lexicon, Span};

use super::QualityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardnessLabel {
    Easy,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub score: f64,
    pub label: HardnessLabel,
    pub features: BTreeMap<String, f64>,
}

/// Weights for (length, distance, candidates, overlap, rarity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardnessWeights(pub [f64; 5]);

impl Default for HardnessWeights {
    fn default() -> Self {
        HardnessWeights([0.3, 0.2, 0.2, 0.1, 0.2])
    }
}

pub const FEATURE_NAMES: [&str; 5] = ["length", "distance", "candidates", "overlap", "rarity"];

fn gap(a: Span, b: Span) -> usize {
    if a.end <= b.start {
        b.start - a.end
    } else {
        a.start.saturating_sub(b.end)
    }
}

/// Tokens outside the special span, case-folded.
fn outside_special(half: &SchemaHalf) -> Vec<String> {
    half.sentence
        .tokens()
        .iter()
        .filter(|t| !half.special_word.contains(t.index))
        .map(|t| t.lower())
        .collect()
}

fn overlap_feature(schema: &Schema) -> f64 {
    let (a, b) = (outside_special(&schema.first), outside_special(&schema.second));
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let rest = a.len().min(b.len()) - prefix;
    let suffix = a.iter().rev().zip(b.iter().rev()).take(rest).take_while(|(x, y)| x == y).count();
    1.0 - (prefix + suffix) as f64 / longest as f64
}

fn features(schema: &Schema, lexicon: &Lexicon) -> [f64; 5] {
    let half = &schema.first;
    let tokens = half.sentence.tokens();
    let length = (tokens.len() as f64 / 40.0).min(1.0);
    let distance = [&half.target_a, &half.target_b]
        .iter()
        .filter_map(|t| half.sentence.find(t))
        .map(|t| gap(t, half.pronoun))
        .min()
        .map_or(0.0, |d| (d as f64 / 20.0).min(1.0));
    let candidates = noun_spans(tokens).iter().filter(|s| !s.overlaps(&half.pronoun)).count();
    let candidates = ((candidates as f64 - 2.0) / 4.0).clamp(0.0, 1.0);
    let rare = tokens[half.special_word.start..half.special_word.end]
        .iter()
        .any(|t| !lexicon.is_frequent(&t.lower()));
    [length, distance, candidates, overlap_feature(schema), if rare { 1.0 } else { 0.0 }]
}

/// Linear hardness estimate in [0, 1]; `hard` at 0.5 and above.
pub fn hardness(schema: &Schema, weights: &HardnessWeights, lexicon: &Lexicon) -> Result<HardnessReport, QualityError> {
    if !validate_schema(schema).valid {
        return Err(QualityError::InvalidSchema);
    }
    Ok(score_features(features(schema, lexicon), weights))
}

pub(crate) fn score_features(f: [f64; 5], weights: &HardnessWeights) -> HardnessReport {
    let score = f.iter().zip(weights.0).map(|(x, w)| x * w).sum::<f64>().clamp(0.0, 1.0);
    HardnessReport {
        score,
        label: if score >= 0.5 { HardnessLabel::Hard } else { HardnessLabel::Easy },
        features: FEATURE_NAMES.iter().map(|n| n.to_string()).zip(f).collect(),
    }
}

pub const HARDNESS_PROMPT: &str =
    "Most of your accepted schemas are easy to resolve. Try one where the answer depends on a subtler cue.";

pub fn hardness_prompt(history: &[HardnessReport]) -> Option<&'static str> {
    if history.len() < 5 {
        return None;
    }
    let easy = history.iter().filter(|r| r.label == HardnessLabel::Easy).count();
    (easy as f64 / history.len() as f64 > 0.7).then_some(HARDNESS_PROMPT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::fixtures::build_schema;
    use crate::schema::fixtures::martial_artist;
    use crate::schema::Answer;

    fn lex() -> &'static Lexicon {
        Lexicon::bundled()
    }

    #[test]
    fn minimal_schema() {
        // 8 tokens, one connective between "cats" and "they", two candidates, common word.
        let s8 = build_schema("Dogs hit cats because they were small.", "big", "dogs", "cats", Answer::B, lex()).unwrap();
        assert_eq!(s8.first.sentence.len(), 8);
        let r = hardness(&s8, &HardnessWeights::default(), lex()).unwrap();
        assert_eq!(r.features["distance"], 0.05);
        let expected = 0.3 * 0.2 + 0.2 * 0.05;
        assert!((r.score - expected).abs() < 1e-12, "{:?}", r);
        assert_eq!(r.label, HardnessLabel::Easy);
    }

    #[test]
    fn minimal_feature_sum() {
        let r = score_features([0.2, 0.0, 0.0, 0.0, 0.0], &HardnessWeights::default());
        assert!((r.score - 0.06).abs() < 1e-12);
        assert_eq!(r.label, HardnessLabel::Easy);
    }

    #[test]
    fn feature_sum_for_hard_case() {
        let r = score_features([1.0, 1.0, 1.0, 0.0, 1.0], &HardnessWeights::default());
        assert!((r.score - 0.9).abs() < 1e-12);
        assert_eq!(r.label, HardnessLabel::Hard);
    }

    #[test]
    fn deterministic() {
        let w = HardnessWeights::default();
        assert_eq!(hardness(&martial_artist(), &w, lex()), hardness(&martial_artist(), &w, lex()));
    }

    #[test]
    fn parity_schema_has_zero_overlap_feature() {
        let r = hardness(&martial_artist(), &HardnessWeights::default(), lex()).unwrap();
        assert_eq!(r.features["overlap"], 0.0);
    }

    #[test]
    fn invalid_schema_is_rejected() {
        let s = martial_artist().with_answers([Answer::A, Answer::A]);
        assert_eq!(hardness(&s, &HardnessWeights::default(), lex()), Err(QualityError::InvalidSchema));
    }

    fn report(label: HardnessLabel) -> HardnessReport {
        HardnessReport { score: 0.0, label, features: BTreeMap::new() }
    }

    #[test]
    fn prompt_rule() {
        let easy = |n| vec![report(HardnessLabel::Easy); n];
        assert_eq!(hardness_prompt(&easy(4)), None);
        let mut seven = easy(6);
        seven.push(report(HardnessLabel::Hard));
        assert!(hardness_prompt(&seven).is_some());
        let mut ten = easy(3);
        ten.extend(vec![report(HardnessLabel::Hard); 7]);
        assert_eq!(hardness_prompt(&ten), None);
    }
}
