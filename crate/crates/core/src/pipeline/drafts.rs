use std::cmp::Ordering;
use std::collections::HashMap;

use log::debug;

use crate::schema::{Answer, Origin, Schema, SchemaHalf, Sentence};
use crate::text::{span_text, Lexicon, PosTag, Span};

use super::question::{generate_question, special_word_span, substitute_special_word};
use super::targets::{
    choose_pronoun, classify_sentence, has_agreeing_pair, select_target_pair, CandidateAntecedent,
    CorpusStats, SentenceClass,
};
use super::{
    AnnotatedSentence, BiasLabel, Draft, DraftContent, PipelineConfig, PriorityKey, TemplateId,
};

/// Maps a pair's summed salience onto [0, 1]. Pair sums range over [−2, 12].
pub fn normalized_mitkov(sum: i32) -> f64 {
    ((sum + 2) as f64 / 14.0).clamp(0.0, 1.0)
}

/// Candidate text including its determiner and adjectives ("the old woman").
fn target_text(s: &AnnotatedSentence, c: &CandidateAntecedent) -> String {
    let mut start = c.span.start;
    while start > 0 && s.tokens[start - 1].pos == PosTag::Adj {
        start -= 1;
    }
    if start > 0 && s.tokens[start - 1].pos == PosTag::Det {
        start -= 1;
    }
    let mut text = span_text(&s.tokens, Span::new(start, c.span.end));
    if start < c.span.start && s.tokens[start].pos == PosTag::Det {
        text = text.to_lowercase();
    }
    text
}

/// Head noun phrase of the main clause: the first subject, else the first noun span.
fn subject_tag(s: &AnnotatedSentence) -> String {
    let spans = s.noun_spans();
    spans
        .iter()
        .find(|sp| s.is_subject(sp.head()))
        .or(spans.first())
        .map(|&sp| span_text(&s.tokens, sp).to_lowercase())
        .unwrap_or_default()
}

fn pair_key(pair: &(CandidateAntecedent, CandidateAntecedent)) -> PriorityKey {
    PriorityKey {
        agreement: pair.0.agreement_ok && pair.1.agreement_ok,
        triples: pair.0.in_triple && pair.1.in_triple,
        mitkov: pair.0.mitkov + pair.1.mitkov,
    }
}

enum Built {
    Full(Schema, PriorityKey),
    Half(SchemaHalf, PriorityKey),
    Semi(PriorityKey),
}

fn semi_key(s: &AnnotatedSentence, stats: &CorpusStats, lexicon: &Lexicon) -> Option<PriorityKey> {
    let pair = select_target_pair(s, None, stats, lexicon)?;
    Some(PriorityKey { agreement: true, triples: false, mitkov: pair.0.mitkov + pair.1.mitkov })
}

fn build_one(s: &AnnotatedSentence, cfg: &PipelineConfig, stats: &CorpusStats, lexicon: &Lexicon) -> Option<Built> {
    let demote = || has_agreeing_pair(s).then(|| semi_key(s, stats, lexicon)).flatten().map(Built::Semi);
    match classify_sentence(s) {
        SentenceClass::Rejected => None,
        SentenceClass::SemiTemplate => demote(),
        SentenceClass::FullCandidate => {
            let Some(pronoun) = choose_pronoun(s, lexicon, cfg.pronoun_policy) else {
                return demote();
            };
            let Some(pair) = select_target_pair(s, Some(pronoun), stats, lexicon) else {
                debug!("{}: no agreeing target pair", s.source_id);
                return demote();
            };
            let (Ok(question), Some(special)) =
                (generate_question(&s.tokens, pronoun, lexicon), special_word_span(&s.tokens, pronoun))
            else {
                debug!("{}: question generation failed", s.source_id);
                return demote();
            };
            let key = pair_key(&pair);
            let first = SchemaHalf {
                sentence: Sentence::from_tokens(s.tokens.clone()),
                pronoun,
                target_a: target_text(s, &pair.0),
                target_b: target_text(s, &pair.1),
                question,
                correct_answer: Answer::A,
                special_word: special,
            };
            match substitute_special_word(&first, lexicon) {
                Some(second) => Some(Built::Full(
                    Schema { first, second, subject_tag: subject_tag(s), origin: Origin::Generated },
                    key,
                )),
                None => Some(Built::Half(first, key)),
            }
        }
    }
}

/// Turns annotated sentences into drafts. Ids are assigned sequentially
/// from `first_seq` in input order. Sentences longer than the configured
/// bound are skipped.
pub fn build_drafts(
    sentences: &[AnnotatedSentence],
    cfg: &PipelineConfig,
    lexicon: &Lexicon,
    first_seq: u64,
) -> Vec<Draft> {
    let stats = CorpusStats::from_sentences(sentences, lexicon);
    let mut seq = first_seq;
    let mut out = Vec::new();
    for s in sentences.iter().filter(|s| s.tokens.len() <= cfg.sentence_length_max) {
        let Some(built) = build_one(s, cfg, &stats, lexicon) else { continue };
        let (content, priority_key) = match built {
            Built::Full(schema, key) => (DraftContent::FullSchema { schema }, key),
            Built::Half(half, key) => (DraftContent::HalfOnly { half }, key),
            Built::Semi(key) => (DraftContent::SemiTemplate { sentence: s.clone() }, key),
        };
        out.push(Draft {
            template_id: TemplateId::from_seq(seq),
            source_id: s.source_id.clone(),
            content,
            priority_key,
            usage_count: 0,
            bias_label: BiasLabel::Unknown,
            subject_tag: subject_tag(s),
            sentence_length: s.tokens.len(),
        });
        seq += 1;
    }
    out
}

/// Descending on `bias` then `score`; ascending on `template_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankKey {
    pub bias: f64,
    pub score: f64,
    pub template_id: TemplateId,
}

impl RankKey {
    pub fn compare(&self, other: &RankKey) -> Ordering {
        other
            .bias
            .total_cmp(&self.bias)
            .then(other.score.total_cmp(&self.score))
            .then_with(|| self.template_id.cmp(&other.template_id))
    }
}

pub fn rank_key(draft: &Draft, cfg: &PipelineConfig, bias_scores: &HashMap<TemplateId, f64>) -> RankKey {
    let w = &cfg.factor_weights;
    let k = &draft.priority_key;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let score = w.agreement * flag(k.agreement) + w.triples * flag(k.triples) + w.mitkov * normalized_mitkov(k.mitkov);
    RankKey {
        bias: bias_scores.get(&draft.template_id).copied().unwrap_or(0.5),
        // Rounded so mathematically equal sums tie exactly.
        score: (score * 1e9).round() / 1e9,
        template_id: draft.template_id.clone(),
    }
}

pub fn rank_drafts(
    drafts: Vec<Draft>,
    cfg: &PipelineConfig,
    bias_scores: &HashMap<TemplateId, f64>,
) -> Vec<Draft> {
    let mut keyed: Vec<(RankKey, Draft)> =
        drafts.into_iter().map(|d| (rank_key(&d, cfg, bias_scores), d)).collect();
    keyed.sort_by(|a, b| a.0.compare(&b.0));
    keyed.into_iter().map(|(_, d)| d).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{DraftKind, RuleAnnotator};
    use crate::schema::validate_schema;

    fn annotate_all(texts: &[&str]) -> Vec<AnnotatedSentence> {
        let a = RuleAnnotator::default();
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| a.annotate_text(t, &format!("t:{}", i + 1)).unwrap())
            .collect()
    }

    fn build(texts: &[&str]) -> Vec<Draft> {
        build_drafts(&annotate_all(texts), &PipelineConfig::default(), Lexicon::bundled(), 1)
    }

    #[test]
    fn empty_input() {
        assert!(build(&[]).is_empty());
    }

    #[test]
    fn martial_artist_variant_is_full() {
        let drafts = build(&[
            "The martial artist defended himself from the drug dealer in the alley because he was violent.",
        ]);
        assert_eq!(drafts.len(), 1);
        let schema = drafts[0].schema().expect("full schema");
        assert!(validate_schema(schema).valid, "{:?}", validate_schema(schema).violations);
        assert_eq!(schema.first.target_a, "the martial artist");
        assert_eq!(schema.first.target_b, "the drug dealer");
        assert_eq!(schema.second.special_word_text(), "under-attack");
        assert_eq!(drafts[0].subject_tag, "martial artist");
    }

    #[test]
    fn missing_substitution_gives_half() {
        let drafts = build(&["The farmer paid the builder for the fence because he was zorbly."]);
        assert_eq!(drafts[0].kind(), DraftKind::HalfOnly);
    }

    #[test]
    fn failed_question_demotes_to_semi() {
        let drafts = build(&["He told the farmer about the builder and the fence."]);
        assert_eq!(drafts[0].kind(), DraftKind::SemiTemplate);
    }

    #[test]
    fn ids_are_sequential() {
        let drafts = build(&["The king met the prince at noon.", "It rained.", "The boy saw the man."]);
        let ids: Vec<_> = drafts.iter().map(|d| d.template_id.0.as_str()).collect();
        assert_eq!(ids, ["T000001", "T000002"]);
    }

    fn draft(id: u64, key: PriorityKey) -> Draft {
        let s = annotate_all(&["The king met the prince."]).remove(0);
        Draft {
            template_id: TemplateId::from_seq(id),
            source_id: "t:1".into(),
            content: DraftContent::SemiTemplate { sentence: s },
            priority_key: key,
            usage_count: 0,
            bias_label: BiasLabel::Unknown,
            subject_tag: String::new(),
            sentence_length: 5,
        }
    }

    #[test]
    fn agreement_ranks_first() {
        let a = draft(1, PriorityKey { agreement: false, triples: false, mitkov: 3 });
        let b = draft(2, PriorityKey { agreement: true, triples: false, mitkov: 3 });
        let ranked = rank_drafts(vec![a, b], &PipelineConfig::default(), &HashMap::new());
        assert_eq!(ranked[0].template_id, TemplateId::from_seq(2));
    }

    #[test]
    fn bias_dominates_and_ids_break_ties() {
        let k = PriorityKey { agreement: true, triples: true, mitkov: 4 };
        let drafts = vec![draft(3, k), draft(1, k), draft(2, k)];
        let mut bias = HashMap::new();
        bias.insert(TemplateId::from_seq(3), 0.9);
        let ranked = rank_drafts(drafts, &PipelineConfig::default(), &bias);
        let ids: Vec<_> = ranked.iter().map(|d| d.template_id.0.clone()).collect();
        assert_eq!(ids, ["T000003", "T000001", "T000002"]);
    }

    #[test]
    fn normalization_bounds() {
        assert_eq!(normalized_mitkov(-2), 0.0);
        assert_eq!(normalized_mitkov(12), 1.0);
        assert_eq!(normalized_mitkov(40), 1.0);
        assert_eq!(normalized_mitkov(5), 0.5);
    }
}
