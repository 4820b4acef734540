use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::{
    span_text, Lexicon, PosTag, Span, Token, DEFINITE_DETERMINERS, INDEFINITE_DETERMINERS,
};

use super::{AnnotatedSentence, PronounPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceClass {
    FullCandidate,
    SemiTemplate,
    Rejected,
}

fn spans_agree(tokens: &[Token], a: Span, b: Span) -> bool {
    let (ha, hb) = (&tokens[a.head()], &tokens[b.head()]);
    ha.gender.agrees(hb.gender) && ha.number.agrees(hb.number)
}

/// Whether at least two noun spans share gender and number.
pub(crate) fn has_agreeing_pair(s: &AnnotatedSentence) -> bool {
    let spans = s.noun_spans();
    spans
        .iter()
        .enumerate()
        .any(|(i, &a)| spans[i + 1..].iter().any(|&b| spans_agree(&s.tokens, a, b)))
}

/// Full candidate: a pronoun and more than two noun spans. Semi-template:
/// at least two agreeing noun spans. Anything else is rejected.
pub fn classify_sentence(s: &AnnotatedSentence) -> SentenceClass {
    let spans = s.noun_spans().len();
    if s.count(PosTag::Pron) >= 1 && spans > 2 {
        SentenceClass::FullCandidate
    } else if spans >= 2 && has_agreeing_pair(s) {
        SentenceClass::SemiTemplate
    } else {
        SentenceClass::Rejected
    }
}

/// Picks the pronoun the schema will be built around.
pub fn choose_pronoun(s: &AnnotatedSentence, lexicon: &Lexicon, policy: PronounPolicy) -> Option<Span> {
    let mut eligible = s.tokens.iter().filter(|t| {
        t.pos == PosTag::Pron
            && lexicon
                .pronoun(&t.surface)
                .is_some_and(|p| p.person == 3 && !p.reflexive)
    });
    let token = match policy {
        PronounPolicy::FirstThirdPerson => eligible.next(),
        PronounPolicy::LastThirdPerson => eligible.next_back(),
    }?;
    Some(Span::single(token.index))
}

/// Head-noun occurrence counts over a sentence set, for the repetition indicator.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    head_counts: HashMap<String, usize>,
}

impl CorpusStats {
    pub fn from_sentences<'a>(
        sentences: impl IntoIterator<Item = &'a AnnotatedSentence>,
        lexicon: &Lexicon,
    ) -> Self {
        let mut head_counts = HashMap::new();
        for s in sentences {
            for span in s.noun_spans() {
                *head_counts.entry(lexicon.singularize(&s.tokens[span.head()].surface)).or_insert(0) += 1;
            }
        }
        CorpusStats { head_counts }
    }

    pub fn occurrences(&self, head: &str) -> usize {
        self.head_counts.get(head).copied().unwrap_or(0)
    }
}

/// Salience as a sum of indicators:
/// +2 first noun span, +1 after a definite determiner, +1 per repeated
/// corpus occurrence of the head (at most +2), +1 if a verb's subject,
/// −1 after an indefinite determiner.
pub fn mitkov_score(span: Span, s: &AnnotatedSentence, stats: &CorpusStats, lexicon: &Lexicon) -> i32 {
    let mut score = 0;
    if s.noun_spans().first() == Some(&span) {
        score += 2;
    }
    if span.start > 0 {
        let prev = s.tokens[span.start - 1].lower();
        if DEFINITE_DETERMINERS.contains(&prev.as_str()) {
            score += 1;
        }
        if INDEFINITE_DETERMINERS.contains(&prev.as_str()) {
            score -= 1;
        }
    }
    let head = lexicon.singularize(&s.tokens[span.head()].surface);
    let repeats = stats.occurrences(&head).saturating_sub(1).min(2);
    score += repeats as i32;
    if s.is_subject(span.head()) {
        score += 1;
    }
    score
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAntecedent {
    pub span: Span,
    pub text: String,
    pub agreement_ok: bool,
    pub in_triple: bool,
    pub mitkov: i32,
}

/// Candidate participates in a triple with `pronoun`: it is the subject or
/// object of a verb clause-linked to a verb the pronoun is subject or object of.
fn in_triple(s: &AnnotatedSentence, candidate: Span, pronoun: Option<Span>) -> bool {
    let Some(pronoun) = pronoun else { return false };
    let pron_verbs: Vec<usize> = s.governors(pronoun.start).collect();
    s.governors(candidate.head())
        .any(|v| pron_verbs.iter().any(|&pv| s.linked(v, pv)))
}

/// Every noun span not overlapping the pronoun, annotated with selection features.
pub fn candidates(
    s: &AnnotatedSentence,
    pronoun: Option<Span>,
    stats: &CorpusStats,
    lexicon: &Lexicon,
) -> Vec<CandidateAntecedent> {
    let pron = pronoun.map(|p| &s.tokens[p.start]);
    s.noun_spans()
        .into_iter()
        .filter(|span| pronoun.is_none_or(|p| !span.overlaps(&p)))
        .map(|span| {
            let head = &s.tokens[span.head()];
            let agreement_ok =
                pron.is_none_or(|p| p.gender.agrees(head.gender) && p.number.agrees(head.number));
            CandidateAntecedent {
                span,
                text: span_text(&s.tokens, span),
                agreement_ok,
                in_triple: in_triple(s, span, pronoun),
                mitkov: mitkov_score(span, s, stats, lexicon),
            }
        })
        .collect()
}

/// Best agreeing pair, in sentence order. Prefers pairs where both are in a
/// triple, then the highest summed salience, then the earliest pair.
pub fn select_target_pair(
    s: &AnnotatedSentence,
    pronoun: Option<Span>,
    stats: &CorpusStats,
    lexicon: &Lexicon,
) -> Option<(CandidateAntecedent, CandidateAntecedent)> {
    let cands: Vec<_> = candidates(s, pronoun, stats, lexicon)
        .into_iter()
        .filter(|c| c.agreement_ok)
        .collect();
    let mut best: Option<((bool, i32), usize, usize)> = None;
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let (a, b) = (&cands[i], &cands[j]);
            if a.text.to_lowercase() == b.text.to_lowercase() || !spans_agree(&s.tokens, a.span, b.span) {
                continue;
            }
            let key = (a.in_triple && b.in_triple, a.mitkov + b.mitkov);
            if best.as_ref().is_none_or(|(k, _, _)| key > *k) {
                best = Some((key, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (cands[i].clone(), cands[j].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::RuleAnnotator;
    use crate::schema::fixtures::MARTIAL_ARTIST_SENTENCE;

    fn annotate(text: &str) -> AnnotatedSentence {
        RuleAnnotator::default().annotate_text(text, "t:1").unwrap()
    }

    fn lex() -> &'static Lexicon {
        Lexicon::bundled()
    }

    fn stats_for(s: &AnnotatedSentence) -> CorpusStats {
        CorpusStats::from_sentences([s], lex())
    }

    #[test]
    fn classify_examples() {
        let full = annotate("The man gave the boy a book in the park because he was kind.");
        assert_eq!(classify_sentence(&full), SentenceClass::FullCandidate);
        assert_eq!(classify_sentence(&annotate("It was very quiet.")), SentenceClass::Rejected);
        let semi = annotate("The king met the prince at noon.");
        assert_eq!(classify_sentence(&semi), SentenceClass::SemiTemplate);
    }

    #[test]
    fn martial_artist_pair() {
        let s = annotate(MARTIAL_ARTIST_SENTENCE);
        let p = choose_pronoun(&s, lex(), PronounPolicy::FirstThirdPerson).unwrap();
        assert_eq!(p, Span::single(10));
        let (a, b) = select_target_pair(&s, Some(p), &stats_for(&s), lex()).unwrap();
        assert_eq!((a.text.as_str(), b.text.as_str()), ("martial artist", "drug dealer"));
        assert!(a.in_triple);
    }

    #[test]
    fn gender_clash_has_no_pair() {
        let s = annotate("The man thanked the woman because he was grateful.");
        let p = choose_pronoun(&s, lex(), PronounPolicy::FirstThirdPerson);
        assert!(select_target_pair(&s, p, &stats_for(&s), lex()).is_none());
    }

    #[test]
    fn mitkov_sole_subject_noun() {
        let s = annotate("The dog slept.");
        let span = s.noun_spans()[0];
        assert_eq!(mitkov_score(span, &s, &stats_for(&s), lex()), 4);
    }

    #[test]
    fn mitkov_indefinite_object() {
        let s = annotate("Yesterday the girl saw a cat.");
        let spans = s.noun_spans();
        let cat = *spans.last().unwrap();
        assert_eq!(span_text(&s.tokens, cat), "cat");
        assert_eq!(mitkov_score(cat, &s, &stats_for(&s), lex()), -1);
    }

    #[test]
    fn mitkov_identical_spans_score_equal() {
        let s = annotate("The girl saw the box near the box.");
        let spans = s.noun_spans();
        let st = stats_for(&s);
        assert_eq!(mitkov_score(spans[1], &s, &st, lex()), mitkov_score(spans[2], &s, &st, lex()));
    }

    #[test]
    fn reflexives_are_skipped() {
        let s = annotate("She hurt herself and he laughed.");
        assert_eq!(choose_pronoun(&s, lex(), PronounPolicy::FirstThirdPerson), Some(Span::single(0)));
        assert_eq!(choose_pronoun(&s, lex(), PronounPolicy::LastThirdPerson), Some(Span::single(4)));
    }
}
