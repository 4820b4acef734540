use crate::text::{is_connective, noun_spans, normalize, tokenize, Lexicon, PosTag, Token};

use super::{AnnotateError, AnnotatedSentence, Relation, RelationLabel};

/// Anything that can turn a sentence into tokens plus shallow relations.
pub trait Annotator {
    fn annotate(&mut self, text: &str, source_id: &str) -> Result<AnnotatedSentence, AnnotateError>;
}

/// Lexicon tagger plus shallow subject/object/clause-link patterns.
#[derive(Debug, Clone, Copy)]
pub struct RuleAnnotator<'a> {
    lexicon: &'a Lexicon,
}

impl Default for RuleAnnotator<'static> {
    fn default() -> Self {
        RuleAnnotator { lexicon: Lexicon::bundled() }
    }
}

impl<'a> RuleAnnotator<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        RuleAnnotator { lexicon }
    }

    pub fn lexicon(&self) -> &'a Lexicon {
        self.lexicon
    }

    pub fn annotate_text(&self, text: &str, source_id: &str) -> Result<AnnotatedSentence, AnnotateError> {
        let text = normalize(text);
        if text.is_empty() {
            return Err(AnnotateError::EmptyInput);
        }
        let tokens = self.lexicon.tag(&tokenize(&text));
        let relations = relations(&tokens);
        Ok(AnnotatedSentence { tokens, relations, source_id: source_id.to_string() })
    }
}

impl Annotator for RuleAnnotator<'_> {
    fn annotate(&mut self, text: &str, source_id: &str) -> Result<AnnotatedSentence, AnnotateError> {
        self.annotate_text(text, source_id)
    }
}

fn is_boundary(t: &Token) -> bool {
    t.pos == PosTag::Punct || is_connective(&t.surface)
}

struct VerbGroup {
    start: usize,
    end: usize,
    head: usize,
}

fn verb_groups(tokens: &[Token], lo: usize, hi: usize) -> Vec<VerbGroup> {
    let mut groups = Vec::new();
    let mut i = lo;
    while i < hi {
        if tokens[i].pos != PosTag::Verb {
            i += 1;
            continue;
        }
        let start = i;
        let mut head = i;
        i += 1;
        while i < hi {
            match tokens[i].pos {
                PosTag::Verb => head = i,
                PosTag::Adv if i + 1 < hi && tokens[i + 1].pos == PosTag::Verb => {}
                _ => break,
            }
            i += 1;
        }
        groups.push(VerbGroup { start, end: i, head });
    }
    groups
}

/// Subject/object/clause-link relations from shallow patterns.
///
/// Within a clause a nominal before a verb group is its subject and the
/// first nominal after it (skipping determiners, adjectives and adverbs) is
/// its object. A connective links the verb heads on either side.
pub(crate) fn relations(tokens: &[Token]) -> Vec<Relation> {
    // Nominal head for each position: noun-span head, or the pronoun itself.
    let mut head_of = vec![None; tokens.len()];
    for span in noun_spans(tokens) {
        for i in span.start..span.end {
            head_of[i] = Some(span.head());
        }
    }
    for (i, t) in tokens.iter().enumerate() {
        if t.pos == PosTag::Pron {
            head_of[i] = Some(i);
        }
    }

    let mut out = Vec::new();
    let mut all_heads: Vec<usize> = Vec::new();
    let mut lo = 0;
    while lo <= tokens.len() {
        let hi = (lo..tokens.len()).find(|&i| is_boundary(&tokens[i])).unwrap_or(tokens.len());
        let groups = verb_groups(tokens, lo, hi);
        for (gi, g) in groups.iter().enumerate() {
            let from = if gi == 0 { lo } else { groups[gi - 1].end };
            if let Some(subj) = (from..g.start).rev().find_map(|i| head_of[i]) {
                out.push(Relation { head: g.head, dependent: subj, label: RelationLabel::Subj });
            }
            let until = groups.get(gi + 1).map_or(hi, |n| n.start);
            let obj = (g.end..until)
                .take_while(|&i| {
                    head_of[i].is_some()
                        || matches!(tokens[i].pos, PosTag::Det | PosTag::Adj | PosTag::Adv | PosTag::Other)
                })
                .find_map(|i| head_of[i]);
            if let Some(obj) = obj {
                out.push(Relation { head: g.head, dependent: obj, label: RelationLabel::Obj });
            }
            all_heads.push(g.head);
        }
        lo = hi + 1;
    }

    for (c, t) in tokens.iter().enumerate() {
        if !is_connective(&t.surface) {
            continue;
        }
        let left = all_heads.iter().rev().find(|&&h| h < c);
        let right = all_heads.iter().find(|&&h| h > c);
        if let (Some(&l), Some(&r)) = (left, right) {
            out.push(Relation { head: l, dependent: r, label: RelationLabel::ClauseLink });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::fixtures::MARTIAL_ARTIST_SENTENCE;
    use crate::text::{span_text, Gender, Number};

    fn annotate(text: &str) -> AnnotatedSentence {
        RuleAnnotator::default().annotate_text(text, "t:1").unwrap()
    }

    #[test]
    fn he_slept() {
        let s = annotate("He slept.");
        let tags: Vec<_> = s.tokens.iter().map(|t| t.pos).collect();
        assert_eq!(tags, [PosTag::Pron, PosTag::Verb, PosTag::Punct]);
        assert_eq!(s.tokens[0].gender, Gender::Masculine);
        assert_eq!(s.tokens[0].number, Number::Singular);
        assert!(s.has_relation(1, 0, RelationLabel::Subj));
    }

    #[test]
    fn empty_text_is_an_error() {
        assert_eq!(
            RuleAnnotator::default().annotate_text("   ", "x"),
            Err(AnnotateError::EmptyInput)
        );
    }

    #[test]
    fn martial_artist_relations() {
        let s = annotate(MARTIAL_ARTIST_SENTENCE);
        let spans = s.noun_spans();
        assert_eq!(span_text(&s.tokens, spans[0]), "martial artist");
        // artist <- defended, himself object, he <- was, defended ~ was
        assert!(s.has_relation(3, 2, RelationLabel::Subj));
        assert!(s.has_relation(3, 4, RelationLabel::Obj));
        assert!(s.has_relation(11, 10, RelationLabel::Subj));
        assert!(s.has_relation(3, 11, RelationLabel::ClauseLink));
        s.check().unwrap();
    }

    #[test]
    fn relations_respect_invariants_on_messy_input() {
        for text in [
            "and and because , .",
            "The cat the dog the bird saw chased ate.",
            "running running running quickly",
            "He, she, it, they; them.",
        ] {
            annotate(text).check().unwrap();
        }
    }
}
