//! Bundled validated schemas and defective training items.

use std::collections::BTreeSet;

use crate::pipeline::{choose_pronoun, generate_question, special_word_span, substitute_with, PronounPolicy, RuleAnnotator};
use crate::schema::{Answer, Origin, Schema, SchemaHalf, Sentence};
use crate::text::Lexicon;

use super::training::{Defect, TrainingItem, TrainingPool};

const VALIDATED: &str = include_str!("../../data/validated.tsv");
const DEFECTIVE: &str = include_str!("../../data/training_defective.tsv");

/// Builds a schema from a sentence whose pronoun opens a subordinate clause.
/// The special word and both questions are derived the same way the
/// generator derives them.
pub fn build_schema(
    sentence: &str,
    alternative: &str,
    target_a: &str,
    target_b: &str,
    first_answer: Answer,
    lexicon: &Lexicon,
) -> Result<Schema, String> {
    let annotated = RuleAnnotator::new(lexicon)
        .annotate_text(sentence, "fixture")
        .map_err(|e| e.to_string())?;
    let pronoun = choose_pronoun(&annotated, lexicon, PronounPolicy::FirstThirdPerson)
        .ok_or_else(|| format!("no pronoun in {sentence:?}"))?;
    let question = generate_question(&annotated.tokens, pronoun, lexicon).map_err(|e| e.to_string())?;
    let special = special_word_span(&annotated.tokens, pronoun).ok_or("no special word")?;
    let first = SchemaHalf {
        sentence: Sentence::parse_with(sentence, lexicon),
        pronoun,
        target_a: target_a.into(),
        target_b: target_b.into(),
        question,
        correct_answer: first_answer,
        special_word: special,
    };
    let second = substitute_with(&first, alternative, lexicon).ok_or("substitution failed")?;
    let subject_tag = target_a.trim_start_matches("the ").to_lowercase();
    Ok(Schema { first, second, subject_tag, origin: Origin::CrowdModified })
}

fn rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').collect())
}

fn parse_answer(s: &str) -> Answer {
    if s.trim() == "B" {
        Answer::B
    } else {
        Answer::A
    }
}

/// Schemas with known answers, used as test questions and resolve-type
/// training items.
pub fn validated_schemas() -> Vec<Schema> {
    rows(VALIDATED)
        .map(|c| {
            build_schema(c[0], c[1], c[2], c[3], parse_answer(c[4]), Lexicon::bundled())
                .unwrap_or_else(|e| panic!("bundled validated schema {:?}: {e}", c[0]))
        })
        .collect()
}

/// Authored schemas with known defects (misspellings, word-order swaps,
/// grammar errors) for validate-type training items.
pub fn defective_items() -> Vec<TrainingItem> {
    rows(DEFECTIVE)
        .map(|c| {
            let defects: BTreeSet<Defect> =
                c[0].split(',').filter_map(|d| Defect::parse(d.trim())).collect();
            let schema = build_schema(c[1], c[2], c[3], c[4], parse_answer(c[5]), Lexicon::bundled())
                .unwrap_or_else(|e| panic!("bundled training item {:?}: {e}", c[1]));
            TrainingItem::Validate { schema, defects }
        })
        .collect()
}

pub fn training_pool() -> TrainingPool {
    TrainingPool {
        resolve: validated_schemas().into_iter().map(|schema| TrainingItem::Resolve { schema }).collect(),
        validate: defective_items(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::validate_schema;

    #[test]
    fn validated_fixtures_pass_validation() {
        let all = validated_schemas();
        assert_eq!(all.len(), 12);
        for s in &all {
            let r = validate_schema(s);
            assert!(r.valid, "{}: {:?}", s.first.sentence.text(), r.violations);
        }
    }

    #[test]
    fn defective_items_load() {
        let items = defective_items();
        assert_eq!(items.len(), 8);
        let clean = items
            .iter()
            .filter(|i| matches!(i, TrainingItem::Validate { defects, .. } if defects.is_empty()))
            .count();
        assert_eq!(clean, 2);
    }
}
