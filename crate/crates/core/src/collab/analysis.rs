use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::pipeline::{relations, Draft, RelationLabel};
use crate::schema::{diff_tokens, EditScript, Schema};
use crate::text::{Lexicon, Number, PosTag, Token};

use super::QualificationRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrammarFlag {
    NoTerminalPunct,
    RepeatedWord,
    Capitalization,
    SvNumberMismatch,
}

impl GrammarFlag {
    fn nudge(self) -> &'static str {
        match self {
            GrammarFlag::NoTerminalPunct => "End each sentence with a full stop, question mark or exclamation mark.",
            GrammarFlag::RepeatedWord => "A word appears twice in a row; check for a duplicated word.",
            GrammarFlag::Capitalization => "Start each sentence with a capital letter.",
            GrammarFlag::SvNumberMismatch => "A subject and its verb disagree in number (for example \"he were\").",
        }
    }
}

pub const TTR_NUDGE_BELOW: f64 = 0.4;
const TTR_NUDGE: &str = "Many words repeat across your two halves. Varying the wording makes the schema read better.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaAnalysis {
    pub edit: EditScript,
    pub type_token_ratio: f64,
    pub grammar_flags: Vec<GrammarFlag>,
    pub nudges: Vec<String>,
}

const SINGULAR_ONLY: [&str; 3] = ["is", "was", "has"];
const PLURAL_ONLY: [&str; 3] = ["are", "were", "have"];

/// Heuristic grammar checks on one tagged sentence.
pub fn grammar_flags(tokens: &[Token]) -> BTreeSet<GrammarFlag> {
    let mut flags = BTreeSet::new();
    let Some(last) = tokens.last() else { return flags };
    if !matches!(last.surface.as_str(), "." | "!" | "?") {
        flags.insert(GrammarFlag::NoTerminalPunct);
    }
    if tokens[0].surface.chars().next().is_some_and(|c| c.is_lowercase()) {
        flags.insert(GrammarFlag::Capitalization);
    }
    if tokens
        .windows(2)
        .any(|w| w[0].pos != PosTag::Punct && w[0].lower() == w[1].lower())
    {
        flags.insert(GrammarFlag::RepeatedWord);
    }
    for r in relations(tokens).iter().filter(|r| r.label == RelationLabel::Subj) {
        let subject = &tokens[r.dependent];
        // The verb adjacent to the subject carries agreement.
        let verb = tokens[r.dependent + 1..=r.head]
            .iter()
            .find(|t| t.pos == PosTag::Verb)
            .map(Token::lower)
            .unwrap_or_default();
        let i_or_you = matches!(subject.lower().as_str(), "i" | "you");
        let mismatch = match subject.number {
            Number::Singular if !i_or_you => PLURAL_ONLY.contains(&verb.as_str()),
            Number::Plural => SINGULAR_ONLY.contains(&verb.as_str()),
            _ => false,
        };
        if mismatch {
            flags.insert(GrammarFlag::SvNumberMismatch);
        }
    }
    flags
}

/// Distinct content words over content words, across both halves.
/// A schema without content words scores 1.
pub fn type_token_ratio(schema: &Schema, lexicon: &Lexicon) -> f64 {
    let words: Vec<String> = schema
        .halves()
        .iter()
        .flat_map(|h| lexicon.content_words(h.sentence.tokens()))
        .collect();
    if words.is_empty() {
        return 1.0;
    }
    let distinct: BTreeSet<&String> = words.iter().collect();
    distinct.len() as f64 / words.len() as f64
}

/// Writing statistics for an accepted or modified submission.
pub fn analysis_report(record: &QualificationRecord, original: &Draft, lexicon: &Lexicon) -> Option<SchemaAnalysis> {
    let schema = record.schema.as_ref()?;
    let edit = if record.modified {
        diff_tokens(&original.sentence_tokens(), schema.first.sentence.tokens())
    } else {
        EditScript::default()
    };
    let flags: BTreeSet<GrammarFlag> = schema
        .halves()
        .iter()
        .flat_map(|h| grammar_flags(h.sentence.tokens()))
        .collect();
    let ttr = type_token_ratio(schema, lexicon);
    let mut nudges: Vec<String> = Vec::new();
    if ttr < TTR_NUDGE_BELOW {
        nudges.push(TTR_NUDGE.into());
    }
    nudges.extend(flags.iter().map(|f| f.nudge().to_string()));
    Some(SchemaAnalysis { edit, type_token_ratio: ttr, grammar_flags: flags.into_iter().collect(), nudges })
}
