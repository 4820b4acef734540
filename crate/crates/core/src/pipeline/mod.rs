//! Draft generator: corpus ingestion, rule-based annotation, candidate
//! filtering, antecedent selection, question generation and special-word
//! substitution, followed by priority ranking of the resulting drafts.

mod annotate;
mod corpus;
mod drafts;
mod external;
mod question;
mod targets;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{join_tokens, Schema, SchemaHalf};
use crate::text::{noun_spans, PosTag, Span, Token};

pub(crate) use annotate::relations;
pub use annotate::{Annotator, RuleAnnotator};
pub use corpus::{ingest_corpus, DropReason, DroppedLine, IngestReport};
pub use drafts::{build_drafts, normalized_mitkov, rank_drafts, rank_key, RankKey};
pub use external::{parse_response, render_response, serve_protocol, ExternalAnnotator};
pub use question::{
    generate_question, special_word_span, substitute_special_word, substitute_with, QuestionError,
};
pub use targets::{
    candidates, choose_pronoun, classify_sentence, mitkov_score, select_target_pair,
    CandidateAntecedent, CorpusStats, SentenceClass,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationLabel {
    Subj,
    Obj,
    ClauseLink,
}

/// `(head, dependent, label)`; serialized as a three-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, RelationLabel)", into = "(usize, usize, RelationLabel)")]
pub struct Relation {
    pub head: usize,
    pub dependent: usize,
    pub label: RelationLabel,
}

impl From<(usize, usize, RelationLabel)> for Relation {
    fn from((head, dependent, label): (usize, usize, RelationLabel)) -> Self {
        Relation { head, dependent, label }
    }
}

impl From<Relation> for (usize, usize, RelationLabel) {
    fn from(r: Relation) -> Self {
        (r.head, r.dependent, r.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotateError {
    #[error("cannot annotate empty text")]
    EmptyInput,
    #[error("relation {0:?} refers to a token outside the sentence")]
    RelationOutOfRange(Relation),
    #[error("verb {head} has more than one {label:?} relation")]
    DuplicateRelation { head: usize, label: RelationLabel },
    #[error("annotator protocol error: {0}")]
    Protocol(String),
    #[error("annotator i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub tokens: Vec<Token>,
    pub relations: Vec<Relation>,
    pub source_id: String,
}

impl AnnotatedSentence {
    pub fn text(&self) -> String {
        join_tokens(self.tokens.iter().map(|t| t.surface.as_str()))
    }

    pub fn noun_spans(&self) -> Vec<Span> {
        noun_spans(&self.tokens)
    }

    pub fn has_relation(&self, head: usize, dependent: usize, label: RelationLabel) -> bool {
        self.relations
            .iter()
            .any(|r| r.head == head && r.dependent == dependent && r.label == label)
    }

    /// Verb heads for which `index` is subject or object.
    pub fn governors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.relations
            .iter()
            .filter(move |r| r.dependent == index && r.label != RelationLabel::ClauseLink)
            .map(|r| r.head)
    }

    pub fn is_subject(&self, index: usize) -> bool {
        self.relations
            .iter()
            .any(|r| r.dependent == index && r.label == RelationLabel::Subj)
    }

    pub fn linked(&self, a: usize, b: usize) -> bool {
        self.has_relation(a, b, RelationLabel::ClauseLink)
            || self.has_relation(b, a, RelationLabel::ClauseLink)
    }

    pub fn check(&self) -> Result<(), AnnotateError> {
        let n = self.tokens.len();
        for r in &self.relations {
            if r.head >= n || r.dependent >= n {
                return Err(AnnotateError::RelationOutOfRange(*r));
            }
        }
        for label in [RelationLabel::Subj, RelationLabel::Obj] {
            let mut heads: Vec<usize> =
                self.relations.iter().filter(|r| r.label == label).map(|r| r.head).collect();
            heads.sort_unstable();
            if let Some(w) = heads.windows(2).find(|w| w[0] == w[1]) {
                return Err(AnnotateError::DuplicateRelation { head: w[0], label });
            }
        }
        Ok(())
    }

    pub fn count(&self, tag: PosTag) -> usize {
        self.tokens.iter().filter(|t| t.pos == tag).count()
    }
}

/// Stable draft identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateId(pub String);

impl TemplateId {
    pub fn from_seq(seq: u64) -> Self {
        TemplateId(format!("T{seq:06}"))
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DraftKind {
    FullSchema,
    HalfOnly,
    SemiTemplate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DraftContent {
    FullSchema { schema: Schema },
    HalfOnly { half: SchemaHalf },
    SemiTemplate { sentence: AnnotatedSentence },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BiasLabel {
    #[default]
    Unknown,
    Biased,
    Unbiased,
}

/// Ranking tiers: pronoun agreement, triple participation, summed salience.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityKey {
    pub agreement: bool,
    pub triples: bool,
    pub mitkov: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draft {
    pub template_id: TemplateId,
    pub source_id: String,
    pub content: DraftContent,
    pub priority_key: PriorityKey,
    pub usage_count: u32,
    pub bias_label: BiasLabel,
    pub subject_tag: String,
    pub sentence_length: usize,
}

impl Draft {
    pub fn kind(&self) -> DraftKind {
        match self.content {
            DraftContent::FullSchema { .. } => DraftKind::FullSchema,
            DraftContent::HalfOnly { .. } => DraftKind::HalfOnly,
            DraftContent::SemiTemplate { .. } => DraftKind::SemiTemplate,
        }
    }

    pub fn schema(&self) -> Option<&Schema> {
        match &self.content {
            DraftContent::FullSchema { schema } => Some(schema),
            _ => None,
        }
    }

    /// The draft's sentence text.
    pub fn sentence_text(&self) -> String {
        match &self.content {
            DraftContent::FullSchema { schema } => schema.first.sentence.text().to_string(),
            DraftContent::HalfOnly { half } => half.sentence.text().to_string(),
            DraftContent::SemiTemplate { sentence } => sentence.text(),
        }
    }

    pub fn sentence_tokens(&self) -> Vec<Token> {
        match &self.content {
            DraftContent::FullSchema { schema } => schema.first.sentence.tokens().to_vec(),
            DraftContent::HalfOnly { half } => half.sentence.tokens().to_vec(),
            DraftContent::SemiTemplate { sentence } => sentence.tokens.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorWeights {
    pub agreement: f64,
    pub triples: f64,
    pub mitkov: f64,
}

impl Default for FactorWeights {
    fn default() -> Self {
        FactorWeights { agreement: 1.0, triples: 1.0, mitkov: 1.0 }
    }
}

/// Which pronoun of a sentence the generator targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PronounPolicy {
    /// First third-person, non-reflexive personal pronoun in token order.
    #[default]
    FirstThirdPerson,
    /// Last such pronoun.
    LastThirdPerson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub version: u64,
    pub sentence_length_max: usize,
    pub factor_weights: FactorWeights,
    #[serde(default)]
    pub pronoun_policy: PronounPolicy,
}

/// The 50-sentence corpus shipped with the crate.
pub const BUNDLED_CORPUS: &str = include_str!("../../data/corpus.txt");

pub const SENTENCE_LENGTH_RANGE: (usize, usize) = (8, 60);

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: 0,
            sentence_length_max: 40,
            factor_weights: FactorWeights::default(),
            pronoun_policy: PronounPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineConfigError {
    #[error("factor weight {name} = {value} is outside [0, 1]")]
    Weight { name: &'static str, value: f64 },
    #[error("sentence_length_max = {0} is outside [8, 60]")]
    Length(usize),
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineConfigError> {
        let w = &self.factor_weights;
        for (name, value) in [("agreement", w.agreement), ("triples", w.triples), ("mitkov", w.mitkov)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PipelineConfigError::Weight { name, value });
            }
        }
        let (lo, hi) = SENTENCE_LENGTH_RANGE;
        if !(lo..=hi).contains(&self.sentence_length_max) {
            return Err(PipelineConfigError::Length(self.sentence_length_max));
        }
        Ok(())
    }
}
