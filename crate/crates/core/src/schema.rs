//! Schema data structures, structural validation, the relatedness heuristic
//! and token-level diffing between an original and a modified half.
//!
//! Offsets in spans are token indices after [`tokenize`], half-open.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::text::{normalize, tokenize, Lexicon, PosTag, Span, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Answer {
    A,
    B,
}

impl Answer {
    pub fn flip(self) -> Answer {
        match self {
            Answer::A => Answer::B,
            Answer::B => Answer::A,
        }
    }

    fn parse(s: &str) -> Option<Answer> {
        match s {
            "A" => Some(Answer::A),
            "B" => Some(Answer::B),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Answer::A => "A",
            Answer::B => "B",
        }
    }
}

/// A normalized sentence with its tagged tokens. Serializes as its text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    text: String,
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn parse(text: &str) -> Sentence {
        Sentence::parse_with(text, Lexicon::bundled())
    }

    pub fn parse_with(text: &str, lexicon: &Lexicon) -> Sentence {
        let text = normalize(text);
        let tokens = lexicon.analyze(&text);
        Sentence { text, tokens }
    }

    /// Builds a sentence from already tagged tokens (external annotators).
    pub fn from_tokens(tokens: Vec<Token>) -> Sentence {
        let text = join_tokens(tokens.iter().map(|t| t.surface.as_str()));
        Sentence { text, tokens }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn span_text(&self, span: Span) -> String {
        if !span.within(self.len()) {
            return String::new();
        }
        crate::text::span_text(&self.tokens, span)
    }

    /// Token-boundary, case-insensitive location of `phrase`.
    pub fn find(&self, phrase: &str) -> Option<Span> {
        let needle: Vec<String> = tokenize(&normalize(phrase))
            .into_iter()
            .map(|w| w.to_lowercase())
            .collect();
        if needle.is_empty() || needle.len() > self.len() {
            return None;
        }
        let hay: Vec<String> = self.tokens.iter().map(Token::lower).collect();
        (0..=hay.len() - needle.len())
            .find(|&i| hay[i..i + needle.len()] == needle[..])
            .map(|i| Span::new(i, i + needle.len()))
    }
}

/// Joins token surfaces, attaching closing punctuation to the preceding word.
pub fn join_tokens<'a>(words: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for w in words {
        let attach = !out.is_empty()
            && w.chars().all(|c| matches!(c, '.' | ',' | '!' | '?' | ';' | ':'));
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

impl Serialize for Sentence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Sentence::parse(&String::deserialize(d)?))
    }
}

/// One sentence/question/answers instance of a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaHalf {
    pub sentence: Sentence,
    pub pronoun: Span,
    pub target_a: String,
    pub target_b: String,
    pub question: String,
    pub correct_answer: Answer,
    pub special_word: Span,
}

impl SchemaHalf {
    pub fn target(&self, answer: Answer) -> &str {
        match answer {
            Answer::A => &self.target_a,
            Answer::B => &self.target_b,
        }
    }

    pub fn special_word_text(&self) -> String {
        self.sentence.span_text(self.special_word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Generated,
    SemiTemplate,
    CrowdModified,
}

impl Origin {
    fn as_str(self) -> &'static str {
        match self {
            Origin::Generated => "generated",
            Origin::SemiTemplate => "semi_template",
            Origin::CrowdModified => "crowd_modified",
        }
    }

    fn parse(s: &str) -> Option<Origin> {
        [Origin::Generated, Origin::SemiTemplate, Origin::CrowdModified]
            .into_iter()
            .find(|o| o.as_str() == s)
    }
}

/// A pair of halves that differ only in the special word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub first: SchemaHalf,
    pub second: SchemaHalf,
    pub subject_tag: String,
    pub origin: Origin,
}

impl Schema {
    pub fn halves(&self) -> [&SchemaHalf; 2] {
        [&self.first, &self.second]
    }

    /// Copy with the given per-half correct answers.
    pub fn with_answers(&self, answers: [Answer; 2]) -> Schema {
        let mut s = self.clone();
        s.first.correct_answer = answers[0];
        s.second.correct_answer = answers[1];
        s
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EmptySentence,
    EmptyQuestion,
    PronounSpanInvalid,
    PronounNotPron,
    SpecialWordSpanInvalid,
    SpecialWordOverlapsPronoun,
    SameTargets,
    TargetNotInSentence,
    UnrelatedParts,
    HalvesNotParity,
    SpecialWordUnchanged,
    SameAnswer,
    TargetsDiffer,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(Value::as_str).unwrap_or("UNKNOWN"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfSide {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half: Option<HalfSide>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport { valid: violations.is_empty(), violations }
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn codes(&self) -> BTreeSet<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }
}

fn violation(code: ViolationCode, half: Option<HalfSide>, detail: impl Into<String>) -> Violation {
    Violation { code, half, detail: detail.into() }
}

fn half_violations(half: &SchemaHalf, side: Option<HalfSide>) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = half.sentence.len();
    if n == 0 {
        out.push(violation(ViolationCode::EmptySentence, side, "sentence has no tokens"));
    }
    let pronoun_ok = half.pronoun.within(n);
    if !pronoun_ok {
        out.push(violation(
            ViolationCode::PronounSpanInvalid,
            side,
            format!("pronoun span {}..{} outside {n} tokens", half.pronoun.start, half.pronoun.end),
        ));
    } else if let Some(t) = half.sentence.tokens()[half.pronoun.start..half.pronoun.end]
        .iter()
        .find(|t| t.pos != PosTag::Pron)
    {
        out.push(violation(
            ViolationCode::PronounNotPron,
            side,
            format!("'{}' is tagged {}", t.surface, t.pos),
        ));
    }
    if !half.special_word.within(n) {
        out.push(violation(
            ViolationCode::SpecialWordSpanInvalid,
            side,
            format!(
                "special word span {}..{} outside {n} tokens",
                half.special_word.start, half.special_word.end
            ),
        ));
    } else if pronoun_ok && half.special_word.overlaps(&half.pronoun) {
        out.push(violation(
            ViolationCode::SpecialWordOverlapsPronoun,
            side,
            "special word overlaps the pronoun",
        ));
    }
    let a = normalize(&half.target_a).to_lowercase();
    let b = normalize(&half.target_b).to_lowercase();
    if a == b {
        out.push(violation(ViolationCode::SameTargets, side, format!("both targets are '{a}'")));
    }
    for target in [&half.target_a, &half.target_b] {
        if half.sentence.find(target).is_none() {
            out.push(violation(
                ViolationCode::TargetNotInSentence,
                side,
                format!("'{target}' not found in sentence"),
            ));
        }
    }
    if normalize(&half.question).is_empty() {
        out.push(violation(ViolationCode::EmptyQuestion, side, "question is empty"));
    } else if n > 0 {
        let (related, _) = relatedness(half.sentence.text(), &half.question);
        if !related {
            out.push(violation(
                ViolationCode::UnrelatedParts,
                side,
                "question shares no content word with the sentence",
            ));
        }
    }
    out
}

/// Checks every half invariant plus question relatedness.
pub fn validate_half(half: &SchemaHalf) -> ValidationReport {
    ValidationReport::from_violations(half_violations(half, None))
}

/// Checks both halves and the pair invariants.
pub fn validate_schema(schema: &Schema) -> ValidationReport {
    let mut out = half_violations(&schema.first, Some(HalfSide::First));
    out.extend(half_violations(&schema.second, Some(HalfSide::Second)));
    let (f, s) = (&schema.first, &schema.second);

    let key = |t: &str| normalize(t).to_lowercase();
    if key(&f.target_a) != key(&s.target_a) || key(&f.target_b) != key(&s.target_b) {
        out.push(violation(ViolationCode::TargetsDiffer, None, "halves have different targets"));
    }
    if f.correct_answer == s.correct_answer {
        out.push(violation(
            ViolationCode::SameAnswer,
            None,
            format!("both halves answer {}", f.correct_answer.as_str()),
        ));
    }
    if f.special_word.within(f.sentence.len()) && s.special_word.within(s.sentence.len()) {
        if !parity_holds(f, s) {
            out.push(violation(
                ViolationCode::HalvesNotParity,
                None,
                "sentences differ outside the special word",
            ));
        } else if key(&f.special_word_text()) == key(&s.special_word_text()) {
            out.push(violation(
                ViolationCode::SpecialWordUnchanged,
                None,
                "special word is the same in both halves",
            ));
        }
    }
    ValidationReport::from_violations(out)
}

fn parity_holds(f: &SchemaHalf, s: &SchemaHalf) -> bool {
    let (a, b) = (f.sentence.surfaces(), s.sentence.surfaces());
    let (fs, ss) = (f.special_word, s.special_word);
    fs.start == ss.start && a[..fs.start] == b[..ss.start] && a[fs.end..] == b[ss.end..]
}

/// Common-content-word check between two parts of a schema.
pub fn relatedness(part_a: &str, part_b: &str) -> (bool, BTreeSet<String>) {
    let lex = Lexicon::bundled();
    let words = |t: &str| -> BTreeSet<String> {
        lex.content_words(&lex.analyze(&normalize(t))).into_iter().collect()
    };
    let shared: BTreeSet<String> = words(part_a).intersection(&words(part_b)).cloned().collect();
    (!shared.is_empty(), shared)
}

// ---------------------------------------------------------------------------
// Diffing

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Insert,
    Delete,
    Substitute,
}

/// One unit-cost edit. Positions refer to the sequence as it stands when the
/// operation is applied, operations being applied in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    pub position: usize,
    /// Inserted or substituted-in token; the removed token for deletes.
    pub token: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replaced: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub operations: Vec<EditOp>,
    pub changed_token_count: usize,
    pub pos_histogram_delta: BTreeMap<PosTag, i64>,
}

impl EditScript {
    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    pub fn delta(&self, tag: PosTag) -> i64 {
        self.pos_histogram_delta.get(&tag).copied().unwrap_or(0)
    }

    /// Replays the script over `source`.
    pub fn apply(&self, source: &[&str]) -> Vec<String> {
        let mut cur: Vec<String> = source.iter().map(|s| s.to_string()).collect();
        for op in &self.operations {
            match op.kind {
                EditKind::Insert => cur.insert(op.position, op.token.clone()),
                EditKind::Delete => {
                    cur.remove(op.position);
                }
                EditKind::Substitute => cur[op.position] = op.token.clone(),
            }
        }
        cur
    }
}

/// Minimal unit-cost edit script between two token sequences.
pub fn diff_tokens(source: &[Token], target: &[Token]) -> EditScript {
    let (n, m) = (source.len(), target.len());
    let mut dp = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        dp[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dp[i - 1][j - 1] + usize::from(source[i - 1].surface != target[j - 1].surface);
            dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }

    // Backtrack from the end, preferring keep/substitute.
    let mut rev: Vec<(EditKind, usize, usize)> = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = source[i - 1].surface == target[j - 1].surface;
            if dp[i][j] == dp[i - 1][j - 1] + usize::from(!same) {
                if !same {
                    rev.push((EditKind::Substitute, i - 1, j - 1));
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[i][j] == dp[i - 1][j] + 1 {
            rev.push((EditKind::Delete, i - 1, j));
            i -= 1;
        } else {
            rev.push((EditKind::Insert, i, j - 1));
            j -= 1;
        }
    }

    let mut script = EditScript::default();
    for (kind, si, tj) in rev.into_iter().rev() {
        let mut bump = |tag: PosTag, d: i64| *script.pos_histogram_delta.entry(tag).or_insert(0) += d;
        let op = match kind {
            EditKind::Substitute => {
                bump(source[si].pos, -1);
                bump(target[tj].pos, 1);
                EditOp {
                    kind,
                    position: tj,
                    token: target[tj].surface.clone(),
                    replaced: Some(source[si].surface.clone()),
                }
            }
            EditKind::Insert => {
                bump(target[tj].pos, 1);
                EditOp { kind, position: tj, token: target[tj].surface.clone(), replaced: None }
            }
            EditKind::Delete => {
                bump(source[si].pos, -1);
                EditOp { kind, position: tj, token: source[si].surface.clone(), replaced: None }
            }
        };
        script.operations.push(op);
    }
    script.pos_histogram_delta.retain(|_, v| *v != 0);
    script.changed_token_count = script.operations.len();
    script
}

/// Token diff between the sentences of two halves.
pub fn token_diff(original: &SchemaHalf, modified: &SchemaHalf) -> EditScript {
    diff_tokens(original.sentence.tokens(), modified.sentence.tokens())
}

// ---------------------------------------------------------------------------
// Record format

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema record field `{field}`: {message}")]
pub struct RecordError {
    pub field: String,
    pub message: String,
}

impl RecordError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        RecordError { field: field.into(), message: message.into() }
    }
}

pub const RECORD_VERSION: u64 = 1;

fn span_value(span: Span) -> Value {
    json!({"start": span.start, "end": span.end})
}

fn half_value(h: &SchemaHalf) -> Value {
    // Field order is fixed by the record format.
    let mut m = Map::new();
    m.insert("sentence".into(), Value::String(h.sentence.text().to_string()));
    m.insert("pronoun".into(), span_value(h.pronoun));
    m.insert("target_a".into(), Value::String(h.target_a.clone()));
    m.insert("target_b".into(), Value::String(h.target_b.clone()));
    m.insert("question".into(), Value::String(h.question.clone()));
    m.insert("correct_answer".into(), Value::String(h.correct_answer.as_str().into()));
    m.insert("special_word".into(), span_value(h.special_word));
    Value::Object(m)
}

fn schema_value(s: &Schema) -> Value {
    let mut m = Map::new();
    m.insert("version".into(), Value::from(RECORD_VERSION));
    m.insert("first".into(), half_value(&s.first));
    m.insert("second".into(), half_value(&s.second));
    m.insert("subject_tag".into(), Value::String(s.subject_tag.clone()));
    m.insert("origin".into(), Value::String(s.origin.as_str().into()));
    Value::Object(m)
}

/// Encodes a schema as a single-line record (no trailing newline).
pub fn encode_schema(schema: &Schema) -> String {
    schema_value(schema).to_string()
}

fn field<'a>(obj: &'a Map<String, Value>, prefix: &str, name: &str) -> Result<&'a Value, RecordError> {
    obj.get(name).ok_or_else(|| RecordError::new(path(prefix, name), "missing"))
}

fn path(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn str_field(obj: &Map<String, Value>, prefix: &str, name: &str) -> Result<String, RecordError> {
    field(obj, prefix, name)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| RecordError::new(path(prefix, name), "expected a string"))
}

fn span_field(obj: &Map<String, Value>, prefix: &str, name: &str) -> Result<Span, RecordError> {
    let p = path(prefix, name);
    let o = field(obj, prefix, name)?
        .as_object()
        .ok_or_else(|| RecordError::new(&p, "expected an object with start and end"))?;
    let idx = |k: &str| {
        o.get(k)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| RecordError::new(path(&p, k), "expected a non-negative integer"))
    };
    Ok(Span::new(idx("start")?, idx("end")?))
}

fn half_from_value(v: &Value, prefix: &str) -> Result<SchemaHalf, RecordError> {
    let obj = v
        .as_object()
        .ok_or_else(|| RecordError::new(prefix, "expected an object"))?;
    let sentence = str_field(obj, prefix, "sentence")?;
    let pronoun = span_field(obj, prefix, "pronoun")?;
    let target_a = str_field(obj, prefix, "target_a")?;
    let target_b = str_field(obj, prefix, "target_b")?;
    let question = str_field(obj, prefix, "question")?;
    let answer = str_field(obj, prefix, "correct_answer")?;
    let correct_answer = Answer::parse(&answer)
        .ok_or_else(|| RecordError::new(path(prefix, "correct_answer"), "expected \"A\" or \"B\""))?;
    let special_word = span_field(obj, prefix, "special_word")?;
    Ok(SchemaHalf {
        sentence: Sentence::parse(&sentence),
        pronoun,
        target_a,
        target_b,
        question,
        correct_answer,
        special_word,
    })
}

fn schema_from_value(v: &Value) -> Result<Schema, RecordError> {
    let obj = v
        .as_object()
        .ok_or_else(|| RecordError::new("record", "expected a JSON object"))?;
    let version = field(obj, "", "version")?
        .as_u64()
        .ok_or_else(|| RecordError::new("version", "expected an integer"))?;
    if version != RECORD_VERSION {
        return Err(RecordError::new("version", format!("unsupported version {version}")));
    }
    let first = half_from_value(field(obj, "", "first")?, "first")?;
    let second = half_from_value(field(obj, "", "second")?, "second")?;
    let subject_tag = str_field(obj, "", "subject_tag")?;
    let origin = str_field(obj, "", "origin")?;
    let origin = Origin::parse(&origin)
        .ok_or_else(|| RecordError::new("origin", format!("unknown origin '{origin}'")))?;
    Ok(Schema { first, second, subject_tag, origin })
}

/// Decodes one schema record.
pub fn decode_schema(record: &[u8]) -> Result<Schema, RecordError> {
    let text = std::str::from_utf8(record).map_err(|e| RecordError::new("record", e.to_string()))?;
    if text.trim().is_empty() {
        return Err(RecordError::new("record", "empty input"));
    }
    let value: Value =
        serde_json::from_str(text).map_err(|e| RecordError::new("record", e.to_string()))?;
    schema_from_value(&value)
}

impl Serialize for Schema {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        schema_value(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        schema_from_value(&Value::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for SchemaHalf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        half_value(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SchemaHalf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        half_from_value(&Value::deserialize(d)?, "half").map_err(serde::de::Error::custom)
    }
}

/// Hand-authored fixtures.
pub mod fixtures {
    use super::*;

    pub const MARTIAL_ARTIST_SENTENCE: &str =
        "The martial artist defended himself from the drug dealer because he was violent.";

    /// The martial-artist schema with "drug dealer" spelled consistently.
    pub fn martial_artist() -> Schema {
        let first = SchemaHalf {
            sentence: Sentence::parse(MARTIAL_ARTIST_SENTENCE),
            pronoun: Span::single(10),
            target_a: "the drug dealer".into(),
            target_b: "the martial artist".into(),
            question: "Who was violent?".into(),
            correct_answer: Answer::A,
            special_word: Span::single(12),
        };
        let second = SchemaHalf {
            sentence: Sentence::parse(
                "The martial artist defended himself from the drug dealer because he was under-attack.",
            ),
            question: "Who was under-attack?".into(),
            correct_answer: Answer::B,
            ..first.clone()
        };
        Schema { first, second, subject_tag: "martial artist".into(), origin: Origin::CrowdModified }
    }
}
