//! Tokenization, coarse part-of-speech tags and the bundled word tables.
//!
//! Tagging is lexicon-first: overrides, then the pronoun table, then the
//! 5k-word lexicon, and finally suffix heuristics for anything unknown.
//! Gender comes from a gazetteer of person nouns and names; everything
//! else nominal is neuter.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Propn,
    Pron,
    Verb,
    Adj,
    Adv,
    Det,
    Adp,
    Punct,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 10] = [
        PosTag::Noun,
        PosTag::Propn,
        PosTag::Pron,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Det,
        PosTag::Adp,
        PosTag::Punct,
        PosTag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Propn => "PROPN",
            PosTag::Pron => "PRON",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Det => "DET",
            PosTag::Adp => "ADP",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<PosTag> {
        PosTag::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn is_nominal(self) -> bool {
        matches!(self, PosTag::Noun | PosTag::Propn)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Number {
    Singular,
    Plural,
    Unknown,
}

impl Number {
    pub fn agrees(self, other: Number) -> bool {
        self == Number::Unknown || other == Number::Unknown || self == other
    }

    pub fn parse(s: &str) -> Option<Number> {
        match s {
            "singular" => Some(Number::Singular),
            "plural" => Some(Number::Plural),
            "unknown" | "-" => Some(Number::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Masculine,
    Feminine,
    Neuter,
    /// A person whose gender is not lexically marked.
    Either,
    Unknown,
}

impl Gender {
    /// Symmetric compatibility used for antecedent agreement.
    pub fn agrees(self, other: Gender) -> bool {
        use Gender::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => true,
            (Neuter, Neuter) => true,
            (Neuter, _) | (_, Neuter) => false,
            (Either, _) | (_, Either) => true,
            (a, b) => a == b,
        }
    }

    pub fn parse(s: &str) -> Option<Gender> {
        match s {
            "masculine" => Some(Gender::Masculine),
            "feminine" => Some(Gender::Feminine),
            "neuter" => Some(Gender::Neuter),
            "either" => Some(Gender::Either),
            "unknown" | "-" => Some(Gender::Unknown),
            _ => None,
        }
    }
}

/// One word-level unit of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub index: usize,
    pub pos: PosTag,
    pub number: Number,
    pub gender: Gender,
}

impl Token {
    pub fn lower(&self) -> String {
        self.surface.to_lowercase()
    }
}

/// Half-open token index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn single(index: usize) -> Self {
        Span { start: index, end: index + 1 }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn within(&self, len: usize) -> bool {
        !self.is_empty() && self.end <= len
    }

    /// Index of the last token, used as the phrase head.
    pub fn head(&self) -> usize {
        self.end - 1
    }
}

pub const CONNECTIVES: [&str; 6] = ["because", "so", "since", "although", "and", "but"];
pub const DEFINITE_DETERMINERS: [&str; 5] = ["the", "this", "that", "these", "those"];
pub const INDEFINITE_DETERMINERS: [&str; 2] = ["a", "an"];
pub const AUXILIARIES: [&str; 22] = [
    "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had", "having", "do",
    "does", "did", "will", "would", "can", "could", "should", "may", "might",
];

pub fn is_connective(word: &str) -> bool {
    CONNECTIVES.contains(&word.to_lowercase().as_str())
}

fn is_punct_char(c: char) -> bool {
    !c.is_alphanumeric() && c != '-' && c != '\''
}

/// Unicode and whitespace clean-up applied before tokenization.
pub fn normalize(text: &str) -> String {
    let mapped: String = text
        .chars()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '\u{201B}' | '\u{2032}' => '\'',
            '\u{201C}' | '\u{201D}' | '\u{201F}' | '\u{2033}' => '"',
            '\u{2010}' | '\u{2011}' | '\u{2012}' => '-',
            '\u{2013}' | '\u{2014}' => '-',
            '\u{00A0}' | '\u{2007}' | '\u{202F}' | '\t' => ' ',
            '\u{2026}' => '.',
            c => c,
        })
        .filter(|c| !matches!(c, '\u{200B}' | '\u{FEFF}'))
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace tokenization with leading and trailing punctuation detached.
///
/// Hyphens and apostrophes inside a word stay attached ("under-attack",
/// "don't"); a chunk made only of punctuation stays a single token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if chunk.chars().all(is_punct_char) {
            out.push(chunk.to_string());
            continue;
        }
        let chars: Vec<char> = chunk.chars().collect();
        let mut lo = 0;
        while lo < chars.len() && (is_punct_char(chars[lo]) || chars[lo] == '\'') {
            out.push(chars[lo].to_string());
            lo += 1;
        }
        let mut hi = chars.len();
        let mut trailing = Vec::new();
        while hi > lo && (is_punct_char(chars[hi - 1]) || chars[hi - 1] == '\'') {
            trailing.push(chars[hi - 1].to_string());
            hi -= 1;
        }
        if hi > lo {
            out.push(chars[lo..hi].iter().collect());
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PronounInfo {
    pub person: u8,
    pub number: Number,
    pub gender: Gender,
    pub animate: bool,
    pub reflexive: bool,
}

/// Ordered word → alternatives table used for special-word substitution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubstitutionTable {
    entries: HashMap<String, Vec<String>>,
}

impl SubstitutionTable {
    pub fn parse(text: &str) -> Self {
        let mut table = SubstitutionTable::default();
        table.extend_from_str(text);
        table
    }

    /// Merges two-column `word<TAB>alt1,alt2` lines; later files append alternatives.
    pub fn extend_from_str(&mut self, text: &str) {
        for (word, rest) in data_lines(text).filter_map(|cols| {
            let mut it = cols.into_iter();
            Some((it.next()?, it.next()?))
        }) {
            let alts = self.entries.entry(word.to_lowercase()).or_default();
            for alt in rest.split(',').map(str::trim).filter(|a| !a.is_empty()) {
                if !alts.iter().any(|a| a == alt) {
                    alts.push(alt.to_string());
                }
            }
        }
    }

    pub fn insert(&mut self, word: &str, alternatives: &[&str]) {
        self.entries.insert(
            word.to_lowercase(),
            alternatives.iter().map(|s| s.to_string()).collect(),
        );
    }

    pub fn alternatives(&self, word: &str) -> Option<&[String]> {
        self.entries
            .get(&word.to_lowercase())
            .map(Vec::as_slice)
            .filter(|a| !a.is_empty())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').collect())
}

/// All word tables needed by the tagger, validators and scorers.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pos: HashMap<String, (PosTag, Number)>,
    overrides: HashMap<String, (PosTag, Number)>,
    pronouns: HashMap<String, PronounInfo>,
    persons: HashMap<String, Gender>,
    plural_to_singular: HashMap<String, String>,
    stopwords: HashSet<String>,
    frequent: HashSet<String>,
    pub substitutions: SubstitutionTable,
    replacements: HashMap<String, String>,
}

static BUNDLED: OnceLock<Lexicon> = OnceLock::new();

fn parse_pos_table(text: &str) -> HashMap<String, (PosTag, Number)> {
    data_lines(text)
        .filter_map(|cols| {
            let pos = PosTag::parse(cols.get(1)?)?;
            let number = cols.get(2).and_then(|n| Number::parse(n)).unwrap_or(Number::Unknown);
            Some((cols[0].to_lowercase(), (pos, number)))
        })
        .collect()
}

impl Lexicon {
    /// The tables shipped in `data/`.
    pub fn bundled() -> &'static Lexicon {
        BUNDLED.get_or_init(|| {
            Lexicon::from_tables(
                include_str!("../data/lexicon.tsv"),
                include_str!("../data/overrides.tsv"),
                include_str!("../data/pronouns.tsv"),
                include_str!("../data/gender.tsv"),
                include_str!("../data/irregular_plurals.tsv"),
                include_str!("../data/stopwords.txt"),
                include_str!("../data/frequent_words.txt"),
                include_str!("../data/substitutions.tsv"),
            )
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_tables(
        lexicon: &str,
        overrides: &str,
        pronouns: &str,
        persons: &str,
        irregular_plurals: &str,
        stopwords: &str,
        frequent: &str,
        substitutions: &str,
    ) -> Lexicon {
        let pronouns = data_lines(pronouns)
            .filter_map(|c| {
                Some((
                    c.first()?.to_string(),
                    PronounInfo {
                        person: c.get(1)?.parse().ok()?,
                        number: Number::parse(c.get(2)?)?,
                        gender: Gender::parse(c.get(3)?)?,
                        animate: *c.get(4)? == "yes",
                        reflexive: *c.get(5)? == "yes",
                    },
                ))
            })
            .collect();
        let persons = data_lines(persons)
            .filter_map(|c| Some((c.first()?.to_lowercase(), Gender::parse(c.get(1)?)?)))
            .collect();
        let plural_to_singular = data_lines(irregular_plurals)
            .filter_map(|c| Some((c.get(1)?.to_string(), c.first()?.to_string())))
            .collect();
        let words = |t: &str| -> HashSet<String> {
            t.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect()
        };
        Lexicon {
            pos: parse_pos_table(lexicon),
            overrides: parse_pos_table(overrides),
            pronouns,
            persons,
            plural_to_singular,
            stopwords: words(stopwords),
            frequent: words(frequent),
            substitutions: SubstitutionTable::parse(substitutions),
            replacements: HashMap::new(),
        }
    }

    /// Adds a user-supplied `wrong<TAB>right` spelling replacement table.
    pub fn with_replacements(mut self, table: &str) -> Self {
        for cols in data_lines(table) {
            if let [from, to, ..] = cols.as_slice() {
                self.replacements.insert(from.to_string(), to.to_string());
            }
        }
        self
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(&word.to_lowercase())
    }

    pub fn stopword_count(&self) -> usize {
        self.stopwords.len()
    }

    pub fn is_frequent(&self, word: &str) -> bool {
        self.frequent.contains(&word.to_lowercase())
    }

    pub fn pronoun(&self, word: &str) -> Option<PronounInfo> {
        self.pronouns.get(&word.to_lowercase()).copied()
    }

    pub fn lexicon_size(&self) -> usize {
        self.pos.len()
    }

    /// Singular form of a noun using the irregulars table and -s/-es rules.
    pub fn singularize(&self, word: &str) -> String {
        let w = word.to_lowercase();
        if let Some(s) = self.plural_to_singular.get(&w) {
            return s.clone();
        }
        if let Some(stem) = w.strip_suffix("ies").filter(|s| s.len() > 1) {
            return format!("{stem}y");
        }
        for suffix in ["ches", "shes", "sses", "xes", "zes"] {
            if w.ends_with(suffix) {
                return w[..w.len() - 2].to_string();
            }
        }
        if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") && w.len() > 2 {
            return w[..w.len() - 1].to_string();
        }
        w
    }

    fn is_verb_inflection(&self, lower: &str) -> bool {
        let is_verb = |stem: &str| matches!(self.pos.get(stem), Some((PosTag::Verb, _)));
        let mut stems: Vec<String> = Vec::new();
        for suffix in ["ed", "ing"] {
            if let Some(stem) = lower.strip_suffix(suffix).filter(|s| s.len() > 1) {
                stems.push(stem.to_string());
                stems.push(format!("{stem}e"));
                let b = stem.as_bytes();
                if b.len() > 2 && b[b.len() - 1] == b[b.len() - 2] {
                    stems.push(stem[..stem.len() - 1].to_string());
                }
            }
        }
        if let Some(stem) = lower.strip_suffix("ied") {
            stems.push(format!("{stem}y"));
        }
        stems.iter().any(|s| is_verb(s))
    }

    fn morphological_number(&self, lower: &str) -> Number {
        if self.plural_to_singular.contains_key(lower) {
            return Number::Plural;
        }
        if self.singularize(lower) != lower {
            Number::Plural
        } else {
            Number::Singular
        }
    }

    pub fn person_gender(&self, word: &str) -> Option<Gender> {
        let lower = word.to_lowercase();
        self.persons
            .get(&lower)
            .or_else(|| self.persons.get(&self.singularize(&lower)))
            .copied()
    }

    /// Applies the spelling replacement table word by word.
    pub fn apply_replacements(&self, text: &str) -> String {
        if self.replacements.is_empty() {
            return text.to_string();
        }
        text.split(' ')
            .map(|w| self.replacements.get(w).map(String::as_str).unwrap_or(w))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Tags a token sequence.
    pub fn tag(&self, words: &[String]) -> Vec<Token> {
        let mut tokens: Vec<Token> = Vec::with_capacity(words.len());
        for (index, surface) in words.iter().enumerate() {
            let lower = surface.to_lowercase();
            let prev = tokens.last();
            let (pos, mut number, mut gender) = self.tag_word(surface, &lower, index, prev);
            if pos.is_nominal() {
                if number == Number::Unknown {
                    number = if pos == PosTag::Propn {
                        Number::Singular
                    } else {
                        self.morphological_number(&lower)
                    };
                }
                gender = self.person_gender(&lower).unwrap_or(Gender::Neuter);
            }
            tokens.push(Token { surface: surface.clone(), index, pos, number, gender });
        }
        tokens
    }

    fn tag_word(
        &self,
        surface: &str,
        lower: &str,
        index: usize,
        prev: Option<&Token>,
    ) -> (PosTag, Number, Gender) {
        if surface.chars().all(|c| !c.is_alphanumeric()) {
            return (PosTag::Punct, Number::Unknown, Gender::Unknown);
        }
        if let Some(&(pos, number)) = self.overrides.get(lower) {
            return (pos, number, Gender::Unknown);
        }
        if let Some(p) = self.pronouns.get(lower) {
            return (PosTag::Pron, p.number, p.gender);
        }
        let capitalized = surface.chars().next().is_some_and(char::is_uppercase);
        let sentence_initial = index == 0 || prev.is_some_and(|p| p.pos == PosTag::Punct && matches!(p.surface.as_str(), "." | "!" | "?" | "\""));
        if capitalized && self.persons.contains_key(lower) && !self.pos.contains_key(lower) {
            return (PosTag::Propn, Number::Singular, Gender::Unknown);
        }
        if let Some(&(pos, number)) = self.pos.get(lower) {
            if capitalized && !sentence_initial && pos == PosTag::Noun && number == Number::Singular {
                // Capitalized common noun mid-sentence reads as a name.
                return (PosTag::Propn, Number::Singular, Gender::Unknown);
            }
            return (pos, number, Gender::Unknown);
        }
        (self.guess(lower, capitalized && !sentence_initial, prev), Number::Unknown, Gender::Unknown)
    }

    fn guess(&self, lower: &str, capitalized_mid: bool, prev: Option<&Token>) -> PosTag {
        if lower.chars().any(|c| c.is_ascii_digit()) {
            return PosTag::Other;
        }
        if capitalized_mid {
            return PosTag::Propn;
        }
        if lower.ends_with("ly") {
            return PosTag::Adv;
        }
        let after_aux = prev.is_some_and(|p| AUXILIARIES.contains(&p.lower().as_str()));
        if (lower.ends_with("ed") || lower.ends_with("ing")) && after_aux {
            return PosTag::Verb;
        }
        // Inflected form of a known verb, or a past tense right after its subject.
        let after_subject = prev.is_some_and(|p| matches!(p.pos, PosTag::Noun | PosTag::Propn | PosTag::Pron));
        if self.is_verb_inflection(lower) || (lower.ends_with("ed") && after_subject) {
            return PosTag::Verb;
        }
        const COPULAS: [&str; 8] = ["am", "is", "are", "was", "were", "be", "been", "being"];
        let after_copula = prev.is_some_and(|p| COPULAS.contains(&p.lower().as_str()));
        if lower.contains('-') || after_copula {
            return PosTag::Adj;
        }
        const NOUN_SUFFIXES: [&str; 13] = [
            "tion", "sion", "ness", "ment", "ity", "ism", "ist", "ship", "hood", "ance", "ence",
            "er", "or",
        ];
        const ADJ_SUFFIXES: [&str; 9] = ["ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ish"];
        if NOUN_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
            return PosTag::Noun;
        }
        if ADJ_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
            return PosTag::Adj;
        }
        let singular = self.singularize(lower);
        if singular != lower && matches!(self.pos.get(&singular), Some((PosTag::Noun, _))) {
            return PosTag::Noun;
        }
        if prev.is_some_and(|p| matches!(p.pos, PosTag::Det | PosTag::Adj)) {
            return PosTag::Noun;
        }
        PosTag::Other
    }

    /// Tokenizes and tags raw text.
    pub fn analyze(&self, text: &str) -> Vec<Token> {
        self.tag(&tokenize(text))
    }

    /// Case-folded content words: not stopwords and not DET/ADP/PUNCT.
    pub fn content_words(&self, tokens: &[Token]) -> Vec<String> {
        tokens
            .iter()
            .filter(|t| !matches!(t.pos, PosTag::Det | PosTag::Adp | PosTag::Punct))
            .map(Token::lower)
            .filter(|w| !self.is_stopword(w))
            .collect()
    }
}

/// Maximal runs of NOUN/PROPN tokens; adjacent nouns merge into one span.
pub fn noun_spans(tokens: &[Token]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].pos.is_nominal() {
            let start = i;
            while i < tokens.len() && tokens[i].pos.is_nominal() {
                i += 1;
            }
            spans.push(Span::new(start, i));
        } else {
            i += 1;
        }
    }
    spans
}

pub fn span_text(tokens: &[Token], span: Span) -> String {
    tokens[span.start..span.end]
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_detaches_punctuation() {
        assert_eq!(
            tokenize("he was violent."),
            vec!["he", "was", "violent", "."]
        );
        assert_eq!(tokenize("Who was under-attack?"), vec!["Who", "was", "under-attack", "?"]);
        assert_eq!(tokenize("\"don't\" go,"), vec!["\"", "don't", "\"", "go", ","]);
        assert_eq!(tokenize("wait ..."), vec!["wait", "..."]);
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn normalize_collapses_whitespace_and_quotes() {
        assert_eq!(normalize("  It\u{2019}s\u{00A0}\u{00A0}fine\t "), "It's fine");
    }

    #[test]
    fn stopword_list_has_127_entries() {
        assert_eq!(Lexicon::bundled().stopword_count(), 127);
    }

    #[test]
    fn lexicon_is_5k() {
        assert_eq!(Lexicon::bundled().lexicon_size(), 5000);
    }

    #[test]
    fn he_slept() {
        let toks = Lexicon::bundled().analyze("He slept.");
        let tags: Vec<_> = toks.iter().map(|t| t.pos).collect();
        assert_eq!(tags, vec![PosTag::Pron, PosTag::Verb, PosTag::Punct]);
        assert_eq!(toks[0].gender, Gender::Masculine);
        assert_eq!(toks[0].number, Number::Singular);
    }

    #[test]
    fn cats_is_plural_noun() {
        let toks = Lexicon::bundled().analyze("Cats");
        assert_eq!(toks[0].pos, PosTag::Noun);
        assert_eq!(toks[0].number, Number::Plural);
    }

    #[test]
    fn suffix_heuristics() {
        let lex = Lexicon::bundled();
        let toks = lex.analyze("the zorblatt was frobnicated quibbly near Zanzibarr");
        assert_eq!(toks[1].pos, PosTag::Noun);
        assert_eq!(toks[3].pos, PosTag::Verb);
        assert_eq!(toks[4].pos, PosTag::Adv);
        assert_eq!(toks[6].pos, PosTag::Propn);
    }

    #[test]
    fn martial_artist_is_one_span() {
        let toks = Lexicon::bundled()
            .analyze("The martial artist defended himself from the drug dealer because he was violent.");
        let spans = noun_spans(&toks);
        let texts: Vec<_> = spans.iter().map(|s| span_text(&toks, *s)).collect();
        assert_eq!(texts, vec!["martial artist", "drug dealer"]);
        assert_eq!(toks[spans[0].head()].gender, Gender::Either);
    }

    #[test]
    fn gender_agreement_table() {
        use Gender::*;
        assert!(Either.agrees(Masculine));
        assert!(!Masculine.agrees(Feminine));
        assert!(!Neuter.agrees(Either));
        assert!(Unknown.agrees(Neuter));
        for a in [Masculine, Feminine, Neuter, Either, Unknown] {
            for b in [Masculine, Feminine, Neuter, Either, Unknown] {
                assert_eq!(a.agrees(b), b.agrees(a));
            }
        }
    }

    #[test]
    fn singularize_rules() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.singularize("men"), "man");
        assert_eq!(lex.singularize("boxes"), "box");
        assert_eq!(lex.singularize("ladies"), "lady");
        assert_eq!(lex.singularize("glass"), "glass");
        assert_eq!(lex.singularize("dogs"), "dog");
    }

    #[test]
    fn substitution_lookup_is_ordered() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.substitutions.alternatives("violent").unwrap()[0], "under-attack");
        assert_eq!(lex.substitutions.alternatives("big").unwrap(), ["small", "huge"]);
        assert!(lex.substitutions.alternatives("zorblatt").is_none());
        assert!(lex.substitutions.len() >= 500);
    }
}
