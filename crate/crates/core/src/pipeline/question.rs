use thiserror::Error;

use crate::schema::{join_tokens, Sentence, SchemaHalf};
use crate::text::{is_connective, Lexicon, PosTag, Span, Token, AUXILIARIES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuestionError {
    #[error("pronoun span {0:?} is not a single pronoun token")]
    NotAPronoun(Span),
    #[error("pronoun does not open a clause after a connective or comma")]
    NoClauseBoundary,
    #[error("the pronoun's clause has no predicate")]
    NoPredicate,
}

fn closes_clause(t: &Token) -> bool {
    t.pos == PosTag::Punct || is_connective(&t.surface)
}

/// Token range of the predicate following a clause-initial pronoun, or an
/// error when the pronoun is not the subject of a subordinate clause.
fn predicate_range(tokens: &[Token], pronoun: Span) -> Result<(usize, usize), QuestionError> {
    if pronoun.len() != 1 || !pronoun.within(tokens.len()) || tokens[pronoun.start].pos != PosTag::Pron {
        return Err(QuestionError::NotAPronoun(pronoun));
    }
    let p = pronoun.start;
    let opens_clause = p > 0 && {
        let prev = &tokens[p - 1];
        is_connective(&prev.surface) || prev.surface == ","
    };
    if !opens_clause {
        return Err(QuestionError::NoClauseBoundary);
    }
    let start = p + 1;
    let end = (start..tokens.len()).find(|&i| closes_clause(&tokens[i])).unwrap_or(tokens.len());
    if !tokens[start..end].iter().any(|t| t.pos == PosTag::Verb) {
        return Err(QuestionError::NoPredicate);
    }
    Ok((start, end))
}

/// "Who"/"What" followed by the pronoun's clause with the pronoun removed.
pub fn generate_question(tokens: &[Token], pronoun: Span, lexicon: &Lexicon) -> Result<String, QuestionError> {
    let (start, end) = predicate_range(tokens, pronoun)?;
    let animate = lexicon
        .pronoun(&tokens[pronoun.start].surface)
        .is_none_or(|p| p.animate);
    let wh = if animate { "Who" } else { "What" };
    let words = std::iter::once(wh).chain(tokens[start..end].iter().map(|t| t.surface.as_str()));
    Ok(format!("{}?", join_tokens(words)))
}

/// The special word of the pronoun's clause: its first adjective, else a
/// participle after an auxiliary, else the main verb.
pub fn special_word_span(tokens: &[Token], pronoun: Span) -> Option<Span> {
    let (start, end) = predicate_range(tokens, pronoun).ok()?;
    let clause = start..end;
    if let Some(i) = clause.clone().find(|&i| tokens[i].pos == PosTag::Adj) {
        return Some(Span::single(i));
    }
    let participle = clause.clone().find(|&i| {
        let w = tokens[i].lower();
        tokens[i].pos == PosTag::Verb
            && (w.ends_with("ed") || w.ends_with("ing"))
            && i > start
            && AUXILIARIES.contains(&tokens[i - 1].lower().as_str())
    });
    if let Some(i) = participle {
        return Some(Span::single(i));
    }
    // Main verb: last verb of the first verb group.
    let first = clause.clone().find(|&i| tokens[i].pos == PosTag::Verb)?;
    let mut head = first;
    for i in first + 1..end {
        match tokens[i].pos {
            PosTag::Verb => head = i,
            PosTag::Adv => {}
            _ => break,
        }
    }
    Some(Span::single(head))
}

/// Derives the second half by swapping the special word for its first
/// listed alternative. The question is regenerated and the answer flipped.
pub fn substitute_special_word(first: &SchemaHalf, lexicon: &Lexicon) -> Option<SchemaHalf> {
    let alternative = lexicon.substitutions.alternatives(&first.special_word_text())?.first()?;
    substitute_with(first, alternative, lexicon)
}

/// Second half with the special word replaced by `alternative`.
pub fn substitute_with(first: &SchemaHalf, alternative: &str, lexicon: &Lexicon) -> Option<SchemaHalf> {
    let special = first.special_word;
    let alt_words: Vec<&str> = alternative.split_whitespace().collect();
    let tokens = first.sentence.tokens();
    let words: Vec<&str> = tokens[..special.start]
        .iter()
        .map(|t| t.surface.as_str())
        .chain(alt_words.iter().copied())
        .chain(tokens[special.end..].iter().map(|t| t.surface.as_str()))
        .collect();
    let sentence = Sentence::parse_with(&join_tokens(words), lexicon);
    let shift = alt_words.len() as isize - special.len() as isize;
    let pronoun = if first.pronoun.start >= special.end {
        let s = (first.pronoun.start as isize + shift) as usize;
        Span::new(s, s + first.pronoun.len())
    } else {
        first.pronoun
    };
    let question = generate_question(sentence.tokens(), pronoun, lexicon).ok()?;
    Some(SchemaHalf {
        sentence,
        pronoun,
        target_a: first.target_a.clone(),
        target_b: first.target_b.clone(),
        question,
        correct_answer: first.correct_answer.flip(),
        special_word: Span::new(special.start, special.start + alt_words.len()),
    })
}
