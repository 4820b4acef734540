use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::schema::{Answer, Schema};

use super::{QualityError, TrainingStatus, Worker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Defect {
    Misspelling,
    WordOrder,
    Grammar,
}

impl Defect {
    pub fn parse(s: &str) -> Option<Defect> {
        match s {
            "MISSPELLING" => Some(Defect::Misspelling),
            "WORD_ORDER" => Some(Defect::WordOrder),
            "GRAMMAR" => Some(Defect::Grammar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainingItem {
    /// Pick the correct answer for both halves.
    Resolve { schema: Schema },
    /// Report the defects of an authored schema.
    Validate { schema: Schema, defects: BTreeSet<Defect> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainingAnswer {
    Resolve { answers: [Answer; 2] },
    Validate { defects: BTreeSet<Defect> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingPool {
    pub resolve: Vec<TrainingItem>,
    pub validate: Vec<TrainingItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSession {
    pub required_items: usize,
    pub completed_items: usize,
    pub items: Vec<TrainingItem>,
    pub graded: Vec<Option<bool>>,
    pub passed: bool,
    pub failed: bool,
}

pub const TRAINING_BASE: usize = 3;

pub fn required_items(base: usize, valid: u64, invalid: u64) -> usize {
    base + invalid.saturating_sub(valid) as usize
}

/// Draws a session of `base + max(0, invalid − valid)` items: the larger
/// half resolve-type, the rest validate-type, each shuffled by `seed`.
pub fn start_training(
    worker: &Worker,
    base: usize,
    pool: &TrainingPool,
    seed: u64,
) -> Result<TrainingSession, QualityError> {
    if worker.banned {
        return Err(QualityError::Banned(worker.id.clone()));
    }
    if worker.training == TrainingStatus::Completed {
        return Err(QualityError::AlreadyTrained(worker.id.clone()));
    }
    let required = required_items(base, worker.valid_count, worker.invalid_count);
    let n_resolve = required.div_ceil(2);
    let n_validate = required - n_resolve;
    for (kind, available, needed) in [
        ("resolve", pool.resolve.len(), n_resolve),
        ("validate", pool.validate.len(), n_validate),
    ] {
        if available < needed {
            return Err(QualityError::PoolTooSmall { kind, available, needed });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut resolve = pool.resolve.clone();
    resolve.shuffle(&mut rng);
    let mut validate = pool.validate.clone();
    validate.shuffle(&mut rng);
    let items: Vec<TrainingItem> = resolve
        .into_iter()
        .take(n_resolve)
        .chain(validate.into_iter().take(n_validate))
        .collect();
    Ok(TrainingSession {
        required_items: required,
        completed_items: 0,
        graded: vec![None; items.len()],
        items,
        passed: false,
        failed: false,
    })
}

/// Grades one item. A wrong answer fails the whole session.
pub fn grade_training_item(
    session: &TrainingSession,
    index: usize,
    answer: &TrainingAnswer,
) -> Result<TrainingSession, QualityError> {
    if session.failed {
        return Err(QualityError::SessionFailed);
    }
    let item = session.items.get(index).ok_or(QualityError::ItemOutOfRange(index))?;
    if session.graded[index].is_some() {
        return Err(QualityError::AlreadyGraded(index));
    }
    let correct = match (item, answer) {
        (TrainingItem::Resolve { schema }, TrainingAnswer::Resolve { answers }) => {
            *answers == [schema.first.correct_answer, schema.second.correct_answer]
        }
        (TrainingItem::Validate { defects, .. }, TrainingAnswer::Validate { defects: reported }) => {
            defects == reported
        }
        _ => return Err(QualityError::AnswerKind(index)),
    };
    let mut s = session.clone();
    s.graded[index] = Some(correct);
    if correct {
        s.completed_items += 1;
        s.passed = s.completed_items == s.required_items;
    } else {
        s.failed = true;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::fixtures::training_pool;
    use crate::quality::Role;
    use crate::schema::fixtures::martial_artist;

    fn worker(valid: u64, invalid: u64) -> Worker {
        Worker { valid_count: valid, invalid_count: invalid, ..Worker::new("w", Role::Qualificator) }
    }

    #[test]
    fn required_item_counts() {
        let pool = training_pool();
        for (v, i, n) in [(0, 0, 3), (2, 5, 6), (10, 1, 3)] {
            let s = start_training(&worker(v, i), TRAINING_BASE, &pool, 1).unwrap();
            assert_eq!(s.required_items, n);
            assert_eq!(s.items.len(), n);
            let resolve = s.items.iter().filter(|i| matches!(i, TrainingItem::Resolve { .. })).count();
            assert_eq!(resolve, n.div_ceil(2));
        }
    }

    #[test]
    fn pool_too_small() {
        let pool = training_pool();
        let err = start_training(&worker(0, 40), TRAINING_BASE, &pool, 1).unwrap_err();
        assert!(matches!(err, QualityError::PoolTooSmall { .. }));
    }

    #[test]
    fn same_seed_same_items() {
        let pool = training_pool();
        let a = start_training(&worker(0, 3), TRAINING_BASE, &pool, 42).unwrap();
        let b = start_training(&worker(0, 3), TRAINING_BASE, &pool, 42).unwrap();
        assert_eq!(a, b);
    }

    fn resolve_session() -> TrainingSession {
        let schema = martial_artist();
        TrainingSession {
            required_items: 1,
            completed_items: 0,
            items: vec![TrainingItem::Resolve { schema }],
            graded: vec![None],
            passed: false,
            failed: false,
        }
    }

    #[test]
    fn correct_answer_completes() {
        let s = grade_training_item(&resolve_session(), 0, &TrainingAnswer::Resolve { answers: [Answer::A, Answer::B] })
            .unwrap();
        assert_eq!(s.completed_items, 1);
        assert!(s.passed);
    }

    #[test]
    fn wrong_answer_fails() {
        let s = grade_training_item(&resolve_session(), 0, &TrainingAnswer::Resolve { answers: [Answer::B, Answer::A] })
            .unwrap();
        assert!(s.failed && !s.passed);
    }

    #[test]
    fn validate_by_set_equality() {
        let item = TrainingItem::Validate {
            schema: martial_artist(),
            defects: [Defect::Misspelling].into_iter().collect(),
        };
        let s = TrainingSession { items: vec![item], ..resolve_session() };
        let ok = TrainingAnswer::Validate { defects: [Defect::Misspelling].into_iter().collect() };
        assert!(grade_training_item(&s, 0, &ok).unwrap().passed);
        let extra = TrainingAnswer::Validate { defects: [Defect::Misspelling, Defect::Grammar].into_iter().collect() };
        assert!(grade_training_item(&s, 0, &extra).unwrap().failed);
    }

    #[test]
    fn out_of_range() {
        let a = TrainingAnswer::Resolve { answers: [Answer::A, Answer::B] };
        assert_eq!(grade_training_item(&resolve_session(), 3, &a), Err(QualityError::ItemOutOfRange(3)));
    }
}
