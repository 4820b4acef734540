//! Worker training, test questions, scoring and banning, and the hardness
//! metric.

pub mod fixtures;
mod hardness;
mod training;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{Answer, Schema};

pub use hardness::{hardness, hardness_prompt, HardnessLabel, HardnessReport, HardnessWeights, HARDNESS_PROMPT};
pub use training::{
    grade_training_item, required_items, start_training, Defect, TrainingAnswer, TrainingItem, TrainingPool,
    TrainingSession, TRAINING_BASE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Qualificator,
    Supervisor,
    Admin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum TrainingStatus {
    Required,
    InProgress { session: TrainingSession },
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    pub id: String,
    pub role: Role,
    pub score: i64,
    pub banned: bool,
    pub training: TrainingStatus,
    pub valid_count: u64,
    pub invalid_count: u64,
    pub response_times_ms: Vec<u64>,
    pub bonuses_awarded: u64,
}

impl Worker {
    /// Qualificators start untrained; supervisors and admins are provisioned trained.
    pub fn new(id: impl Into<String>, role: Role) -> Self {
        Worker {
            id: id.into(),
            role,
            score: 0,
            banned: false,
            training: if role == Role::Qualificator { TrainingStatus::Required } else { TrainingStatus::Completed },
            valid_count: 0,
            invalid_count: 0,
            response_times_ms: Vec::new(),
            bonuses_awarded: 0,
        }
    }

    pub fn trained(&self) -> bool {
        self.training == TrainingStatus::Completed
    }

    pub fn mean_response_ms(&self) -> Option<f64> {
        if self.response_times_ms.is_empty() {
            return None;
        }
        Some(self.response_times_ms.iter().sum::<u64>() as f64 / self.response_times_ms.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QualityError {
    #[error("worker {0} is banned")]
    Banned(String),
    #[error("worker {0} has already completed training")]
    AlreadyTrained(String),
    #[error("training pool has {available} {kind} items, {needed} needed")]
    PoolTooSmall { kind: &'static str, available: usize, needed: usize },
    #[error("training item {0} does not exist")]
    ItemOutOfRange(usize),
    #[error("training item {0} was already graded")]
    AlreadyGraded(usize),
    #[error("training session already failed; start a new one")]
    SessionFailed,
    #[error("answer kind does not match training item {0}")]
    AnswerKind(usize),
    #[error("schema does not pass validation")]
    InvalidSchema,
}

// ---------------------------------------------------------------------------
// Scoring

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub valid: i64,
    pub invalid: i64,
    pub test_correct: i64,
    pub test_wrong: i64,
    pub ban_threshold: i64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig { valid: 10, invalid: -5, test_correct: 2, test_wrong: -8, ban_threshold: -50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreEvent {
    ValidSchema,
    InvalidSchema,
    TestCorrect,
    TestWrong,
    Bonus { amount: u64 },
}

/// Applies one score event. Banned workers are left untouched.
pub fn apply_score_event(worker: &Worker, event: ScoreEvent, cfg: &ScoreConfig) -> Worker {
    let mut w = worker.clone();
    if w.banned {
        return w;
    }
    let delta = match event {
        ScoreEvent::ValidSchema => {
            w.valid_count += 1;
            cfg.valid
        }
        ScoreEvent::InvalidSchema => {
            w.invalid_count += 1;
            cfg.invalid
        }
        ScoreEvent::TestCorrect => cfg.test_correct,
        ScoreEvent::TestWrong => cfg.test_wrong,
        ScoreEvent::Bonus { amount } => {
            w.bonuses_awarded = w.bonuses_awarded.saturating_add(amount);
            i64::try_from(amount).unwrap_or(i64::MAX)
        }
    };
    w.score = w.score.saturating_add(delta);
    if w.score < cfg.ban_threshold {
        w.banned = true;
    }
    w
}

pub fn apply_score_events(worker: &Worker, events: &[ScoreEvent], cfg: &ScoreConfig) -> Worker {
    events.iter().fold(worker.clone(), |w, &e| apply_score_event(&w, e, cfg))
}

// ---------------------------------------------------------------------------
// Test questions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSource {
    ValidatedSet,
    UnvalidatedGenerator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestExpected {
    /// Correct answer for each half.
    Answers { answers: [Answer; 2] },
    /// Approve/disapprove with no known truth; answers are recorded only.
    Approval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestQuestion {
    pub schema: Schema,
    pub expected: TestExpected,
    pub source: TestSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestResponse {
    Answers { answers: [Answer; 2] },
    Approval { approve: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestOutcome {
    Correct,
    Wrong,
    Recorded,
}

impl TestOutcome {
    pub fn score_event(self) -> Option<ScoreEvent> {
        match self {
            TestOutcome::Correct => Some(ScoreEvent::TestCorrect),
            TestOutcome::Wrong => Some(ScoreEvent::TestWrong),
            TestOutcome::Recorded => None,
        }
    }
}

pub fn grade_test(question: &TestQuestion, response: &TestResponse) -> TestOutcome {
    match (&question.expected, response) {
        (TestExpected::Answers { answers }, TestResponse::Answers { answers: given }) => {
            if answers == given {
                TestOutcome::Correct
            } else {
                TestOutcome::Wrong
            }
        }
        (TestExpected::Approval, TestResponse::Approval { .. }) => TestOutcome::Recorded,
        _ => TestOutcome::Wrong,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestQuestionConfig {
    pub probability: f64,
    pub validated_share: f64,
}

impl Default for TestQuestionConfig {
    fn default() -> Self {
        TestQuestionConfig { probability: 0.10, validated_share: 0.9 }
    }
}

/// Question pools: validated schemas carry known answers, generated ones do not.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TestPools {
    pub validated: Vec<Schema>,
    pub generated: Vec<Schema>,
}

/// One login draw. Always consumes exactly one value from `rng` for the
/// show/no-show decision, plus two more when a question is shown.
pub fn maybe_test_question<R: Rng + ?Sized>(
    rng: &mut R,
    worker: &Worker,
    pools: &TestPools,
    cfg: &TestQuestionConfig,
) -> Option<TestQuestion> {
    if worker.banned {
        return None;
    }
    if rng.gen::<f64>() >= cfg.probability {
        return None;
    }
    let prefer_validated = rng.gen::<f64>() < cfg.validated_share;
    let pick = rng.gen::<f64>();
    let (pool, source) = match (prefer_validated, pools.validated.is_empty(), pools.generated.is_empty()) {
        (_, true, true) => {
            warn!("test question drawn for {} but both pools are empty", worker.id);
            return None;
        }
        (true, false, _) | (false, false, true) => (&pools.validated, TestSource::ValidatedSet),
        _ => (&pools.generated, TestSource::UnvalidatedGenerator),
    };
    let schema = pool[((pick * pool.len() as f64) as usize).min(pool.len() - 1)].clone();
    let expected = match source {
        TestSource::ValidatedSet => TestExpected::Answers {
            answers: [schema.first.correct_answer, schema.second.correct_answer],
        },
        TestSource::UnvalidatedGenerator => TestExpected::Approval,
    };
    Some(TestQuestion { schema, expected, source })
}
