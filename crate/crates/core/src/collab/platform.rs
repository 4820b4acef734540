use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptivity::{export_pipeline_config, record_outcome, AdaptivityState};
use crate::pipeline::{rank_drafts, BiasLabel, Draft, DraftKind, PipelineConfig, TemplateId};
use crate::quality::fixtures::{training_pool, validated_schemas};
use crate::quality::{
    apply_score_event, grade_test, grade_training_item, hardness, hardness_prompt, maybe_test_question,
    start_training, HardnessWeights, QualityError, Role, ScoreConfig, ScoreEvent, TestOutcome, TestPools,
    TestQuestion, TestQuestionConfig, TestResponse, TrainingAnswer, TrainingPool, TrainingSession, TrainingStatus,
    Worker, TRAINING_BASE,
};
use crate::schema::{validate_schema, Answer, Origin, Schema, ValidationReport};
use crate::text::Lexicon;

use super::{
    analysis_report, crowd_verdict, grammar_flags, promote_check, AggregationResult, BonusLedger, Comment,
    CrowdVerdict, PromotionConfig, QualAnswer, QualificationRecord, SchemaAnalysis, SupervisorVerdict,
    COMMENT_MAX_CHARS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformConfig {
    pub score: ScoreConfig,
    pub test_questions: TestQuestionConfig,
    pub hardness: HardnessWeights,
    pub training_base: usize,
    pub lease_minutes: i64,
    pub template_cap: u32,
    /// Probability that a queue request is served a semi-template.
    pub semi_share: f64,
    pub promotion: PromotionConfig,
    pub pipeline: PipelineConfig,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig {
            score: ScoreConfig::default(),
            test_questions: TestQuestionConfig::default(),
            hardness: HardnessWeights::default(),
            training_base: TRAINING_BASE,
            lease_minutes: 30,
            template_cap: 5,
            semi_share: 0.10,
            promotion: PromotionConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DraftStatus {
    Proposed,
    AwaitingReview,
    Finished,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftEntry {
    pub draft: Draft,
    pub status: DraftStatus,
    pub round: u32,
    pub seen_by: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerAccount {
    pub worker: Worker,
    pub key_hash: String,
    /// Set by an admin demotion; blocks automatic re-promotion.
    pub demoted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub worker_id: String,
    pub created_at: DateTime<Utc>,
    pub pending_test_question: Option<TestQuestion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub worker_id: String,
    pub template_id: TemplateId,
    pub started_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    WorkerProvisioned { worker_id: String, role: Role, key_hash: String },
    TrainingUpdated { worker_id: String, status: TrainingStatus },
    LoggedIn { token: String, worker_id: String, at: DateTime<Utc>, question: Option<TestQuestion> },
    TestAnswered { token: String, worker_id: String, outcome: TestOutcome },
    DraftsAdded { drafts: Vec<Draft> },
    DraftLeased { lease: Lease },
    LeaseExpired { worker_id: String, template_id: TemplateId },
    QualificationSubmitted { record: QualificationRecord },
    SubmissionRejected { worker_id: String, template_id: TemplateId },
    AggregationRun { date: NaiveDate, scheduled: bool, at: DateTime<Utc>, results: Vec<AggregationResult> },
    Reviewed { result_id: u64, supervisor_id: String, verdict: SupervisorVerdict },
    Demoted { worker_id: String },
    BonusAwarded { worker_id: String, amount: u64, at: DateTime<Utc> },
    CommentPosted { comment: Comment },
    BiasVoted { worker_id: String, template_id: TemplateId, label: BiasLabel },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollabError {
    #[error("unknown worker {0}")]
    UnknownWorker(String),
    #[error("worker {0} already exists")]
    DuplicateWorker(String),
    #[error("worker {0} is banned")]
    Banned(String),
    #[error("worker {0} must complete training first")]
    NotTrained(String),
    #[error("this action requires the {0:?} role")]
    Unauthorized(Role),
    #[error("submit feedback on draft {0} before selecting another one")]
    OpenDraft(TemplateId),
    #[error("answer the pending test question first")]
    PendingTestQuestion,
    #[error("no lease on draft {0}; request it from the queue first")]
    NoLease(TemplateId),
    #[error("the lease on draft {0} has expired")]
    LeaseExpired(TemplateId),
    #[error("unknown draft {0}")]
    UnknownDraft(TemplateId),
    #[error("draft {0} already exists")]
    DuplicateDraft(TemplateId),
    #[error("draft {0} has no complete schema to accept as is")]
    NothingToAccept(TemplateId),
    #[error("malformed submission: {0}")]
    AnswerShape(&'static str),
    #[error("unknown session")]
    UnknownSession,
    #[error("no test question is pending")]
    NoPendingQuestion,
    #[error("unknown aggregation result {0}")]
    UnknownResult(u64),
    #[error("aggregation result {0} is not awaiting review")]
    NotAwaitingReview(u64),
    #[error("worker {0} is not a supervisor")]
    NotSupervisor(String),
    #[error("comments must be 1 to {COMMENT_MAX_CHARS} characters")]
    CommentLength,
    #[error("bonus amount must be positive")]
    ZeroBonus,
    #[error(transparent)]
    Quality(#[from] QualityError),
}

/// Body of a qualification submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub answer: QualAnswer,
    #[serde(default)]
    pub modified: Option<Schema>,
    #[serde(default)]
    pub selected_answers: Option<[Answer; 2]>,
    #[serde(default)]
    pub bias: Option<BiasLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubmitOutcome {
    Stored { record: QualificationRecord, analysis: Option<SchemaAnalysis> },
    /// The schema failed validation; the lease is kept for a retry.
    Rejected { report: ValidationReport },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Submitted {
    pub events: Vec<Event>,
    pub outcome: SubmitOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NextDraft {
    pub events: Vec<Event>,
    /// `None` signals an empty queue.
    pub draft: Option<Draft>,
}

/// Event-sourced platform state. Commands validate and return events;
/// [`Platform::apply`] is the only mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    #[serde(skip)]
    config: PlatformConfig,
    #[serde(skip)]
    validated_pool: Vec<Schema>,
    #[serde(skip)]
    training_pool: TrainingPool,
    pub workers: BTreeMap<String, WorkerAccount>,
    pub sessions: BTreeMap<String, Session>,
    pub drafts: BTreeMap<TemplateId, DraftEntry>,
    /// Keyed by worker: one open draft per worker.
    pub leases: BTreeMap<String, Lease>,
    pub records: Vec<QualificationRecord>,
    pub results: Vec<AggregationResult>,
    pub scheduled_runs: BTreeSet<NaiveDate>,
    pub bonus: BonusLedger,
    pub comments: Vec<Comment>,
    pub bias: BiasModel,
    pub adaptivity: AdaptivityState,
    pub tests_answered: BTreeMap<String, Vec<TestOutcome>>,
    pub events_applied: u64,
}

use super::BiasModel;

fn lexicon() -> &'static Lexicon {
    Lexicon::bundled()
}

fn draft_words(draft: &Draft) -> Vec<String> {
    lexicon().content_words(&draft.sentence_tokens())
}

impl Platform {
    pub fn new(config: PlatformConfig) -> Self {
        Platform {
            adaptivity: AdaptivityState::new(config.pipeline.clone()),
            validated_pool: validated_schemas(),
            training_pool: training_pool(),
            config,
            workers: BTreeMap::new(),
            sessions: BTreeMap::new(),
            drafts: BTreeMap::new(),
            leases: BTreeMap::new(),
            records: Vec::new(),
            results: Vec::new(),
            scheduled_runs: BTreeSet::new(),
            bonus: BonusLedger::default(),
            comments: Vec::new(),
            bias: BiasModel::default(),
            tests_answered: BTreeMap::new(),
            events_applied: 0,
        }
    }

    /// Re-attaches configuration and fixture pools to deserialized state.
    pub fn with_config(mut self, config: PlatformConfig) -> Self {
        self.validated_pool = validated_schemas();
        self.training_pool = training_pool();
        self.config = config;
        self
    }

    pub fn config(&self) -> &PlatformConfig {
        &self.config
    }

    /// Generator configuration after the adaptivity updates.
    pub fn pipeline_config(&self) -> PipelineConfig {
        export_pipeline_config(&self.adaptivity)
    }

    /// Sequence number for the next generated draft id.
    pub fn next_template_seq(&self) -> u64 {
        self.drafts.len() as u64 + 1
    }

    // -----------------------------------------------------------------------
    // Lookups

    fn account(&self, worker_id: &str) -> Result<&WorkerAccount, CollabError> {
        self.workers.get(worker_id).ok_or_else(|| CollabError::UnknownWorker(worker_id.to_string()))
    }

    fn active(&self, worker_id: &str) -> Result<&Worker, CollabError> {
        let w = &self.account(worker_id)?.worker;
        if w.banned {
            return Err(CollabError::Banned(worker_id.to_string()));
        }
        Ok(w)
    }

    fn require_role(&self, worker_id: &str, roles: &[Role]) -> Result<&Worker, CollabError> {
        let w = self.active(worker_id)?;
        if !roles.contains(&w.role) {
            return Err(CollabError::Unauthorized(roles[0]));
        }
        Ok(w)
    }

    pub fn worker(&self, worker_id: &str) -> Option<&Worker> {
        self.workers.get(worker_id).map(|a| &a.worker)
    }

    pub fn session(&self, token: &str) -> Option<&Session> {
        self.sessions.get(token)
    }

    fn has_pending_question(&self, worker_id: &str) -> bool {
        self.sessions.values().any(|s| s.worker_id == worker_id && s.pending_test_question.is_some())
    }

    /// Records of the template's current review round.
    pub fn round_records(&self, template_id: &TemplateId) -> Vec<&QualificationRecord> {
        let Some(entry) = self.drafts.get(template_id) else { return Vec::new() };
        self.records.iter().filter(|r| &r.template_id == template_id && r.round == entry.round).collect()
    }

    fn active_leases(&self, template_id: &TemplateId, now: DateTime<Utc>) -> u32 {
        self.leases.values().filter(|l| &l.template_id == template_id && l.expires_at > now).count() as u32
    }

    /// Submitted derivations plus live leases.
    pub fn usage(&self, template_id: &TemplateId, now: DateTime<Utc>) -> u32 {
        self.drafts.get(template_id).map_or(0, |e| e.draft.usage_count) + self.active_leases(template_id, now)
    }

    pub fn pending_reviews(&self) -> Vec<&AggregationResult> {
        self.results
            .iter()
            .filter(|r| r.crowd_verdict == CrowdVerdict::ProvisionalValid && r.supervisor_verdict.is_none())
            .collect()
    }

    /// Accepted schemas of valid-finished results, grouped by aggregation run date.
    pub fn finished_schemas(&self) -> BTreeMap<NaiveDate, Vec<Schema>> {
        let mut out: BTreeMap<NaiveDate, Vec<Schema>> = BTreeMap::new();
        for r in self.results.iter().filter(|r| r.supervisor_verdict == Some(SupervisorVerdict::ValidFinished)) {
            out.entry(r.run_date).or_default().extend(r.accepted_schemas().into_iter().cloned());
        }
        out
    }

    pub fn finished_templates(&self) -> BTreeSet<TemplateId> {
        self.drafts
            .iter()
            .filter(|(_, e)| e.status == DraftStatus::Finished)
            .map(|(id, _)| id.clone())
            .collect()
    }

    // -----------------------------------------------------------------------
    // Commands

    pub fn provision(&self, worker_id: &str, role: Role, key_hash: &str) -> Result<Vec<Event>, CollabError> {
        if self.workers.contains_key(worker_id) {
            return Err(CollabError::DuplicateWorker(worker_id.to_string()));
        }
        Ok(vec![Event::WorkerProvisioned {
            worker_id: worker_id.to_string(),
            role,
            key_hash: key_hash.to_string(),
        }])
    }

    /// Opens a session; trained workers may be interjected a test question.
    /// Returns the session token and the events.
    pub fn login<R: Rng + ?Sized>(
        &self,
        worker_id: &str,
        now: DateTime<Utc>,
        rng: &mut R,
    ) -> Result<(String, Vec<Event>), CollabError> {
        let w = self.active(worker_id)?;
        let question = if w.trained() {
            let pools = TestPools {
                validated: self.validated_pool.clone(),
                generated: self
                    .drafts
                    .values()
                    .filter(|e| e.status == DraftStatus::Proposed)
                    .filter_map(|e| e.draft.schema().cloned())
                    .collect(),
            };
            maybe_test_question(rng, w, &pools, &self.config.test_questions)
        } else {
            None
        };
        let token = format!("{:032x}", rng.gen::<u128>());
        let event = Event::LoggedIn { token: token.clone(), worker_id: worker_id.to_string(), at: now, question };
        Ok((token, vec![event]))
    }

    pub fn answer_test(
        &self,
        worker_id: &str,
        token: &str,
        response: &TestResponse,
    ) -> Result<(TestOutcome, Vec<Event>), CollabError> {
        self.active(worker_id)?;
        let session = self.sessions.get(token).filter(|s| s.worker_id == worker_id).ok_or(CollabError::UnknownSession)?;
        let question = session.pending_test_question.as_ref().ok_or(CollabError::NoPendingQuestion)?;
        let outcome = grade_test(question, response);
        let event = Event::TestAnswered { token: token.to_string(), worker_id: worker_id.to_string(), outcome };
        Ok((outcome, vec![event]))
    }

    pub fn begin_training(&self, worker_id: &str, seed: u64) -> Result<(TrainingSession, Vec<Event>), CollabError> {
        let w = self.active(worker_id)?;
        let session = start_training(w, self.config.training_base, &self.training_pool, seed)?;
        let status = TrainingStatus::InProgress { session: session.clone() };
        Ok((session, vec![Event::TrainingUpdated { worker_id: worker_id.to_string(), status }]))
    }

    pub fn answer_training(
        &self,
        worker_id: &str,
        index: usize,
        answer: &TrainingAnswer,
    ) -> Result<(TrainingSession, Vec<Event>), CollabError> {
        let w = self.active(worker_id)?;
        let TrainingStatus::InProgress { session } = &w.training else {
            return Err(CollabError::AnswerShape("no training session in progress"));
        };
        let session = grade_training_item(session, index, answer)?;
        let status = if session.passed {
            TrainingStatus::Completed
        } else {
            TrainingStatus::InProgress { session: session.clone() }
        };
        Ok((session, vec![Event::TrainingUpdated { worker_id: worker_id.to_string(), status }]))
    }

    pub fn add_drafts(&self, drafts: Vec<Draft>) -> Result<Vec<Event>, CollabError> {
        let mut ids = BTreeSet::new();
        for d in &drafts {
            if self.drafts.contains_key(&d.template_id) || !ids.insert(d.template_id.clone()) {
                return Err(CollabError::DuplicateDraft(d.template_id.clone()));
            }
        }
        Ok(vec![Event::DraftsAdded { drafts }])
    }

    /// Drafts this worker could be served now, best first.
    pub fn ranked_queue(&self, worker_id: &str, now: DateTime<Utc>) -> Vec<Draft> {
        let candidates: Vec<Draft> = self
            .drafts
            .values()
            .filter(|e| e.status == DraftStatus::Proposed && !e.seen_by.contains(worker_id))
            .filter(|e| self.usage(&e.draft.template_id, now) < self.config.template_cap)
            .map(|e| e.draft.clone())
            .collect();
        let bias: HashMap<TemplateId, f64> = candidates
            .iter()
            .map(|d| (d.template_id.clone(), self.bias.probability_unbiased(&draft_words(d))))
            .collect();
        rank_drafts(candidates, &self.pipeline_config(), &bias)
    }

    /// Leases the next draft. One draw decides whether a semi-template is
    /// served instead of the top complete draft.
    pub fn next_draft<R: Rng + ?Sized>(
        &self,
        worker_id: &str,
        now: DateTime<Utc>,
        rng: &mut R,
    ) -> Result<NextDraft, CollabError> {
        let w = self.active(worker_id)?;
        if !w.trained() {
            return Err(CollabError::NotTrained(worker_id.to_string()));
        }
        if self.has_pending_question(worker_id) {
            return Err(CollabError::PendingTestQuestion);
        }
        let mut events = Vec::new();
        if let Some(lease) = self.leases.get(worker_id) {
            if lease.expires_at > now {
                return Err(CollabError::OpenDraft(lease.template_id.clone()));
            }
            events.push(Event::LeaseExpired { worker_id: worker_id.to_string(), template_id: lease.template_id.clone() });
        }
        let want_semi = rng.gen::<f64>() < self.config.semi_share;
        let ranked = self.ranked_queue(worker_id, now);
        let is_semi = |d: &&Draft| d.kind() == DraftKind::SemiTemplate;
        let preferred = if want_semi { ranked.iter().find(is_semi) } else { ranked.iter().find(|d| !is_semi(d)) };
        let Some(draft) = preferred.or(ranked.first()).cloned() else {
            return Ok(NextDraft { events, draft: None });
        };
        events.push(Event::DraftLeased {
            lease: Lease {
                worker_id: worker_id.to_string(),
                template_id: draft.template_id.clone(),
                started_at: now,
                expires_at: now + Duration::minutes(self.config.lease_minutes),
            },
        });
        Ok(NextDraft { events, draft: Some(draft) })
    }

    /// Expires every lease past its deadline.
    pub fn sweep(&self, now: DateTime<Utc>) -> Vec<Event> {
        self.leases
            .values()
            .filter(|l| l.expires_at <= now)
            .map(|l| Event::LeaseExpired { worker_id: l.worker_id.clone(), template_id: l.template_id.clone() })
            .collect()
    }

    pub fn submit_qualification(
        &self,
        worker_id: &str,
        template_id: &TemplateId,
        submission: &Submission,
        now: DateTime<Utc>,
    ) -> Result<Submitted, CollabError> {
        self.active(worker_id)?;
        let entry = self.drafts.get(template_id).ok_or_else(|| CollabError::UnknownDraft(template_id.clone()))?;
        let lease = self
            .leases
            .get(worker_id)
            .filter(|l| &l.template_id == template_id)
            .ok_or_else(|| CollabError::NoLease(template_id.clone()))?;
        if lease.expires_at <= now {
            return Err(CollabError::LeaseExpired(template_id.clone()));
        }
        let answer = submission.answer;
        if submission.modified.is_some() != (answer == QualAnswer::ModifiedAccepted) {
            return Err(CollabError::AnswerShape("a modified schema is sent exactly with modified_accepted"));
        }
        if submission.selected_answers.is_some() != answer.is_accept() {
            return Err(CollabError::AnswerShape("accepting requires the correct answer for both halves"));
        }

        let schema = match (answer, &submission.modified, submission.selected_answers) {
            (QualAnswer::AcceptedAsIs, _, Some(sel)) => {
                let base = entry.draft.schema().ok_or_else(|| CollabError::NothingToAccept(template_id.clone()))?;
                Some(base.with_answers(sel))
            }
            (QualAnswer::ModifiedAccepted, Some(m), Some(sel)) => {
                let mut s = m.with_answers(sel);
                s.origin = Origin::CrowdModified;
                Some(s)
            }
            _ => None,
        };
        if let Some(s) = &schema {
            let report = validate_schema(s);
            if !report.valid {
                let events = vec![Event::SubmissionRejected {
                    worker_id: worker_id.to_string(),
                    template_id: template_id.clone(),
                }];
                return Ok(Submitted { events, outcome: SubmitOutcome::Rejected { report } });
            }
        }

        let record = QualificationRecord {
            worker_id: worker_id.to_string(),
            template_id: template_id.clone(),
            answer,
            schema,
            modified: answer == QualAnswer::ModifiedAccepted,
            selected_answers: submission.selected_answers,
            started_at: lease.started_at,
            submitted_at: now,
            round: entry.round,
        };
        let analysis = analysis_report(&record, &entry.draft, lexicon());
        let mut events = vec![Event::QualificationSubmitted { record: record.clone() }];
        if let Some(label) = submission.bias {
            events.push(Event::BiasVoted { worker_id: worker_id.to_string(), template_id: template_id.clone(), label });
        }
        Ok(Submitted { events, outcome: SubmitOutcome::Stored { record, analysis } })
    }

    /// Crowd verdicts for every proposed draft with at least three records
    /// in its current round. A scheduled run happens once per date.
    pub fn aggregate_pending(&self, now: DateTime<Utc>, date: NaiveDate, scheduled: bool) -> Vec<Event> {
        if scheduled && self.scheduled_runs.contains(&date) {
            return Vec::new();
        }
        let mut results = Vec::new();
        for (id, entry) in self.drafts.iter().filter(|(_, e)| e.status == DraftStatus::Proposed) {
            let records: Vec<QualificationRecord> = self.round_records(id).into_iter().cloned().collect();
            let answers: Vec<QualAnswer> = records.iter().map(|r| r.answer).collect();
            let Some(verdict) = crowd_verdict(&answers) else { continue };
            results.push(AggregationResult {
                id: (self.results.len() + results.len()) as u64,
                template_id: id.clone(),
                round: entry.round,
                records,
                crowd_verdict: verdict,
                supervisor_verdict: None,
                reviewed_by: None,
                run_date: date,
                aggregated_at: now,
            });
        }
        vec![Event::AggregationRun { date, scheduled, at: now, results }]
    }

    pub fn supervisor_review(
        &self,
        supervisor_id: &str,
        result_id: u64,
        verdict: SupervisorVerdict,
    ) -> Result<Vec<Event>, CollabError> {
        self.require_role(supervisor_id, &[Role::Supervisor, Role::Admin])?;
        let result = self.results.get(result_id as usize).ok_or(CollabError::UnknownResult(result_id))?;
        if result.crowd_verdict != CrowdVerdict::ProvisionalValid || result.supervisor_verdict.is_some() {
            return Err(CollabError::NotAwaitingReview(result_id));
        }
        Ok(vec![Event::Reviewed { result_id, supervisor_id: supervisor_id.to_string(), verdict }])
    }

    pub fn award_bonus(
        &self,
        admin_id: &str,
        worker_id: &str,
        amount: u64,
        now: DateTime<Utc>,
    ) -> Result<Vec<Event>, CollabError> {
        self.require_role(admin_id, &[Role::Admin])?;
        self.account(worker_id)?;
        if amount == 0 {
            return Err(CollabError::ZeroBonus);
        }
        Ok(vec![Event::BonusAwarded { worker_id: worker_id.to_string(), amount, at: now }])
    }

    pub fn post_comment(&self, worker_id: &str, text: &str, now: DateTime<Utc>) -> Result<Vec<Event>, CollabError> {
        self.active(worker_id)?;
        let text = text.trim();
        let n = text.chars().count();
        if n == 0 || n > COMMENT_MAX_CHARS {
            return Err(CollabError::CommentLength);
        }
        let comment =
            Comment { id: self.comments.len() as u64, worker_id: worker_id.to_string(), text: text.to_string(), created_at: now };
        Ok(vec![Event::CommentPosted { comment }])
    }

    pub fn demote(&self, admin_id: &str, worker_id: &str) -> Result<Vec<Event>, CollabError> {
        self.require_role(admin_id, &[Role::Admin])?;
        if self.account(worker_id)?.worker.role != Role::Supervisor {
            return Err(CollabError::NotSupervisor(worker_id.to_string()));
        }
        Ok(vec![Event::Demoted { worker_id: worker_id.to_string() }])
    }

    // -----------------------------------------------------------------------
    // Apply

    fn score(&mut self, worker_id: &str, event: ScoreEvent) {
        let Some(acc) = self.workers.get_mut(worker_id) else { return };
        acc.worker = apply_score_event(&acc.worker, event, &self.config.score);
        if !acc.demoted && !acc.worker.banned {
            acc.worker.role = promote_check(&acc.worker, &self.config.promotion);
        }
    }

    fn close_leases(&mut self, template_id: &TemplateId) {
        self.leases.retain(|_, l| &l.template_id != template_id);
    }

    fn terminal_outcome(&mut self, template_id: &TemplateId, accepted: bool) {
        if let Some(entry) = self.drafts.get(template_id) {
            self.adaptivity = record_outcome(&self.adaptivity, &entry.draft, accepted);
        }
    }

    pub fn apply(&mut self, event: &Event) {
        self.events_applied += 1;
        match event {
            Event::WorkerProvisioned { worker_id, role, key_hash } => {
                self.workers.insert(
                    worker_id.clone(),
                    WorkerAccount { worker: Worker::new(worker_id.clone(), *role), key_hash: key_hash.clone(), demoted: false },
                );
            }
            Event::TrainingUpdated { worker_id, status } => {
                if let Some(acc) = self.workers.get_mut(worker_id) {
                    acc.worker.training = status.clone();
                }
            }
            Event::LoggedIn { token, worker_id, at, question } => {
                self.sessions.insert(
                    token.clone(),
                    Session {
                        token: token.clone(),
                        worker_id: worker_id.clone(),
                        created_at: *at,
                        pending_test_question: question.clone(),
                    },
                );
            }
            Event::TestAnswered { token, worker_id, outcome } => {
                if let Some(s) = self.sessions.get_mut(token) {
                    s.pending_test_question = None;
                }
                self.tests_answered.entry(worker_id.clone()).or_default().push(*outcome);
                if let Some(e) = outcome.score_event() {
                    self.score(worker_id, e);
                }
            }
            Event::DraftsAdded { drafts } => {
                for d in drafts {
                    self.drafts.insert(
                        d.template_id.clone(),
                        DraftEntry { draft: d.clone(), status: DraftStatus::Proposed, round: 0, seen_by: BTreeSet::new() },
                    );
                }
            }
            Event::DraftLeased { lease } => {
                if let Some(e) = self.drafts.get_mut(&lease.template_id) {
                    e.seen_by.insert(lease.worker_id.clone());
                }
                self.leases.insert(lease.worker_id.clone(), lease.clone());
            }
            Event::LeaseExpired { worker_id, template_id } => {
                if self.leases.get(worker_id).is_some_and(|l| &l.template_id == template_id) {
                    self.leases.remove(worker_id);
                }
            }
            Event::QualificationSubmitted { record } => {
                self.leases.remove(&record.worker_id);
                if let Some(e) = self.drafts.get_mut(&record.template_id) {
                    e.draft.usage_count += 1;
                }
                if let Some(acc) = self.workers.get_mut(&record.worker_id) {
                    acc.worker.response_times_ms.push(record.response_ms());
                }
                if record.answer.is_accept() {
                    self.score(&record.worker_id, ScoreEvent::ValidSchema);
                }
                self.records.push(record.clone());
            }
            Event::SubmissionRejected { worker_id, .. } => self.score(worker_id, ScoreEvent::InvalidSchema),
            Event::AggregationRun { date, scheduled, results, .. } => {
                if *scheduled {
                    self.scheduled_runs.insert(*date);
                }
                for r in results {
                    self.close_leases(&r.template_id);
                    match r.crowd_verdict {
                        CrowdVerdict::ProvisionalValid => {
                            if let Some(e) = self.drafts.get_mut(&r.template_id) {
                                e.status = DraftStatus::AwaitingReview;
                            }
                        }
                        CrowdVerdict::Rejected => {
                            if let Some(e) = self.drafts.get_mut(&r.template_id) {
                                e.status = DraftStatus::Rejected;
                            }
                            self.terminal_outcome(&r.template_id, false);
                        }
                    }
                    self.results.push(r.clone());
                }
            }
            Event::Reviewed { result_id, supervisor_id, verdict } => {
                let Some(result) = self.results.get_mut(*result_id as usize) else { return };
                result.supervisor_verdict = Some(*verdict);
                result.reviewed_by = Some(supervisor_id.clone());
                let template_id = result.template_id.clone();
                let accept_voters: Vec<String> =
                    result.records.iter().filter(|r| r.answer.is_accept()).map(|r| r.worker_id.clone()).collect();
                if let Some(e) = self.drafts.get_mut(&template_id) {
                    match verdict {
                        SupervisorVerdict::ValidFinished => e.status = DraftStatus::Finished,
                        SupervisorVerdict::ValidPending => {
                            e.status = DraftStatus::Proposed;
                            e.round += 1;
                        }
                        SupervisorVerdict::Rejected => e.status = DraftStatus::Rejected,
                    }
                }
                if *verdict == SupervisorVerdict::Rejected {
                    for w in accept_voters {
                        self.score(&w, ScoreEvent::InvalidSchema);
                    }
                }
                self.terminal_outcome(&template_id, *verdict != SupervisorVerdict::Rejected);
            }
            Event::Demoted { worker_id } => {
                if let Some(acc) = self.workers.get_mut(worker_id) {
                    acc.worker.role = Role::Qualificator;
                    acc.demoted = true;
                }
            }
            Event::BonusAwarded { worker_id, amount, at } => {
                self.bonus.award(worker_id, *amount, *at);
                self.score(worker_id, ScoreEvent::Bonus { amount: *amount });
            }
            Event::CommentPosted { comment } => self.comments.push(comment.clone()),
            Event::BiasVoted { worker_id, template_id, label } => {
                let Some(entry) = self.drafts.get(template_id) else { return };
                let words = draft_words(&entry.draft);
                self.bias.vote(worker_id, template_id, &words, *label);
                let majority = self.bias.label(template_id);
                if let Some(e) = self.drafts.get_mut(template_id) {
                    e.draft.bias_label = majority;
                }
            }
        }
    }

    pub fn apply_all<'a>(&mut self, events: impl IntoIterator<Item = &'a Event>) {
        for e in events {
            self.apply(e);
        }
    }

    // -----------------------------------------------------------------------
    // Read models

    pub fn worker_stats(&self, worker_id: &str) -> Result<WorkerStats, CollabError> {
        let worker = self.account(worker_id)?.worker.clone();
        let history: Vec<_> = self
            .records
            .iter()
            .filter(|r| r.worker_id == worker_id)
            .filter_map(|r| r.schema.as_ref())
            .filter_map(|s| hardness(s, &self.config.hardness, lexicon()).ok())
            .collect();
        Ok(WorkerStats {
            mean_response_ms: worker.mean_response_ms(),
            hardness_prompt: hardness_prompt(&history).map(str::to_string),
            open_lease: self.leases.get(worker_id).cloned(),
            pending_test_question: self.has_pending_question(worker_id),
            worker,
        })
    }

    /// Structural invariant violations; empty when the state is consistent.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (w, l) in &self.leases {
            if w != &l.worker_id {
                out.push(format!("lease of {} filed under {w}", l.worker_id));
            }
            match self.drafts.get(&l.template_id) {
                Some(e) if e.status == DraftStatus::Proposed => {}
                _ => out.push(format!("lease of {w} on closed draft {}", l.template_id)),
            }
        }
        for (id, e) in &self.drafts {
            if e.draft.usage_count > self.config.template_cap {
                out.push(format!("draft {id} used {} times", e.draft.usage_count));
            }
            let n = self.records.iter().filter(|r| &r.template_id == id).count() as u32;
            if n != e.draft.usage_count {
                out.push(format!("draft {id} usage {} but {n} records", e.draft.usage_count));
            }
        }
        for r in &self.results {
            let answers: Vec<QualAnswer> = r.records.iter().map(|x| x.answer).collect();
            if crowd_verdict(&answers) != Some(r.crowd_verdict) {
                out.push(format!("result {} has an inconsistent crowd verdict", r.id));
            }
        }
        if self.bonus.total_awarded != self.bonus.per_worker.values().sum::<u64>() {
            out.push("bonus total differs from per-worker sum".into());
        }
        for (f, c) in &self.adaptivity.factors {
            if c.accepted > c.offered {
                out.push(format!("factor {f:?} accepted {} > offered {}", c.accepted, c.offered));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerStats {
    pub worker: Worker,
    pub mean_response_ms: Option<f64>,
    pub hardness_prompt: Option<String>,
    pub open_lease: Option<Lease>,
    pub pending_test_question: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerAnalytics {
    pub worker_id: String,
    pub role: Role,
    pub score: i64,
    pub records: usize,
    pub accepted: usize,
    pub sessions: usize,
    pub schemas_per_session: f64,
    pub mean_response_ms: Option<f64>,
    /// Grammar flags raised across the worker's accepted schemas.
    pub grammar_flags: usize,
}

/// Correctness and engagement per worker, for the supervisor dashboard.
pub fn supervisor_analytics(p: &Platform) -> Vec<WorkerAnalytics> {
    p.workers
        .values()
        .map(|acc| {
            let id = &acc.worker.id;
            let records: Vec<&QualificationRecord> = p.records.iter().filter(|r| &r.worker_id == id).collect();
            let accepted = records.iter().filter(|r| r.answer.is_accept()).count();
            let sessions = p.sessions.values().filter(|s| &s.worker_id == id).count();
            let flags = records
                .iter()
                .filter_map(|r| r.schema.as_ref())
                .flat_map(|s| s.halves().map(|h| grammar_flags(h.sentence.tokens()).len()))
                .sum();
            WorkerAnalytics {
                worker_id: id.clone(),
                role: acc.worker.role,
                score: acc.worker.score,
                records: records.len(),
                accepted,
                sessions,
                schemas_per_session: if sessions == 0 { 0.0 } else { accepted as f64 / sessions as f64 },
                mean_response_ms: acc.worker.mean_response_ms(),
                grammar_flags: flags,
            }
        })
        .collect()
}
