//! Transport-free API. Every endpoint is a method taking the request body
//! and the current time; the HTTP layer only adds routing and JSON.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use winofusion_core::adaptivity::AdaptivityState;
use winofusion_core::collab::{
    banner_state, supervisor_analytics, AggregationResult, BannerState, CollabError, Comment, Event, Lease, Platform,
    SubmitOutcome, Submission, SupervisorVerdict, WorkerAnalytics, WorkerStats,
};
use winofusion_core::pipeline::{
    build_drafts, ingest_corpus, Draft, DroppedLine, PipelineConfig, RuleAnnotator, TemplateId, BUNDLED_CORPUS,
};
use winofusion_core::quality::{
    Role, TestOutcome, TestQuestion, TestResponse, TrainingAnswer, TrainingItem, TrainingSession,
};
use winofusion_core::schema::{encode_schema, Schema, SchemaHalf};
use winofusion_core::text::{Lexicon, Span};

use crate::config::Config;
use crate::store::{EventRecord, EventStore, Restored};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: u16, error: &str, message: impl Into<String>) -> Self {
        ApiError { status, error: error.into(), message: message.into(), details: None }
    }

    fn unauthenticated() -> Self {
        ApiError::new(401, "unauthenticated", "missing or unknown session token")
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        ApiError::new(500, "internal", e.to_string())
    }
}

impl From<CollabError> for ApiError {
    fn from(e: CollabError) -> Self {
        use CollabError::*;
        let (status, code) = match &e {
            UnknownWorker(_) => (404, "unknown_worker"),
            DuplicateWorker(_) => (409, "duplicate_worker"),
            Banned(_) => (403, "banned"),
            NotTrained(_) => (403, "training_required"),
            Unauthorized(_) => (403, "forbidden"),
            OpenDraft(_) => (409, "open_draft"),
            PendingTestQuestion => (409, "pending_test_question"),
            NoLease(_) => (409, "no_lease"),
            LeaseExpired(_) => (410, "lease_expired"),
            UnknownDraft(_) => (404, "unknown_draft"),
            DuplicateDraft(_) => (409, "duplicate_draft"),
            NothingToAccept(_) => (422, "nothing_to_accept"),
            AnswerShape(_) => (422, "malformed_submission"),
            UnknownSession => (401, "unauthenticated"),
            NoPendingQuestion => (409, "no_pending_question"),
            UnknownResult(_) => (404, "unknown_result"),
            NotAwaitingReview(_) => (409, "not_awaiting_review"),
            NotSupervisor(_) => (409, "not_supervisor"),
            CommentLength => (422, "comment_length"),
            ZeroBonus => (422, "zero_bonus"),
            Quality(_) => (422, "training"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

pub fn hash_key(key: &str) -> String {
    hex::encode(Sha256::digest(key.as_bytes()))
}

// ---------------------------------------------------------------------------
// Request and response bodies

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoginRequest {
    pub worker_id: String,
    pub key: String,
}

/// A schema half without its answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfView {
    pub sentence: String,
    pub question: String,
    pub target_a: String,
    pub target_b: String,
    pub pronoun: Span,
    pub special_word: Span,
}

impl From<&SchemaHalf> for HalfView {
    fn from(h: &SchemaHalf) -> Self {
        HalfView {
            sentence: h.sentence.text().to_string(),
            question: h.question.clone(),
            target_a: h.target_a.clone(),
            target_b: h.target_b.clone(),
            pronoun: h.pronoun,
            special_word: h.special_word,
        }
    }
}

fn halves_view(s: &Schema) -> [HalfView; 2] {
    [HalfView::from(&s.first), HalfView::from(&s.second)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Answers,
    Approval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestQuestionView {
    pub id: String,
    pub halves: [HalfView; 2],
    pub response: ResponseKind,
}

impl TestQuestionView {
    fn new(token: &str, q: &TestQuestion) -> Self {
        let response = match q.expected {
            winofusion_core::quality::TestExpected::Answers { .. } => ResponseKind::Answers,
            winofusion_core::quality::TestExpected::Approval => ResponseKind::Approval,
        };
        TestQuestionView { id: test_question_id(token), halves: halves_view(&q.schema), response }
    }
}

/// Test questions are addressed by an id derived from the session token.
pub fn test_question_id(token: &str) -> String {
    format!("test-{}", &token[..12.min(token.len())])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub worker_id: String,
    pub role: Role,
    pub training_required: bool,
    pub test_question: Option<TestQuestionView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueResponse {
    pub empty: bool,
    pub draft: Option<Draft>,
    pub lease: Option<Lease>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestAnswerResponse {
    pub outcome: TestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRequest {
    pub verdict: SupervisorVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRequest {
    #[serde(default)]
    pub date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusRequest {
    pub worker_id: String,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRequest {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusResponse {
    pub added: Vec<TemplateId>,
    pub dropped: Vec<DroppedLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisionRequest {
    pub worker_id: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisionResponse {
    pub worker_id: String,
    pub role: Role,
    /// Shown once; only its hash is stored.
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoteRequest {
    pub worker_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityView {
    pub state: AdaptivityState,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainingItemView {
    Resolve { halves: [HalfView; 2] },
    Validate { halves: [HalfView; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingView {
    pub required_items: usize,
    pub completed_items: usize,
    pub graded: Vec<Option<bool>>,
    pub passed: bool,
    pub failed: bool,
    pub items: Vec<TrainingItemView>,
}

impl From<&TrainingSession> for TrainingView {
    fn from(s: &TrainingSession) -> Self {
        TrainingView {
            required_items: s.required_items,
            completed_items: s.completed_items,
            graded: s.graded.clone(),
            passed: s.passed,
            failed: s.failed,
            items: s
                .items
                .iter()
                .map(|i| match i {
                    TrainingItem::Resolve { schema } => TrainingItemView::Resolve { halves: halves_view(schema) },
                    TrainingItem::Validate { schema, .. } => TrainingItemView::Validate { halves: halves_view(schema) },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingAnswerRequest {
    pub index: usize,
    pub answer: TrainingAnswer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "job", rename_all = "snake_case")]
pub enum Job {
    Aggregation { date: NaiveDate, results: usize },
}

// ---------------------------------------------------------------------------

pub struct App {
    platform: Platform,
    config: Config,
    store: Option<EventStore>,
}

impl App {
    /// State held in memory only.
    pub fn in_memory(config: Config, now: DateTime<Utc>) -> ApiResult<App> {
        let platform = Platform::new(config.platform.clone());
        let mut app = App { platform, config, store: None };
        app.bootstrap(now)?;
        Ok(app)
    }

    /// State restored from and persisted to the configured store directory.
    pub fn open(config: Config, now: DateTime<Utc>) -> io::Result<(App, Restored)> {
        let (store, restored) = EventStore::open(&config.store_dir, config.snapshot_every, &config.platform)?;
        let mut app = App { platform: restored.platform.clone(), config, store: Some(store) };
        app.bootstrap(now).map_err(|e| io::Error::other(e.message))?;
        Ok((app, restored))
    }

    fn bootstrap(&mut self, now: DateTime<Utc>) -> ApiResult<()> {
        if self.config.bootstrap_corpus && self.platform.drafts.is_empty() {
            let added = self.load_corpus("bundled", BUNDLED_CORPUS.as_bytes(), now)?;
            info!("loaded {} drafts from the bundled corpus", added.added.len());
        }
        Ok(())
    }

    pub fn platform(&self) -> &Platform {
        &self.platform
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Request randomness: the configured seed on a stream chosen by the
    /// number of applied events, so restarts stay deterministic.
    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        rng.set_stream(self.platform.events_applied);
        rng
    }

    fn commit(&mut self, events: Vec<Event>, now: DateTime<Utc>) -> ApiResult<()> {
        for event in events {
            let seq = self.platform.events_applied + 1;
            if let Some(store) = &mut self.store {
                store.append(&EventRecord { seq, ts: now, event: event.clone() }).map_err(ApiError::internal)?;
            }
            self.platform.apply(&event);
            if let Some(store) = &self.store {
                if store.snapshot_due(seq) {
                    store.write_snapshot(seq, &self.platform).map_err(ApiError::internal)?;
                }
            }
        }
        Ok(())
    }

    fn auth(&self, token: &str) -> ApiResult<String> {
        let session = self.platform.session(token).ok_or_else(ApiError::unauthenticated)?;
        let w = self.platform.worker(&session.worker_id).ok_or_else(ApiError::unauthenticated)?;
        if w.banned {
            return Err(CollabError::Banned(w.id.clone()).into());
        }
        Ok(session.worker_id.clone())
    }

    fn auth_role(&self, token: &str, roles: &[Role]) -> ApiResult<String> {
        let id = self.auth(token)?;
        let role = self.platform.worker(&id).map(|w| w.role);
        if !role.is_some_and(|r| roles.contains(&r)) {
            return Err(CollabError::Unauthorized(roles[0]).into());
        }
        Ok(id)
    }

    // -----------------------------------------------------------------------
    // Accounts and sessions

    /// Creates an account with a known key; used by the CLI and the admin endpoint.
    pub fn provision(&mut self, worker_id: &str, role: Role, key: &str, now: DateTime<Utc>) -> ApiResult<()> {
        let events = self.platform.provision(worker_id, role, &hash_key(key))?;
        self.commit(events, now)
    }

    pub fn admin_provision(&mut self, token: &str, req: &ProvisionRequest, now: DateTime<Utc>) -> ApiResult<ProvisionResponse> {
        self.auth_role(token, &[Role::Admin])?;
        let key = format!("{:032x}", self.rng().gen::<u128>());
        self.provision(&req.worker_id, req.role, &key, now)?;
        Ok(ProvisionResponse { worker_id: req.worker_id.clone(), role: req.role, key })
    }

    pub fn login(&mut self, req: &LoginRequest, now: DateTime<Utc>) -> ApiResult<LoginResponse> {
        let Some(acc) = self.platform.workers.get(&req.worker_id) else {
            return Err(CollabError::UnknownWorker(req.worker_id.clone()).into());
        };
        if acc.key_hash != hash_key(&req.key) {
            return Err(ApiError::new(401, "bad_credentials", "wrong worker id or key"));
        }
        let (token, events) = self.platform.login(&req.worker_id, now, &mut self.rng())?;
        self.commit(events, now)?;
        let session = self.platform.session(&token).expect("session just created");
        let w = self.platform.worker(&req.worker_id).expect("worker exists");
        Ok(LoginResponse {
            token: token.clone(),
            worker_id: w.id.clone(),
            role: w.role,
            training_required: !w.trained(),
            test_question: session.pending_test_question.as_ref().map(|q| TestQuestionView::new(&token, q)),
        })
    }

    pub fn answer_test(
        &mut self,
        token: &str,
        question_id: &str,
        response: &TestResponse,
        now: DateTime<Utc>,
    ) -> ApiResult<TestAnswerResponse> {
        let worker = self.auth(token)?;
        if question_id != test_question_id(token) {
            return Err(ApiError::new(404, "unknown_test_question", format!("no test question {question_id} in this session")));
        }
        let (outcome, events) = self.platform.answer_test(&worker, token, response)?;
        self.commit(events, now)?;
        Ok(TestAnswerResponse { outcome })
    }

    pub fn training_start(&mut self, token: &str, now: DateTime<Utc>) -> ApiResult<TrainingView> {
        let worker = self.auth(token)?;
        let seed = self.rng().gen::<u64>();
        let (session, events) = self.platform.begin_training(&worker, seed)?;
        self.commit(events, now)?;
        Ok(TrainingView::from(&session))
    }

    pub fn training_answer(&mut self, token: &str, req: &TrainingAnswerRequest, now: DateTime<Utc>) -> ApiResult<TrainingView> {
        let worker = self.auth(token)?;
        let (session, events) = self.platform.answer_training(&worker, req.index, &req.answer)?;
        self.commit(events, now)?;
        Ok(TrainingView::from(&session))
    }

    // -----------------------------------------------------------------------
    // Queue and qualification

    pub fn queue_next(&mut self, token: &str, now: DateTime<Utc>) -> ApiResult<QueueResponse> {
        let worker = self.auth(token)?;
        let next = self.platform.next_draft(&worker, now, &mut self.rng())?;
        self.commit(next.events, now)?;
        let lease = self.platform.leases.get(&worker).cloned();
        Ok(QueueResponse { empty: next.draft.is_none(), draft: next.draft, lease })
    }

    /// Stores a qualification. A schema that fails validation is answered
    /// with 422 and its report; the penalty is still recorded.
    pub fn submit(
        &mut self,
        token: &str,
        template_id: &TemplateId,
        submission: &Submission,
        now: DateTime<Utc>,
    ) -> ApiResult<SubmitOutcome> {
        let worker = self.auth(token)?;
        let submitted = self.platform.submit_qualification(&worker, template_id, submission, now)?;
        self.commit(submitted.events, now)?;
        match submitted.outcome {
            SubmitOutcome::Rejected { report } => {
                let mut e = ApiError::new(422, "invalid_schema", "the schema does not pass validation");
                e.details = Some(serde_json::to_value(&report).map_err(ApiError::internal)?);
                Err(e)
            }
            stored => Ok(stored),
        }
    }

    // -----------------------------------------------------------------------
    // Supervisors

    pub fn pending_reviews(&self, token: &str) -> ApiResult<Vec<AggregationResult>> {
        self.auth_role(token, &[Role::Supervisor, Role::Admin])?;
        Ok(self.platform.pending_reviews().into_iter().cloned().collect())
    }

    pub fn review(&mut self, token: &str, result_id: u64, req: &ReviewRequest, now: DateTime<Utc>) -> ApiResult<AggregationResult> {
        let worker = self.auth(token)?;
        let events = self.platform.supervisor_review(&worker, result_id, req.verdict)?;
        self.commit(events, now)?;
        Ok(self.platform.results[result_id as usize].clone())
    }

    pub fn analytics(&self, token: &str) -> ApiResult<Vec<WorkerAnalytics>> {
        self.auth_role(token, &[Role::Supervisor, Role::Admin])?;
        Ok(supervisor_analytics(&self.platform))
    }

    // -----------------------------------------------------------------------
    // Banners and stats

    pub fn banners(&self, token: &str) -> ApiResult<BannerState> {
        self.auth(token)?;
        Ok(banner_state(&self.platform.bonus, &self.platform.comments))
    }

    pub fn post_comment(&mut self, token: &str, req: &CommentRequest, now: DateTime<Utc>) -> ApiResult<Comment> {
        let worker = self.auth(token)?;
        let events = self.platform.post_comment(&worker, &req.text, now)?;
        self.commit(events, now)?;
        Ok(self.platform.comments.last().cloned().expect("comment just posted"))
    }

    pub fn my_stats(&self, token: &str) -> ApiResult<WorkerStats> {
        let worker = self.auth(token)?;
        Ok(self.platform.worker_stats(&worker)?)
    }

    // -----------------------------------------------------------------------
    // Admin

    pub fn admin_adaptivity(&self, token: &str) -> ApiResult<AdaptivityView> {
        self.auth_role(token, &[Role::Admin])?;
        Ok(self.adaptivity())
    }

    pub fn adaptivity(&self) -> AdaptivityView {
        AdaptivityView { state: self.platform.adaptivity.clone(), config: self.platform.pipeline_config() }
    }

    pub fn admin_aggregate(&mut self, token: &str, req: &AggregateRequest, now: DateTime<Utc>) -> ApiResult<Vec<AggregationResult>> {
        self.auth_role(token, &[Role::Admin])?;
        self.aggregate(req.date.unwrap_or(now.date_naive()), false, now)
    }

    fn aggregate(&mut self, date: NaiveDate, scheduled: bool, now: DateTime<Utc>) -> ApiResult<Vec<AggregationResult>> {
        let events = self.platform.aggregate_pending(now, date, scheduled);
        let results = match events.first() {
            Some(Event::AggregationRun { results, .. }) => results.clone(),
            _ => Vec::new(),
        };
        self.commit(events, now)?;
        Ok(results)
    }

    pub fn admin_bonus(&mut self, token: &str, req: &BonusRequest, now: DateTime<Utc>) -> ApiResult<BannerState> {
        let admin = self.auth_role(token, &[Role::Admin])?;
        let events = self.platform.award_bonus(&admin, &req.worker_id, req.amount, now)?;
        self.commit(events, now)?;
        Ok(banner_state(&self.platform.bonus, &self.platform.comments))
    }

    pub fn admin_demote(&mut self, token: &str, req: &DemoteRequest, now: DateTime<Utc>) -> ApiResult<()> {
        let admin = self.auth_role(token, &[Role::Admin])?;
        let events = self.platform.demote(&admin, &req.worker_id)?;
        self.commit(events, now)
    }

    pub fn admin_corpus(&mut self, token: &str, req: &CorpusRequest, now: DateTime<Utc>) -> ApiResult<CorpusResponse> {
        self.auth_role(token, &[Role::Admin])?;
        self.load_corpus(&req.name, req.text.as_bytes(), now)
    }

    /// Generates drafts with the adapted pipeline configuration.
    pub fn load_corpus(&mut self, name: &str, bytes: &[u8], now: DateTime<Utc>) -> ApiResult<CorpusResponse> {
        let cfg = self.platform.pipeline_config();
        let report = generate(bytes, name, &cfg, self.platform.next_template_seq());
        let added = report.drafts.iter().map(|d| d.template_id.clone()).collect();
        let events = self.platform.add_drafts(report.drafts)?;
        self.commit(events, now)?;
        Ok(CorpusResponse { added, dropped: report.dropped })
    }

    // -----------------------------------------------------------------------
    // Scheduling and export

    /// One clock tick: expires stale leases and runs the aggregation on
    /// configured days, at most once per date.
    pub fn scheduler_tick(&mut self, now: DateTime<Utc>) -> ApiResult<Vec<Job>> {
        let expired = self.platform.sweep(now);
        self.commit(expired, now)?;
        let date = now.date_naive();
        if !self.config.aggregation_days.contains(&now.weekday()) || self.platform.scheduled_runs.contains(&date) {
            return Ok(Vec::new());
        }
        let results = self.aggregate(date, true, now)?;
        Ok(vec![Job::Aggregation { date, results: results.len() }])
    }

    pub fn export(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        export_schemas(&self.platform.finished_schemas(), dir)
    }
}

pub struct Generated {
    pub drafts: Vec<Draft>,
    pub dropped: Vec<DroppedLine>,
}

/// Ingests a corpus and builds ranked drafts. Ids start at `first_seq`.
pub fn generate(bytes: &[u8], name: &str, cfg: &PipelineConfig, first_seq: u64) -> Generated {
    let lexicon = Lexicon::bundled();
    let mut annotator = RuleAnnotator::new(lexicon);
    let report = ingest_corpus(bytes, name, cfg.sentence_length_max, &mut annotator);
    let drafts = build_drafts(&report.sentences, cfg, lexicon, first_seq);
    Generated { drafts, dropped: report.dropped }
}

/// One `schemas-<date>.jsonl` per aggregation run date.
pub fn export_schemas(by_date: &BTreeMap<NaiveDate, Vec<Schema>>, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (date, schemas) in by_date {
        let path = dir.join(format!("schemas-{date}.jsonl"));
        let body: String = schemas.iter().map(|s| encode_schema(s) + "\n").collect();
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
