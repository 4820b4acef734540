//! Scripted crowd driven through the API: provisioning, training, daily
//! logins with test questions, qualification, weekend aggregation and
//! supervisor review. Invariants are checked after every request.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use winofusion_core::collab::{QualAnswer, Submission, SubmitOutcome, SupervisorVerdict};
use winofusion_core::pipeline::{BiasLabel, Draft};
use winofusion_core::quality::{Role, TestExpected, TestResponse, TrainingAnswer, TrainingItem, TrainingStatus};
use winofusion_core::schema::{encode_schema, Sentence};

use crate::app::*;
use crate::config::Config;
use crate::store;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub qualificators: usize,
    pub supervisors: usize,
    pub days: i64,
    pub tasks_per_day: usize,
    pub seed: u64,
    /// Persist to this directory; `None` keeps state in memory.
    pub store_dir: Option<PathBuf>,
    pub snapshot_every: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            qualificators: 9,
            supervisors: 2,
            days: 7,
            tasks_per_day: 8,
            seed: 7,
            store_dir: None,
            snapshot_every: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimReport {
    pub valid_finished: usize,
    pub finished_schemas: usize,
    pub served: usize,
    pub submissions: usize,
    pub rejected_submissions: usize,
    pub test_questions: usize,
    pub aggregation_runs: usize,
    pub reviews: usize,
    pub expired_leases: usize,
    pub events: u64,
    pub violations: Vec<String>,
    /// File name → content of the export files.
    pub exports: BTreeMap<String, String>,
    pub mean_response_ms: BTreeMap<String, f64>,
    /// Whether replaying the persisted log reproduced the live state.
    pub restore_equal: Option<bool>,
}

/// First simulated day, a Monday.
pub fn start_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 4, 8, 0, 0).unwrap()
}

struct Crowd {
    app: App,
    rng: ChaCha8Rng,
    report: SimReport,
    admin: String,
}

impl Crowd {
    fn check(&mut self, context: &str) {
        for v in self.app.platform().check_invariants() {
            self.report.violations.push(format!("{context}: {v}"));
        }
    }

    fn login(&mut self, id: &str, now: DateTime<Utc>) -> Result<String, ApiError> {
        let r = self.app.login(&LoginRequest { worker_id: id.into(), key: key_for(id) }, now)?;
        if let Some(view) = r.test_question {
            self.report.test_questions += 1;
            // The scripted worker knows the answer the way an attentive human would.
            let session = self.app.platform().session(&r.token).expect("session exists");
            let q = session.pending_test_question.as_ref().expect("question pending");
            let response = match q.expected {
                TestExpected::Answers { answers } => TestResponse::Answers { answers },
                TestExpected::Approval => TestResponse::Approval { approve: true },
            };
            self.app.answer_test(&r.token, &view.id, &response, now)?;
        }
        self.check("login");
        Ok(r.token)
    }

    fn train(&mut self, token: &str, id: &str, now: DateTime<Utc>) -> Result<(), ApiError> {
        let view = self.app.training_start(token, now)?;
        for index in 0..view.items.len() {
            let w = self.app.platform().worker(id).expect("worker exists");
            let TrainingStatus::InProgress { session } = &w.training else { break };
            let answer = match &session.items[index] {
                TrainingItem::Resolve { schema } => TrainingAnswer::Resolve {
                    answers: [schema.first.correct_answer, schema.second.correct_answer],
                },
                TrainingItem::Validate { defects, .. } => TrainingAnswer::Validate { defects: defects.clone() },
            };
            self.app.training_answer(token, &TrainingAnswerRequest { index, answer }, now)?;
        }
        Ok(())
    }

    /// One queue request and its submission. Returns false on an empty queue.
    fn work(&mut self, worker: &str, token: &str, now: DateTime<Utc>, abandon: bool) -> Result<bool, ApiError> {
        let finished = self.app.platform().finished_templates();
        let stale = self.app.platform().leases.get(worker).is_some_and(|l| l.expires_at <= now);
        let q = match self.app.queue_next(token, now) {
            Ok(q) => q,
            Err(e) if e.error == "open_draft" => return Ok(true),
            Err(e) => return Err(e),
        };
        self.report.expired_leases += usize::from(stale);
        let Some(draft) = q.draft else { return Ok(false) };
        self.report.served += 1;
        if finished.contains(&draft.template_id) {
            self.report.violations.push(format!("finished template {} served again", draft.template_id));
        }
        self.check("queue");
        if abandon {
            return Ok(true);
        }
        let took = Duration::seconds(self.rng.gen_range(60..360));
        let submission = self.decide(&draft);
        match self.app.submit(token, &draft.template_id, &submission, now + took) {
            Ok(SubmitOutcome::Stored { .. }) => self.report.submissions += 1,
            Ok(SubmitOutcome::Rejected { .. }) => unreachable!("rejections are returned as errors"),
            Err(e) if e.error == "invalid_schema" => {
                self.report.rejected_submissions += 1;
                let parity = e.details.as_ref().is_some_and(|d| d.to_string().contains("HALVES_NOT_PARITY"));
                if !parity {
                    self.report.violations.push(format!("unexpected rejection report: {:?}", e.details));
                }
                let retry = Submission { answer: QualAnswer::RejectedUnfixable, modified: None, selected_answers: None, bias: None };
                self.app.submit(token, &draft.template_id, &retry, now + took)?;
                self.report.submissions += 1;
            }
            Err(e) => return Err(e),
        }
        self.check(&format!("submit by {worker}"));
        Ok(true)
    }

    fn decide(&mut self, draft: &Draft) -> Submission {
        let reject = |answer| Submission { answer, modified: None, selected_answers: None, bias: None };
        let Some(schema) = draft.schema() else { return reject(QualAnswer::RejectedUnfixable) };
        let roll: f64 = self.rng.gen();
        let bias = match self.rng.gen::<f64>() {
            x if x < 0.1 => Some(BiasLabel::Biased),
            x if x < 0.6 => Some(BiasLabel::Unbiased),
            _ => None,
        };
        let answers = [schema.first.correct_answer, schema.second.correct_answer];
        if roll < 0.05 {
            // A careless edit that breaks parity between the halves.
            let mut broken = schema.clone();
            broken.second.sentence = Sentence::parse(&format!("{} Indeed.", schema.second.sentence.text()));
            return Submission { answer: QualAnswer::ModifiedAccepted, modified: Some(broken), selected_answers: Some(answers), bias };
        }
        if roll < 0.15 {
            return reject(QualAnswer::RejectedSubject);
        }
        Submission { answer: QualAnswer::AcceptedAsIs, modified: None, selected_answers: Some(answers), bias }
    }

    fn tick(&mut self, now: DateTime<Utc>) -> Result<(), ApiError> {
        let before = self.app.platform().leases.len();
        let jobs = self.app.scheduler_tick(now)?;
        self.report.expired_leases += before - self.app.platform().leases.len().min(before);
        self.report.aggregation_runs += jobs.len();
        self.check("scheduler");
        Ok(())
    }

    fn review_all(&mut self, token: &str, now: DateTime<Utc>) -> Result<(), ApiError> {
        for r in self.app.pending_reviews(token)? {
            let verdict = if r.id % 5 == 4 { SupervisorVerdict::ValidPending } else { SupervisorVerdict::ValidFinished };
            self.app.review(token, r.id, &ReviewRequest { verdict }, now)?;
            self.report.reviews += 1;
            self.check("review");
        }
        Ok(())
    }
}

pub fn key_for(id: &str) -> String {
    format!("key-{id}")
}

pub fn app_config(cfg: &SimConfig) -> Config {
    let mut c = Config { rng_seed: cfg.seed, snapshot_every: cfg.snapshot_every, ..Config::default() };
    if let Some(d) = &cfg.store_dir {
        c.store_dir = d.clone();
    }
    c
}

pub fn run(cfg: &SimConfig) -> Result<(App, SimReport), ApiError> {
    let t0 = start_time();
    let config = app_config(cfg);
    let app = match &cfg.store_dir {
        Some(_) => App::open(config.clone(), t0).map_err(|e| ApiError::new(500, "io", e.to_string()))?.0,
        None => App::in_memory(config.clone(), t0)?,
    };
    let mut crowd = Crowd { app, rng: ChaCha8Rng::seed_from_u64(cfg.seed), report: SimReport::default(), admin: "admin".into() };

    let admin = crowd.admin.clone();
    crowd.app.provision(&admin, Role::Admin, &key_for(&admin), t0)?;
    let quals: Vec<String> = (1..=cfg.qualificators).map(|i| format!("q{i}")).collect();
    let sups: Vec<String> = (1..=cfg.supervisors).map(|i| format!("s{i}")).collect();
    for id in &quals {
        crowd.app.provision(id, Role::Qualificator, &key_for(id), t0)?;
    }
    for id in &sups {
        crowd.app.provision(id, Role::Supervisor, &key_for(id), t0)?;
    }
    for id in &quals {
        let token = crowd.login(id, t0)?;
        crowd.train(&token, id, t0)?;
    }
    crowd.check("training");

    for day in 0..cfg.days {
        let morning = t0 + Duration::days(day) + Duration::hours(1);
        crowd.tick(morning)?;
        let tokens: Vec<(String, String)> = quals
            .iter()
            .map(|id| crowd.login(id, morning).map(|t| (id.clone(), t)))
            .collect::<Result<_, _>>()?;
        let mut now = morning;
        for task in 0..cfg.tasks_per_day {
            for (i, (id, token)) in tokens.iter().enumerate() {
                now += Duration::minutes(1);
                // One abandoned draft per day exercises lease expiry.
                let abandon = task == 0 && i == day as usize % tokens.len();
                crowd.work(id, token, now, abandon)?;
            }
            now += Duration::minutes(6);
            crowd.tick(now)?;
        }
        let evening = t0 + Duration::days(day) + Duration::hours(10);
        crowd.tick(evening)?;
        for id in &sups {
            let token = crowd.login(id, evening)?;
            crowd.review_all(&token, evening)?;
        }
        if day == 6 {
            let token = crowd.login(&admin, evening)?;
            for (id, amount) in quals.iter().take(2).zip([5, 7]) {
                crowd.app.admin_bonus(&token, &BonusRequest { worker_id: id.clone(), amount }, evening)?;
            }
            let q1 = crowd.login(&quals[0], evening)?;
            crowd.app.post_comment(&q1, &CommentRequest { text: "Nice week, thanks everyone.".into() }, evening)?;
            crowd.check("admin");
        }
    }

    let p = crowd.app.platform();
    crowd.report.valid_finished = p.finished_templates().len();
    let by_date = p.finished_schemas();
    crowd.report.finished_schemas = by_date.values().map(Vec::len).sum();
    crowd.report.exports = by_date
        .iter()
        .map(|(d, ss)| (format!("schemas-{d}.jsonl"), ss.iter().map(|s| encode_schema(s) + "\n").collect()))
        .collect();
    crowd.report.mean_response_ms = p
        .workers
        .values()
        .filter_map(|a| a.worker.mean_response_ms().map(|m| (a.worker.id.clone(), m)))
        .collect();
    crowd.report.events = p.events_applied;
    if let Some(dir) = &cfg.store_dir {
        let log = std::fs::read_to_string(dir.join(store::LOG_FILE)).unwrap_or_default();
        let replayed = store::restore(&log, None, &config.platform);
        crowd.report.restore_equal = Some(replayed.halt.is_none() && &replayed.platform == p);
    }
    Ok((crowd.app, crowd.report))
}
