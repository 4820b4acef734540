//! Crowd workflow: draft queue with leases, two-stage qualification,
//! aggregation and supervisor verdicts, promotion, banners, schema analysis
//! and the bias model that orders suggestions.

mod analysis;
mod bias;
mod platform;

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::pipeline::TemplateId;
use crate::quality::{Role, Worker};
use crate::schema::{Answer, Schema};

pub use analysis::{analysis_report, grammar_flags, type_token_ratio, GrammarFlag, SchemaAnalysis, TTR_NUDGE_BELOW};
pub use bias::BiasModel;
pub use platform::{
    supervisor_analytics, CollabError, DraftEntry, DraftStatus, Event, Lease, NextDraft, Platform, PlatformConfig,
    Session, SubmitOutcome, Submission, Submitted, WorkerAccount, WorkerAnalytics, WorkerStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualAnswer {
    /// Stage 1: valid without changes.
    AcceptedAsIs,
    /// Stage 1: modified into a valid schema.
    ModifiedAccepted,
    /// Stage 2: cannot be made valid.
    RejectedUnfixable,
    /// Stage 2: subject is objectionable.
    RejectedSubject,
}

impl QualAnswer {
    pub const ALL: [QualAnswer; 4] = [
        QualAnswer::AcceptedAsIs,
        QualAnswer::ModifiedAccepted,
        QualAnswer::RejectedUnfixable,
        QualAnswer::RejectedSubject,
    ];

    pub fn is_accept(self) -> bool {
        matches!(self, QualAnswer::AcceptedAsIs | QualAnswer::ModifiedAccepted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualificationRecord {
    pub worker_id: String,
    pub template_id: TemplateId,
    pub answer: QualAnswer,
    /// The accepted schema with the worker's answers; absent for rejections.
    pub schema: Option<Schema>,
    pub modified: bool,
    pub selected_answers: Option<[Answer; 2]>,
    pub started_at: DateTime<Utc>,
    pub submitted_at: DateTime<Utc>,
    /// Review round of the template this record belongs to.
    pub round: u32,
}

impl QualificationRecord {
    pub fn response_ms(&self) -> u64 {
        (self.submitted_at - self.started_at).num_milliseconds().max(0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrowdVerdict {
    ProvisionalValid,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupervisorVerdict {
    ValidFinished,
    ValidPending,
    Rejected,
}

pub const MIN_RECORDS: usize = 3;

/// Strict majority of accept-type answers; `None` below three answers.
pub fn crowd_verdict(answers: &[QualAnswer]) -> Option<CrowdVerdict> {
    if answers.len() < MIN_RECORDS {
        return None;
    }
    let accepts = answers.iter().filter(|a| a.is_accept()).count();
    Some(if 2 * accepts > answers.len() { CrowdVerdict::ProvisionalValid } else { CrowdVerdict::Rejected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub id: u64,
    pub template_id: TemplateId,
    pub round: u32,
    pub records: Vec<QualificationRecord>,
    pub crowd_verdict: CrowdVerdict,
    pub supervisor_verdict: Option<SupervisorVerdict>,
    pub reviewed_by: Option<String>,
    pub run_date: NaiveDate,
    pub aggregated_at: DateTime<Utc>,
}

impl AggregationResult {
    /// Distinct accepted schemas, in record order.
    pub fn accepted_schemas(&self) -> Vec<&Schema> {
        let mut out: Vec<&Schema> = Vec::new();
        for s in self.records.iter().filter_map(|r| r.schema.as_ref()) {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromotionConfig {
    pub score: i64,
    pub valid_min: u64,
}

impl Default for PromotionConfig {
    fn default() -> Self {
        PromotionConfig { score: 100, valid_min: 20 }
    }
}

/// Role after the promotion rule. Never demotes.
pub fn promote_check(worker: &Worker, cfg: &PromotionConfig) -> Role {
    match worker.role {
        Role::Qualificator if worker.score >= cfg.score && worker.valid_count >= cfg.valid_min => Role::Supervisor,
        r => r,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BonusAward {
    pub worker_id: String,
    pub amount: u64,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BonusLedger {
    pub total_awarded: u64,
    pub per_worker: BTreeMap<String, u64>,
    pub recent: Vec<BonusAward>,
}

impl BonusLedger {
    pub fn award(&mut self, worker_id: &str, amount: u64, at: DateTime<Utc>) {
        self.total_awarded += amount;
        *self.per_worker.entry(worker_id.to_string()).or_insert(0) += amount;
        self.recent.push(BonusAward { worker_id: worker_id.to_string(), amount, at });
    }
}

pub const COMMENT_MAX_CHARS: usize = 1000;
pub const BANNER_COMMENTS: usize = 50;
pub const BANNER_BONUSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: u64,
    pub worker_id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BannerState {
    pub bonus: BonusLedger,
    pub comments: Vec<Comment>,
}

/// Bonus totals with the latest awards, and the latest comments newest first.
pub fn banner_state(ledger: &BonusLedger, comments: &[Comment]) -> BannerState {
    let mut bonus = ledger.clone();
    bonus.recent = ledger.recent.iter().rev().take(BANNER_BONUSES).cloned().collect();
    let mut latest: Vec<Comment> = comments.to_vec();
    latest.sort_by(|a, b| b.created_at.cmp(&a.created_at).then(b.id.cmp(&a.id)));
    latest.truncate(BANNER_COMMENTS);
    BannerState { bonus, comments: latest }
}
