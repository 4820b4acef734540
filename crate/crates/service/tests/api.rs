use std::fs;

use chrono::{DateTime, Duration, TimeZone, Utc};
use winofusion::app::{test_question_id, App, Job, LoginRequest, ReviewRequest};
use winofusion::config::Config;
use winofusion::store::{restore, EventRecord, CORRUPT_FILE, LOG_FILE, SNAPSHOT_FILE};
use winofusion_core::collab::{Event, Platform, QualAnswer, Submission, SupervisorVerdict};
use winofusion_core::quality::{Role, TestResponse, TrainingStatus};

fn monday() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 4, 9, 0, 0).unwrap()
}

fn config(tweak: impl FnOnce(&mut Config)) -> Config {
    let mut c = Config::default();
    c.platform.test_questions.probability = 0.0;
    c.platform.semi_share = 0.0;
    tweak(&mut c);
    c
}

/// Provisions trained qualificators q1..q3 and a supervisor, all with key "k".
fn seed_workers(app: &mut App, now: DateTime<Utc>) {
    for id in ["q1", "q2", "q3"] {
        app.provision(id, Role::Qualificator, "k", now).unwrap();
    }
    app.provision("s1", Role::Supervisor, "k", now).unwrap();
}

fn login(app: &mut App, id: &str, now: DateTime<Utc>) -> String {
    app.login(&LoginRequest { worker_id: id.into(), key: "k".into() }, now).unwrap().token
}

fn mark_trained(p: &Platform, ids: &[&str]) -> Vec<Event> {
    ids.iter()
        .filter(|id| p.worker(id).is_some())
        .map(|id| Event::TrainingUpdated { worker_id: id.to_string(), status: TrainingStatus::Completed })
        .collect()
}

/// Runs a short session through the API: three accepts on the top draft.
fn three_accepts(app: &mut App, now: DateTime<Utc>) {
    for id in ["q1", "q2", "q3"] {
        let token = login(app, id, now);
        let q = app.queue_next(&token, now).unwrap();
        let d = q.draft.unwrap();
        let s = d.schema().unwrap();
        let sub = Submission {
            answer: QualAnswer::AcceptedAsIs,
            modified: None,
            selected_answers: Some([s.first.correct_answer, s.second.correct_answer]),
            bias: None,
        };
        app.submit(&token, &d.template_id, &sub, now + Duration::minutes(1)).unwrap();
    }
}

/// An App whose workers are trained by replaying extra events through a store.
fn trained_app(dir: &std::path::Path, tweak: impl FnOnce(&mut Config)) -> App {
    let cfg = config(|c| {
        c.store_dir = dir.to_path_buf();
        tweak(c);
    });
    {
        let (mut app, _) = App::open(cfg.clone(), monday()).unwrap();
        seed_workers(&mut app, monday());
    }
    // Append training completions directly to the log, as a restart would see them.
    let restored = restore(&fs::read_to_string(dir.join(LOG_FILE)).unwrap(), None, &cfg.platform);
    let mut seq = restored.last_seq;
    let mut tail = String::new();
    for event in mark_trained(&restored.platform, &["q1", "q2", "q3"]) {
        seq += 1;
        tail += &(serde_json::to_string(&EventRecord { seq, ts: monday(), event }).unwrap() + "\n");
    }
    let mut log = fs::read_to_string(dir.join(LOG_FILE)).unwrap();
    log += &tail;
    fs::write(dir.join(LOG_FILE), log).unwrap();
    App::open(cfg, monday()).unwrap().0
}

#[test]
fn empty_log_restores_empty_state() {
    let r = restore("", None, &Config::default().platform);
    assert_eq!((r.last_seq, r.valid_len, r.halt), (0, 0, None));
    assert_eq!(r.platform, Platform::new(Config::default().platform));
}

#[test]
fn replay_reproduces_live_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut app = trained_app(dir.path(), |_| {});
    three_accepts(&mut app, monday());
    let log = fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
    let r = restore(&log, None, &app.config().platform);
    assert_eq!(r.halt, None);
    assert_eq!(&r.platform, app.platform());
    assert_eq!(r.last_seq, app.platform().events_applied);
}

#[test]
fn truncated_tail_recovers_to_last_valid_event() {
    let dir = tempfile::tempdir().unwrap();
    let cfg;
    let n;
    {
        let mut app = trained_app(dir.path(), |_| {});
        three_accepts(&mut app, monday());
        cfg = app.config().clone();
        n = app.platform().events_applied;
    }
    let path = dir.path().join(LOG_FILE);
    let log = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len() as u64, n);
    let last = lines[lines.len() - 1];
    let cut = log.len() - 1 - last.len() / 2;
    fs::write(&path, &log[..cut]).unwrap();

    let expected = restore(&lines[..lines.len() - 1].iter().map(|l| format!("{l}\n")).collect::<String>(), None, &cfg.platform);
    let (app, restored) = App::open(cfg, monday()).unwrap();
    assert_eq!(restored.last_seq, n - 1);
    assert_eq!(restored.halt.as_ref().unwrap().line, lines.len());
    assert_eq!(app.platform(), &expected.platform);
    let last_start = log.len() - 1 - last.len();
    assert_eq!(fs::read_to_string(dir.path().join(CORRUPT_FILE)).unwrap(), &log[last_start..cut]);
    assert!(fs::read_to_string(&path).unwrap().ends_with('\n'));
}

#[test]
fn garbage_line_stops_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut app = trained_app(dir.path(), |_| {});
    three_accepts(&mut app, monday());
    let cfg = app.config().clone();
    let n = app.platform().events_applied;
    drop(app);
    let path = dir.path().join(LOG_FILE);
    let mut log = fs::read_to_string(&path).unwrap();
    log += "{not json}\n";
    fs::write(&path, log).unwrap();
    let (app, restored) = App::open(cfg, monday()).unwrap();
    assert_eq!(restored.last_seq, n);
    assert_eq!(app.platform().events_applied, n);
    assert_eq!(fs::read_to_string(dir.path().join(CORRUPT_FILE)).unwrap(), "{not json}\n");
}

#[test]
fn snapshot_plus_tail_equals_full_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut app = trained_app(dir.path(), |c| c.snapshot_every = 7);
    three_accepts(&mut app, monday());
    assert!(dir.path().join(SNAPSHOT_FILE).exists());
    let live = app.platform().clone();
    let cfg = app.config().clone();
    drop(app);
    let (reopened, restored) = App::open(cfg.clone(), monday()).unwrap();
    assert_eq!(reopened.platform(), &live);
    assert_eq!(restored.halt, None);
    let full = restore(&fs::read_to_string(dir.path().join(LOG_FILE)).unwrap(), None, &cfg.platform);
    assert_eq!(full.platform, live);
}

#[test]
fn scheduler_runs_on_weekends_once_per_date() {
    let dir = tempfile::tempdir().unwrap();
    let mut app = trained_app(dir.path(), |_| {});
    three_accepts(&mut app, monday());
    let tuesday = monday() + Duration::days(1);
    assert_eq!(app.scheduler_tick(tuesday).unwrap(), vec![]);
    let saturday = monday() + Duration::days(5);
    let jobs = app.scheduler_tick(saturday).unwrap();
    assert_eq!(jobs, vec![Job::Aggregation { date: saturday.date_naive(), results: 1 }]);
    assert_eq!(app.scheduler_tick(saturday + Duration::hours(3)).unwrap(), vec![]);
    let next_saturday = saturday + Duration::days(7);
    assert_eq!(app.scheduler_tick(next_saturday).unwrap(), vec![Job::Aggregation { date: next_saturday.date_naive(), results: 0 }]);
    assert_eq!(app.scheduler_tick(next_saturday + Duration::minutes(1)).unwrap(), vec![]);
    assert_eq!(app.platform().results.len(), 1);
}

#[test]
fn review_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let mut app = trained_app(dir.path(), |_| {});
    three_accepts(&mut app, monday());
    let saturday = monday() + Duration::days(5);
    app.scheduler_tick(saturday).unwrap();
    let q1 = login(&mut app, "q1", saturday);
    assert_eq!(app.pending_reviews(&q1).unwrap_err().status, 403);
    let s1 = login(&mut app, "s1", saturday);
    let pending = app.pending_reviews(&s1).unwrap();
    assert_eq!(pending.len(), 1);
    let r = app.review(&s1, pending[0].id, &ReviewRequest { verdict: SupervisorVerdict::ValidFinished }, saturday).unwrap();
    assert_eq!(r.supervisor_verdict, Some(SupervisorVerdict::ValidFinished));
    let out = tempfile::tempdir().unwrap();
    let files = app.export(out.path()).unwrap();
    assert_eq!(files.len(), 1);
    assert!(files[0].ends_with("schemas-2024-03-09.jsonl"));
    assert_eq!(fs::read_to_string(&files[0]).unwrap().lines().count(), 1);
}

#[test]
fn pending_test_question_blocks_the_queue() {
    let dir = tempfile::tempdir().unwrap();
    let mut app = trained_app(dir.path(), |c| c.platform.test_questions.probability = 1.0);
    let resp = app.login(&LoginRequest { worker_id: "q1".into(), key: "k".into() }, monday()).unwrap();
    let tq = resp.test_question.unwrap();
    assert_eq!(tq.id, test_question_id(&resp.token));
    let err = app.queue_next(&resp.token, monday()).unwrap_err();
    assert_eq!((err.status, err.error.as_str()), (409, "pending_test_question"));
    let wrong = app.answer_test(&resp.token, "test-nope", &TestResponse::Approval { approve: true }, monday()).unwrap_err();
    assert_eq!(wrong.status, 404);
    let session = app.platform().session(&resp.token).unwrap();
    let response = match &session.pending_test_question.as_ref().unwrap().expected {
        winofusion_core::quality::TestExpected::Answers { answers } => TestResponse::Answers { answers: *answers },
        winofusion_core::quality::TestExpected::Approval => TestResponse::Approval { approve: true },
    };
    app.answer_test(&resp.token, &tq.id, &response, monday()).unwrap();
    assert!(app.queue_next(&resp.token, monday()).unwrap().draft.is_some());
}

#[test]
fn bad_credentials_and_tokens() {
    let mut app = App::in_memory(config(|c| c.bootstrap_corpus = false), monday()).unwrap();
    seed_workers(&mut app, monday());
    let err = app.login(&LoginRequest { worker_id: "q1".into(), key: "wrong".into() }, monday()).unwrap_err();
    assert_eq!(err.status, 401);
    assert_eq!(app.queue_next("nope", monday()).unwrap_err().status, 401);
    let token = login(&mut app, "q1", monday());
    let err = app.queue_next(&token, monday()).unwrap_err();
    assert_eq!((err.status, err.error.as_str()), (403, "training_required"));
    assert!(app.platform().drafts.is_empty());
}

#[test]
fn invalid_submission_answers_422_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut app = trained_app(dir.path(), |_| {});
    let token = login(&mut app, "q1", monday());
    let d = app.queue_next(&token, monday()).unwrap().draft.unwrap();
    let mut s = d.schema().unwrap().clone();
    s.second = s.first.clone();
    let sub = Submission {
        answer: QualAnswer::ModifiedAccepted,
        modified: Some(s.clone()),
        selected_answers: Some([s.first.correct_answer, s.second.correct_answer]),
        bias: None,
    };
    let err = app.submit(&token, &d.template_id, &sub, monday()).unwrap_err();
    assert_eq!((err.status, err.error.as_str()), (422, "invalid_schema"));
    assert!(err.details.unwrap()["violations"].as_array().is_some_and(|v| !v.is_empty()));
    assert_eq!(app.my_stats(&token).unwrap().worker.score, -5);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("winofusion.conf");
    fs::write(&path, "# local\ntest_question.probability = 0.25\nschedule.aggregation_days = Sun\nstore.dir = /tmp/x\n").unwrap();
    let c = Config::load(&path).unwrap();
    assert_eq!(c.platform.test_questions.probability, 0.25);
    assert_eq!(c.aggregation_days, vec![chrono::Weekday::Sun]);
    assert_eq!(c.store_dir, std::path::PathBuf::from("/tmp/x"));
    assert!(Config::load(&dir.path().join("missing.conf")).is_err());
}
