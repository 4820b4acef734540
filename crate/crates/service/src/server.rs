//! HTTP routing over [`App`].

use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use log::{info, warn};
use serde::Serialize;
use winofusion_core::collab::Submission;
use winofusion_core::pipeline::TemplateId;
use winofusion_core::quality::TestResponse;

use crate::app::*;

pub type Shared = Arc<Mutex<App>>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

fn reply<T: Serialize>(r: ApiResult<T>) -> Response {
    match r {
        Ok(body) => Json(body).into_response(),
        Err(e) => e.into_response(),
    }
}

fn token(headers: &HeaderMap) -> String {
    headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .unwrap_or_default()
        .trim()
        .to_string()
}

fn lock(app: &Shared) -> std::sync::MutexGuard<'_, App> {
    app.lock().unwrap_or_else(|p| p.into_inner())
}

async fn login(State(app): State<Shared>, Json(req): Json<LoginRequest>) -> Response {
    reply(lock(&app).login(&req, Utc::now()))
}

async fn queue_next(State(app): State<Shared>, h: HeaderMap) -> Response {
    reply(lock(&app).queue_next(&token(&h), Utc::now()))
}

async fn qualification(
    State(app): State<Shared>,
    h: HeaderMap,
    Path(id): Path<String>,
    Json(req): Json<Submission>,
) -> Response {
    reply(lock(&app).submit(&token(&h), &TemplateId(id), &req, Utc::now()))
}

async fn answer_test(
    State(app): State<Shared>,
    h: HeaderMap,
    Path(id): Path<String>,
    Json(req): Json<TestResponse>,
) -> Response {
    reply(lock(&app).answer_test(&token(&h), &id, &req, Utc::now()))
}

async fn reviews(State(app): State<Shared>, h: HeaderMap) -> Response {
    reply(lock(&app).pending_reviews(&token(&h)))
}

async fn review(
    State(app): State<Shared>,
    h: HeaderMap,
    Path(id): Path<u64>,
    Json(req): Json<ReviewRequest>,
) -> Response {
    reply(lock(&app).review(&token(&h), id, &req, Utc::now()))
}

async fn banners(State(app): State<Shared>, h: HeaderMap) -> Response {
    reply(lock(&app).banners(&token(&h)))
}

async fn comments(State(app): State<Shared>, h: HeaderMap, Json(req): Json<CommentRequest>) -> Response {
    reply(lock(&app).post_comment(&token(&h), &req, Utc::now()))
}

async fn my_stats(State(app): State<Shared>, h: HeaderMap) -> Response {
    reply(lock(&app).my_stats(&token(&h)))
}

async fn training_start(State(app): State<Shared>, h: HeaderMap) -> Response {
    reply(lock(&app).training_start(&token(&h), Utc::now()))
}

async fn training_answer(State(app): State<Shared>, h: HeaderMap, Json(req): Json<TrainingAnswerRequest>) -> Response {
    reply(lock(&app).training_answer(&token(&h), &req, Utc::now()))
}

async fn analytics(State(app): State<Shared>, h: HeaderMap) -> Response {
    reply(lock(&app).analytics(&token(&h)))
}

async fn admin_adaptivity(State(app): State<Shared>, h: HeaderMap) -> Response {
    reply(lock(&app).admin_adaptivity(&token(&h)))
}

async fn admin_aggregate(State(app): State<Shared>, h: HeaderMap, Json(req): Json<AggregateRequest>) -> Response {
    reply(lock(&app).admin_aggregate(&token(&h), &req, Utc::now()))
}

async fn admin_bonus(State(app): State<Shared>, h: HeaderMap, Json(req): Json<BonusRequest>) -> Response {
    reply(lock(&app).admin_bonus(&token(&h), &req, Utc::now()))
}

async fn admin_corpus(State(app): State<Shared>, h: HeaderMap, Json(req): Json<CorpusRequest>) -> Response {
    reply(lock(&app).admin_corpus(&token(&h), &req, Utc::now()))
}

async fn admin_workers(State(app): State<Shared>, h: HeaderMap, Json(req): Json<ProvisionRequest>) -> Response {
    reply(lock(&app).admin_provision(&token(&h), &req, Utc::now()))
}

async fn admin_demote(State(app): State<Shared>, h: HeaderMap, Json(req): Json<DemoteRequest>) -> Response {
    reply(lock(&app).admin_demote(&token(&h), &req, Utc::now()))
}

pub fn router(app: Shared) -> Router {
    Router::new()
        .route("/login", post(login))
        .route("/queue/next", get(queue_next))
        .route("/drafts/:id/qualification", post(qualification))
        .route("/drafts/:id/answer-test", post(answer_test))
        .route("/reviews", get(reviews))
        .route("/reviews/:id", post(review))
        .route("/banners", get(banners))
        .route("/comments", post(comments))
        .route("/workers/me/stats", get(my_stats))
        .route("/training/start", post(training_start))
        .route("/training/answer", post(training_answer))
        .route("/analytics", get(analytics))
        .route("/admin/adaptivity", get(admin_adaptivity))
        .route("/admin/aggregate", post(admin_aggregate))
        .route("/admin/bonus", post(admin_bonus))
        .route("/admin/corpus", post(admin_corpus))
        .route("/admin/workers", post(admin_workers))
        .route("/admin/demote", post(admin_demote))
        .with_state(app)
}

/// Ticks the scheduler once a minute.
pub async fn run_scheduler(app: Shared) {
    let mut interval = tokio::time::interval(Duration::from_secs(60));
    loop {
        interval.tick().await;
        match lock(&app).scheduler_tick(Utc::now()) {
            Ok(jobs) => jobs.iter().for_each(|j| info!("scheduler ran {j:?}")),
            Err(e) => warn!("scheduler tick failed: {}", e.message),
        }
    }
}

pub async fn serve(app: App) -> std::io::Result<()> {
    let listen = app.config().listen.clone();
    let shared: Shared = Arc::new(Mutex::new(app));
    tokio::spawn(run_scheduler(shared.clone()));
    let listener = tokio::net::TcpListener::bind(&listen).await?;
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(shared)).await
}
