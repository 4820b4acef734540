use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::Utc;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use winofusion::app::App;
use winofusion::config::Config;
use winofusion::server::router;
use winofusion_core::quality::Role;

async fn call(app: &Router, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn service() -> Router {
    let mut cfg = Config::default();
    cfg.platform.test_questions.probability = 0.0;
    let mut app = App::in_memory(cfg, Utc::now()).unwrap();
    app.provision("admin", Role::Admin, "root", Utc::now()).unwrap();
    router(Arc::new(Mutex::new(app)))
}

async fn login(app: &Router, id: &str, key: &str) -> String {
    let (status, body) = call(app, "POST", "/login", None, Some(json!({ "worker_id": id, "key": key }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["token"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn admin_flow_over_http() {
    let app = service();
    let admin = login(&app, "admin", "root").await;

    let (status, body) =
        call(&app, "POST", "/admin/workers", Some(&admin), Some(json!({ "worker_id": "ana", "role": "qualificator" }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let key = body["key"].as_str().unwrap().to_string();

    let ana = login(&app, "ana", &key).await;
    let (status, body) = call(&app, "GET", "/queue/next", Some(&ana), None).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::FORBIDDEN, Some("training_required")));

    let (status, body) = call(&app, "POST", "/training/start", Some(&ana), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["required_items"], 3);

    let (status, _) = call(&app, "POST", "/admin/bonus", Some(&ana), Some(json!({ "worker_id": "ana", "amount": 5 }))).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, body) = call(&app, "POST", "/admin/bonus", Some(&admin), Some(json!({ "worker_id": "ana", "amount": 5 }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");

    let (status, _) = call(&app, "POST", "/comments", Some(&ana), Some(json!({ "text": "hello" }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, banners) = call(&app, "GET", "/banners", Some(&ana), None).await;
    assert_eq!(banners["bonus"]["total_awarded"], 5);
    assert_eq!(banners["comments"][0]["text"], "hello");

    let (status, stats) = call(&app, "GET", "/workers/me/stats", Some(&ana), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["worker"]["score"], 5);

    let (status, body) = call(&app, "GET", "/admin/adaptivity", Some(&admin), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["config"]["factor_weights"].is_object());
    let (status, body) = call(&app, "GET", "/analytics", Some(&admin), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.as_array().is_some());
    let (status, _) = call(&app, "GET", "/reviews", Some(&ana), None).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
}

#[tokio::test]
async fn missing_token_is_unauthenticated() {
    let app = service();
    let (status, body) = call(&app, "GET", "/queue/next", None, None).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNAUTHORIZED, Some("unauthenticated")));
    let (status, _) = call(&app, "POST", "/login", None, Some(json!({ "worker_id": "admin", "key": "nope" }))).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
}
