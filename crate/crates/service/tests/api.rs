use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use ontoquery::engine::Engine;
use ontoquery_service::api::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

const Q1: &str = "Who is responsible for the fire safety of the gas liquefaction units?";
const TANKS: &str = "In the first tank of the gas liquefaction unit... in the second tank... in the third tank...";

fn app(engine: Engine) -> Router {
    router(AppState::new(engine))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn new_session(app: &Router) -> String {
    let (status, v) = call(app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    v["id"].as_str().unwrap().to_string()
}

async fn say(app: &Router, id: &str, text: &str) -> (StatusCode, Value) {
    call(
        app,
        "POST",
        &format!("/sessions/{id}/messages"),
        Some(&json!({ "text": text }).to_string()),
    )
    .await
}

fn assert_reply_shape(v: &Value) {
    for key in ["kind", "text", "state", "condition", "cards", "proof", "dot"] {
        assert!(v.get(key).is_some(), "missing {key} in {v}");
    }
    assert!(v["cards"].is_array() && v["proof"].is_array());
    let kind = v["kind"].as_str().unwrap();
    assert!(["answer", "clarifying-question", "extraction-report"].contains(&kind));
    if kind == "answer" {
        assert!(v["sparql"].is_string(), "answers carry their query");
    }
}

#[tokio::test]
async fn health_and_sequential_ids() {
    let app = app(Engine::demo());
    let (status, v) = call(&app, "GET", "/health", None).await;
    assert_eq!((status, v), (StatusCode::OK, json!({ "status": "ok" })));
    assert_eq!(new_session(&app).await, "session-1");
    assert_eq!(new_session(&app).await, "session-2");
}

#[tokio::test]
async fn q1_then_q2_over_http() {
    let app = app(Engine::demo());
    let id = new_session(&app).await;
    let (status, v) = say(&app, &id, Q1).await;
    assert_eq!(status, StatusCode::OK);
    assert_reply_shape(&v);
    assert_eq!(v["kind"], "answer");
    assert!(v["cards"][0]["title"].as_str().unwrap().contains("Petrov Petr"));
    assert_eq!(v["proof"].as_array().unwrap().len(), 7);
    assert!(v["sparql"].as_str().unwrap().starts_with("PREFIX"));

    let (_, v) = say(&app, &id, "Which is his phone?").await;
    assert_reply_shape(&v);
    assert!(v["text"].as_str().unwrap().contains("+7-900-123-45-67"));

    let (status, ctx) = call(&app, "GET", &format!("/sessions/{id}/context"), None).await;
    assert_eq!(status, StatusCode::OK);
    let turns = ctx["turns"].as_array().unwrap();
    assert_eq!(turns.len(), 2);
    assert_eq!(turns[1]["read_with"], json!([Q1, "Which is his phone?"]));
    assert_reply_shape(&turns[1]["reply"]);
}

#[tokio::test]
async fn clarification_reply_shape() {
    let app = app(Engine::demo_with(&["abox-smiths.ttl"]));
    let id = new_session(&app).await;
    let (status, v) = say(&app, &id, "Smith's phone").await;
    assert_eq!(status, StatusCode::OK);
    assert_reply_shape(&v);
    assert_eq!(v["kind"], "clarifying-question");
    assert_eq!(v["candidate_count"], 2);
    let (_, ctx) = call(&app, "GET", &format!("/sessions/{id}/context"), None).await;
    assert_eq!(ctx["pending"], json!(["Smith's phone"]));
}

#[tokio::test]
async fn request_errors() {
    let app = app(Engine::demo());
    let (status, v) = say(&app, "session-9", Q1).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(v["error"].is_string());
    let (status, _) = call(&app, "GET", "/sessions/nope/context", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = new_session(&app).await;
    let uri = format!("/sessions/{id}/messages");
    for bad in ["{", "[]", "{\"txt\": \"x\"}", ""] {
        let (status, _) = call(&app, "POST", &uri, Some(bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad:?}");
    }
    let (status, _) = say(&app, &id, "   ").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", "/extract", Some("{\"text\": \"\"}")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", "/extract", Some("nope")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn extract_updates_stats() {
    let app = app(Engine::demo());
    let (_, before) = call(&app, "GET", "/graph/stats", None).await;
    assert!(before.get("base:Tank").is_none());

    let body = json!({ "text": TANKS, "commit": false }).to_string();
    let (status, v) = call(&app, "POST", "/extract", Some(&body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        (v["inserted"].as_u64(), v["committed"].as_bool()),
        (Some(0), Some(false))
    );
    assert_eq!(v["triples"].as_array().unwrap().len(), 9);

    let body = json!({ "text": TANKS }).to_string();
    let (_, v) = call(&app, "POST", "/extract", Some(&body)).await;
    assert_eq!(v["inserted"], 9);
    assert!(v["sparql"].as_str().unwrap().contains("INSERT DATA"));
    let (_, after) = call(&app, "GET", "/graph/stats", None).await;
    assert_eq!(after["base:Tank"], 3);
    assert_eq!(
        after["triples"].as_u64().unwrap(),
        before["triples"].as_u64().unwrap() + 9
    );

    let (_, v) = call(&app, "POST", "/extract", Some(&body)).await;
    assert_eq!(v["inserted"], 0);
}

/// The demo data plus a class no property reaches.
fn engine_with_isolated_class() -> Engine {
    let src = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures");
    let dir = std::env::temp_dir().join(format!("ontoquery-isolated-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for entry in std::fs::read_dir(&src).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dir.join(entry.file_name())).unwrap();
    }
    let mut tbox = std::fs::read_to_string(dir.join("tbox.ttl")).unwrap();
    tbox.push_str("\nbase:Pump a owl:Class ;\n    rdfs:label \"Pump\" .\n");
    std::fs::write(dir.join("tbox.ttl"), tbox).unwrap();
    let config = ontoquery::config::Config::load(&dir.join("ontoquery.toml")).unwrap();
    let engine = Engine::from_config(&config).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    engine
}

#[tokio::test]
async fn disconnected_extraction_is_unprocessable() {
    let app = app(engine_with_isolated_class());
    let body = json!({ "text": "The pump of the first tank." }).to_string();
    let (status, v) = call(&app, "POST", "/extract", Some(&body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert!(v["error"].as_str().unwrap().contains("cannot relate"), "{v}");

    let id = new_session(&app).await;
    let (_, v) = say(&app, &id, "Which pump is in the first tank?").await;
    assert_eq!(v["kind"], "clarifying-question");
    assert_eq!(v["condition"], "disconnected-graph");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn turns_in_one_session_are_serialized() {
    let state = AppState::new(Engine::demo());
    let app = router(Arc::clone(&state));
    let a = new_session(&app).await;
    let b = new_session(&app).await;
    let mut tasks = Vec::new();
    for i in 0..8 {
        let app = app.clone();
        let id = if i % 2 == 0 { a.clone() } else { b.clone() };
        tasks.push(tokio::spawn(async move { say(&app, &id, Q1).await }));
    }
    for t in tasks {
        let (status, v) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        assert_eq!(v["kind"], "answer");
    }
    for id in [a, b] {
        let (_, ctx) = call(&app, "GET", &format!("/sessions/{id}/context"), None).await;
        assert_eq!(ctx["turns"].as_array().unwrap().len(), 4);
    }
}

#[tokio::test]
async fn api_replay_is_byte_identical() {
    async fn run() -> Vec<Value> {
        let app = app(Engine::demo());
        let id = new_session(&app).await;
        let mut out = Vec::new();
        for text in [Q1, "Which is his phone?", "Smith's phone", "And for industrial safety?"] {
            out.push(say(&app, &id, text).await.1);
        }
        out.push(call(&app, "GET", &format!("/sessions/{id}/context"), None).await.1);
        out
    }
    let (a, b) = (run().await, run().await);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
