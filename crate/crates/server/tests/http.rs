use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use cobuild_core::session::{ServiceConfig, SessionManager};
use cobuild_server::{parse_config, router, AppState};

fn app_with(config: ServiceConfig) -> Router {
    router(AppState::new(SessionManager::new(config).unwrap()))
}

fn app() -> Router {
    app_with(ServiceConfig::default())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

async fn new_session(app: &Router) -> String {
    let (status, body) = call(app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    body["id"].as_str().unwrap().to_string()
}

async fn say(app: &Router, id: &str, text: &str) -> Value {
    let (status, body) = call(app, "POST", &format!("/sessions/{id}/instruction"), Some(json!({ "text": text }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body
}

#[tokio::test]
async fn instruction_places_parts() {
    let app = app();
    let id = new_session(&app).await;
    let out = say(&app, &id, "Place a red nut at the 1st column, 1st row.").await;
    assert_eq!(out["outcome"], "execute");
    let (status, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    let parts = state["parts"].as_array().unwrap();
    assert_eq!(parts.len(), 1);
    assert_eq!(parts[0]["color"], "red");
    assert_eq!(state["dialogue"].as_array().unwrap().len(), 2);
    assert!(state["pending"].is_null());
}

#[tokio::test]
async fn question_then_answer() {
    let app = app();
    let id = new_session(&app).await;
    let out = say(&app, &id, "Place a nut at the 2nd column, 2nd row.").await;
    assert_eq!(out["outcome"], "clarify");
    let qid = out["question_id"].as_u64().unwrap();

    // Another instruction while the question is open is refused.
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/instruction"), Some(json!({ "text": "Place a red nut." }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "session-busy");

    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/answer"),
        Some(json!({ "text": "red", "question_id": qid + 7 })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "unknown-question");

    let (status, out) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({ "text": "red", "question_id": qid }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(out["outcome"], "execute");
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(state["parts"][0]["color"], "red");
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let (status, body) = call(&app, "GET", "/sessions/nope/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "session-not-found");

    let id = new_session(&app).await;
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({ "text": "red" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "no-pending-question");

    let (status, _) = call(&app, "POST", "/shapes/Pair/apply", Some(json!({ "session": id, "x": 1, "y": 1, "bogus": 2 }))).await;
    assert!(status.is_client_error());

    let (status, body) = call(&app, "GET", "/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([id]));
}

#[tokio::test]
async fn store_list_and_apply_shape() {
    let app = app();
    let id = new_session(&app).await;
    say(&app, &id, "Build a tower of two red nuts at the 1st column, 1st row.").await;
    let out = say(&app, &id, "This is what I call a Pair.").await;
    assert_eq!(out["outcome"], "stored");

    let (status, shapes) = call(&app, "GET", &format!("/shapes?session={id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(shapes, json!([{ "name": "Pair", "version": 1, "parts": 2 }]));

    let (status, out) = call(
        &app,
        "POST",
        "/shapes/Pair/apply",
        Some(json!({ "session": id, "x": 5, "y": 5, "color": "green" })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{out}");
    assert_eq!(out["outcome"], "execute");
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    let parts = state["parts"].as_array().unwrap();
    assert_eq!(parts.len(), 4);
    let green: Vec<&Value> = parts.iter().filter(|p| p["color"] == "green").collect();
    assert_eq!(green.len(), 2);

    // The unscoped listing reads the shared library, absent here.
    let (_, shapes) = call(&app, "GET", "/shapes", None).await;
    assert_eq!(shapes, json!([]));
}

#[tokio::test]
async fn shared_library_is_saved() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("shapes.json");
    std::fs::write(&lib, cobuild_core::memory::ShapeLibrary::new().to_json()).unwrap();
    let config = parse_config(&format!(
        "shape_library = {:?}\ndata_dir = {:?}\n",
        lib.display().to_string(),
        dir.path().join("logs").display().to_string()
    ))
    .unwrap();
    let app = app_with(config);
    let id = new_session(&app).await;
    say(&app, &id, "Build a tower of two red nuts at the 1st column, 1st row.").await;
    say(&app, &id, "This is what I call a Pair.").await;
    let (_, shapes) = call(&app, "GET", "/shapes", None).await;
    assert_eq!(shapes[0]["name"], "Pair");
    assert!(std::fs::read_to_string(&lib).unwrap().contains("Pair"));

    // A second session sees the same library.
    let other = new_session(&app).await;
    let (status, _) = call(&app, "POST", "/shapes/Pair/apply", Some(json!({ "session": other, "x": 3, "y": 3 }))).await;
    assert_eq!(status, StatusCode::OK);
}

/// Reads SSE frames until `n` events have arrived.
async fn read_events(body: Body, n: usize) -> Vec<(String, Value)> {
    let mut body = body;
    let mut buf = String::new();
    let mut out = Vec::new();
    while out.len() < n {
        let frame = tokio::time::timeout(std::time::Duration::from_secs(5), body.frame())
            .await
            .expect("event within 5s")
            .expect("stream open")
            .unwrap();
        if let Ok(data) = frame.into_data() {
            buf.push_str(std::str::from_utf8(&data).unwrap());
        }
        while let Some(end) = buf.find("\n\n") {
            let block: String = buf.drain(..end + 2).collect();
            let mut name = String::new();
            let mut data = String::new();
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("event: ") {
                    name = v.to_string();
                } else if let Some(v) = line.strip_prefix("data: ") {
                    data.push_str(v);
                }
            }
            if !data.is_empty() {
                out.push((name, serde_json::from_str(&data).unwrap()));
            }
        }
    }
    out
}

#[tokio::test]
async fn event_stream_backlog_then_live() {
    let app = app();
    let id = new_session(&app).await;
    say(&app, &id, "Place a nut at the 2nd column, 2nd row.").await;

    let req = Request::get(format!("/sessions/{id}/events")).body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    let body = resp.into_body();

    let answer = {
        let app = app.clone();
        let id = id.clone();
        tokio::spawn(async move { call(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({ "text": "blue" }))).await })
    };
    let events = read_events(body, 4).await;
    answer.await.unwrap();
    let names: Vec<&str> = events.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["instruction", "question", "answer", "grid-update"]);
    let seqs: Vec<u64> = events.iter().map(|(_, v)| v["seq"].as_u64().unwrap()).collect();
    assert!(seqs.windows(2).all(|w| w[0] < w[1]), "{seqs:?}");
    assert_eq!(events[3].1["parts"][0]["color"], "blue");
    assert!(events.iter().all(|(_, v)| v["session"] == id));

    // Resuming after a seq skips what was seen.
    let req = Request::get(format!("/sessions/{id}/events?since={}", seqs[1])).body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let again = read_events(resp.into_body(), 2).await;
    assert_eq!(again[0].0, "answer");
    assert_eq!(again[1].0, "grid-update");
}

#[tokio::test]
async fn events_for_unknown_session_is_404() {
    let app = app();
    let (status, _) = call(&app, "GET", "/sessions/ghost/events", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn config_parsing() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/cobuild.example.toml")).unwrap();
    let config = parse_config(&text).unwrap();
    assert_eq!(config.backend.max_retries, 3);
    assert!(config.data_dir.is_some());

    assert!(parse_config("colour = 3").is_err());
    assert!(parse_config("[backend]\nkind = \"remote\"\n").is_err());
    assert!(parse_config("[backend]\ntimeout_secs = 0\n").is_err());
    assert!(parse_config("").is_ok());
}

#[test]
fn missing_shape_library_file_is_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = parse_config(&format!("shape_library = {:?}\n", dir.path().join("absent.json").display().to_string())).unwrap();
    match SessionManager::new(config) {
        Err(cobuild_core::session::ServiceError::BadConfig(_)) => {}
        other => panic!("{:?}", other.err()),
    }
}

#[test]
fn documented_empty_library_loads() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("shapes.json");
    std::fs::write(&lib, r#"{"format": 1, "shapes": {}}"#).unwrap();
    let config = parse_config(&format!("shape_library = {:?}\n", lib.display().to_string())).unwrap();
    assert!(SessionManager::new(config).is_ok());
}
