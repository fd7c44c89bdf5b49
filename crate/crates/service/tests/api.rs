use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use socratic_ga::{Answer, Domain, ProblemScript, Prompt, ScriptedStudent};
use socratic_ga_service::{router, AppState, StateReply, TurnReply};
use tower::ServiceExt;
use uuid::Uuid;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(v) => Body::from(v.to_string()),
            None => Body::empty(),
        })
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

fn small() -> Value {
    json!({ "population_size": 10 })
}

async fn create(app: &Router, body: Value) -> TurnReply {
    let (status, v) = call(app, Method::POST, "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    serde_json::from_value(v).unwrap()
}

/// Answers pending prompts with the scripted car student until the end.
async fn drive(app: &Router, first: TurnReply) -> (Vec<Prompt>, TurnReply) {
    let mut student = ScriptedStudent::new(ProblemScript::car());
    let mut shown = first.messages.clone();
    let mut last = first;
    while let Some(p) = last.pending.clone() {
        shown.push(p.clone());
        let a = student.answer(&p).unwrap();
        let (status, v) = call(
            app,
            Method::POST,
            &format!("/sessions/{}/answer", last.id),
            Some(serde_json::to_value(a).unwrap()),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        last = serde_json::from_value(v).unwrap();
        shown.extend(last.messages.iter().cloned());
    }
    (shown, last)
}

#[tokio::test]
async fn empty_body_uses_defaults_and_asks_for_the_target() {
    let app = router(AppState::new(), None);
    let (status, v) = call(&app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let reply: TurnReply = serde_json::from_value(v).unwrap();
    assert_eq!(reply.pending.unwrap().kind, socratic_ga::PromptKind::Target);

    let (status, v) = call(&app, Method::GET, &format!("/sessions/{}", reply.id), None).await;
    assert_eq!(status, StatusCode::OK);
    let state: StateReply = serde_json::from_value(v).unwrap();
    assert!(state.knowns.is_empty());
    assert_eq!(state.generation, 1);
    assert_eq!(state.config.population_size, 50);
}

#[tokio::test]
async fn invalid_config_is_rejected() {
    let app = router(AppState::new(), None);
    let (status, _) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({ "config": { "population_size": 1 } })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({ "colour": "red" })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn scripted_dialog_solves_and_matches_the_engine() {
    let app = router(AppState::new(), None);
    let first = create(&app, json!({ "seed": 3, "config": small() })).await;
    let id = first.id;
    let (shown, last) = drive(&app, first).await;
    assert_eq!(last.status, socratic_ga::SessionStatus::Solved);
    assert!(last.pending.is_none());

    let (_, v) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    let state: StateReply = serde_json::from_value(v).unwrap();
    assert_eq!(state.solved_at, Some(state.generation));
    let target = state.target.unwrap();
    assert_eq!(target.variable, socratic_ga::VariableId::X);

    // knowns in the snapshot equal the inserting events
    let (_, events) = call(&app, Method::GET, &format!("/sessions/{id}/events"), None).await;
    let inserting = events
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| {
            matches!(
                e["kind"].as_str(),
                Some("answer" | "propagation" | "solve" | "zone-link")
            )
        })
        .count();
    assert_eq!(state.knowns.len(), inserting);

    // the same dialog through the blocking engine shows the same prompts
    let mut student = ScriptedStudent::new(ProblemScript::car());
    let mut io = Recorder {
        inner: &mut student,
        shown: Vec::new(),
    };
    let config = socratic_ga::GaConfig {
        population_size: 10,
        ..Default::default()
    };
    socratic_ga::Session::new(config, 3, Domain::bundled())
        .unwrap()
        .run_session(&mut io)
        .unwrap();
    assert_eq!(shown, io.shown);

    let (status, m) = call(&app, Method::GET, &format!("/sessions/{id}/metrics"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(m["solved_at"], json!(state.generation));

    let (status, _) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/answer"),
        Some(json!({ "text": "x" })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
}

struct Recorder<'a> {
    inner: &'a mut ScriptedStudent,
    shown: Vec<Prompt>,
}

impl socratic_ga::StudentIo for Recorder<'_> {
    fn present(&mut self, prompt: &Prompt) -> socratic_ga::Result<()> {
        self.shown.push(prompt.clone());
        Ok(())
    }

    fn receive(&mut self, prompt: &Prompt) -> socratic_ga::Result<Answer> {
        self.inner.answer(prompt)
    }
}

#[tokio::test]
async fn same_seed_same_prompts() {
    let app = router(AppState::new(), None);
    let a = create(&app, json!({ "seed": 1, "config": small() })).await;
    let b = create(&app, json!({ "seed": 1, "config": small() })).await;
    assert_ne!(a.id, b.id);
    let (pa, _) = drive(&app, a).await;
    let (pb, _) = drive(&app, b).await;
    assert_eq!(pa, pb);
}

#[tokio::test]
async fn answer_errors() {
    let state = AppState::new();
    let app = router(state.clone(), None);
    let (status, _) = call(
        &app,
        Method::POST,
        &format!("/sessions/{}/answer", Uuid::new_v4()),
        Some(json!({ "text": "x" })),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let r = create(&app, json!({ "seed": 2, "config": small(), "target": "x" })).await;
    let url = format!("/sessions/{}/answer", r.id);
    // first question after a preset target is the new-object question
    assert_eq!(
        r.pending.as_ref().unwrap().kind,
        socratic_ga::PromptKind::NewObject
    );
    let (status, _) = call(&app, Method::POST, &url, Some(json!({ "text": "a car" }))).await;
    assert_eq!(status, StatusCode::OK);
    // the stop-question wants yes or no
    let (status, v) = call(&app, Method::POST, &url, Some(json!({ "text": "perhaps" }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");

    // a request while another holds the session is refused
    let handle = state.entry(r.id).unwrap();
    let guard = handle.lock().await;
    let (status, _) = call(
        &app,
        Method::POST,
        &url,
        Some(json!({ "text": "no", "affirmative": false })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    drop(guard);
    let (status, _) = call(
        &app,
        Method::POST,
        &url,
        Some(json!({ "text": "no", "affirmative": false })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn delete_and_missing_sessions() {
    let app = router(AppState::new(), None);
    let r = create(&app, json!({ "config": small() })).await;
    let url = format!("/sessions/{}", r.id);
    assert_eq!(
        call(&app, Method::DELETE, &url, None).await.0,
        StatusCode::NO_CONTENT
    );
    assert_eq!(
        call(&app, Method::GET, &url, None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        call(&app, Method::DELETE, &url, None).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn snapshots_survive_a_restart() {
    let dir = tempfile_dir();
    let state = AppState::with_snapshots(dir.clone()).unwrap();
    let app = router(state, None);
    let r = create(&app, json!({ "seed": 4, "config": small() })).await;

    let reloaded = router(AppState::with_snapshots(dir.clone()).unwrap(), None);
    let (status, v) = call(&reloaded, Method::GET, &format!("/sessions/{}", r.id), None).await;
    assert_eq!(status, StatusCode::OK);
    let state: StateReply = serde_json::from_value(v).unwrap();
    assert_eq!(state.pending, r.pending);
    let (_, last) = drive(&reloaded, r).await;
    assert_eq!(last.status, socratic_ga::SessionStatus::Solved);
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempfile_dir() -> std::path::PathBuf {
    std::env::temp_dir().join(format!("socratic-service-{}", Uuid::new_v4()))
}

#[tokio::test]
async fn cors_preflight_is_allowed() {
    let app = router(AppState::new(), None);
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/sessions")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert!(resp.headers().contains_key("access-control-allow-origin"));
}
