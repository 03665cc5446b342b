use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use faq_assist::class::{CandidateClass, FaqId};
use faq_assist::corpus::{FaqDatabase, FaqItem};
use faq_assist::project::Project;
use faq_assist::retrieval::{
    Query, RankedSuggestion, Ranker, RankerKind, RetrievalError, SidecarProvider,
};
use faq_assist_server::{router, AppState, ServerConfig, ServerError};

fn faq_items() -> Vec<FaqItem> {
    (1..=10)
        .map(|i| FaqItem {
            id: FaqId::new(i).unwrap(),
            theme: format!("Thema {i}"),
            question: format!("Frage {i}?"),
            answer: format!("Antwort {i}: Details unter https://example.org/{i}"),
        })
        .collect()
}

/// Fixed order 3, 1, silence, 4, 5, 9, 2, 6, 8, 7; silence first when the
/// newest message says "schweigen".
struct Scripted;

impl Ranker for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn rank(&self, query: &Query, _seed: u64) -> Result<Vec<RankedSuggestion>, RetrievalError> {
        let faq = |n| CandidateClass::Faq(FaqId::new(n).unwrap());
        let mut order = vec![
            faq(3),
            faq(1),
            CandidateClass::NoSuggestion,
            faq(4),
            faq(5),
            faq(9),
            faq(2),
            faq(6),
            faq(8),
            faq(7),
        ];
        if query
            .window
            .last()
            .is_some_and(|(_, t)| t.contains("schweigen"))
        {
            order.retain(|c| !c.is_silence());
            order.insert(0, CandidateClass::NoSuggestion);
        }
        Ok(order
            .into_iter()
            .enumerate()
            .map(|(i, class)| RankedSuggestion {
                class,
                score: 10.0 - i as f64,
                percent: 10 - i as u8,
            })
            .collect())
    }
}

fn app() -> Router {
    let projects = vec![
        Project::new(
            1,
            "IT-Praktikum",
            ["informatik", "praktikum"],
            "Schulpraktikum",
        )
        .unwrap(),
        Project::new(2, "Umwelt", ["umwelt"], "Naturschutz").unwrap(),
    ];
    let state = AppState::new(
        FaqDatabase::new(faq_items()).unwrap(),
        Box::new(Scripted),
        projects,
    );
    router(Arc::new(state))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn new_session(app: &Router) -> String {
    let (status, body) = call(app, Method::POST, "/api/v1/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    body["session_id"].as_str().unwrap().to_string()
}

async fn say(app: &Router, id: &str, role: &str, text: &str) -> (StatusCode, Value) {
    let sender = if role == "customer" {
        "KundeEins"
    } else {
        "Mitarbeiter"
    };
    call(
        app,
        Method::POST,
        &format!("/api/v1/sessions/{id}/utterances"),
        Some(json!({ "sender": sender, "text": text, "role": role })),
    )
    .await
}

fn slot_classes(body: &Value) -> Vec<Value> {
    body["slots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            if s.is_null() {
                Value::Null
            } else {
                s["class"].clone()
            }
        })
        .collect()
}

#[tokio::test]
async fn health_reports_ok() {
    let (status, body) = call(&app(), Method::GET, "/api/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["faqs"], 10);
}

#[tokio::test]
async fn utterance_fills_two_slots() {
    let app = app();
    let id = new_session(&app).await;
    let (status, body) = say(&app, &id, "customer", "Hallo, ich habe eine Frage").await;
    assert_eq!(status, StatusCode::OK);
    let suggestions = body["suggestions"].as_array().unwrap();
    assert_eq!(suggestions.len(), 10);
    assert_eq!(
        suggestions[0],
        json!({ "class": 3, "theme": "Thema 3", "percent": 10 })
    );
    assert_eq!(
        suggestions[2],
        json!({ "class": "no-suggestion", "theme": null, "percent": 8 })
    );
    assert_eq!(slot_classes(&body), vec![json!(3), json!(1)]);
    assert_eq!(body["slots"][0]["question"], "Frage 3?");
    assert_eq!(body["counter"], 0);
}

#[tokio::test]
async fn silence_first_shows_nothing() {
    let app = app();
    let id = new_session(&app).await;
    let (_, body) = say(&app, &id, "customer", "bitte schweigen").await;
    assert_eq!(body["suggestions"][0]["class"], "no-suggestion");
    assert_eq!(slot_classes(&body), vec![Value::Null, Value::Null]);
    let (status, _) = call(
        &app,
        Method::POST,
        &format!("/api/v1/sessions/{id}/slots/1/discard"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn discard_pages_through_four_more() {
    let app = app();
    let id = new_session(&app).await;
    say(&app, &id, "customer", "Hallo").await;
    let discard = |n: u8| {
        let app = app.clone();
        let uri = format!("/api/v1/sessions/{id}/slots/{n}/discard");
        async move { call(&app, Method::POST, &uri, None).await }
    };
    // First six ranks minus the silence entry: 3, 1, 4, 5, 9.
    let (_, body) = discard(1).await;
    assert_eq!(slot_classes(&body), vec![json!(4), json!(1)]);
    assert_eq!(body["counter"], -1);
    let (_, body) = discard(2).await;
    assert_eq!(slot_classes(&body), vec![json!(4), json!(5)]);
    let (_, body) = discard(1).await;
    assert_eq!(slot_classes(&body), vec![json!(9), json!(5)]);
    let (_, body) = discard(1).await;
    assert_eq!(slot_classes(&body), vec![Value::Null, json!(5)]);
    assert_eq!(body["counter"], -4);
    let (status, _) = discard(1).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, body) = discard(2).await;
    assert_eq!(slot_classes(&body), vec![Value::Null, Value::Null]);
    assert_eq!(body["counter"], -5);

    let (status, body) = discard(3).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("slot 3"));
}

#[tokio::test]
async fn copy_info_and_counter() {
    let app = app();
    let id = new_session(&app).await;
    say(&app, &id, "customer", "Hallo").await;
    let base = format!("/api/v1/sessions/{id}/slots");
    let (status, body) = call(&app, Method::POST, &format!("{base}/1/copy"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body["answer_text"],
        "Antwort 3: Details unter https://example.org/3"
    );
    assert_eq!(body["counter"], 1);
    call(&app, Method::POST, &format!("{base}/2/copy"), None).await;
    let (_, body) = call(&app, Method::POST, &format!("{base}/2/copy"), None).await;
    assert_eq!(body["counter"], 3);

    let (status, body) = call(&app, Method::GET, &format!("{base}/2/info"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body,
        json!({ "id": 1, "theme": "Thema 1", "question": "Frage 1?", "answer": "Antwort 1: Details unter https://example.org/1" })
    );
    let (_, body) = call(&app, Method::POST, &format!("{base}/1/discard"), None).await;
    assert_eq!(body["counter"], 2);
    let (_, view) = call(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(view["counter"], 2);
    let (status, _) = call(&app, Method::GET, &format!("{base}/0/info"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn feedback_is_recorded_without_changing_rankings() {
    let app = app();
    let id = new_session(&app).await;
    say(&app, &id, "customer", "Hallo").await;
    let (_, before) = call(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await;
    let uri = format!("/api/v1/sessions/{id}/feedback");
    let (status, body) = call(
        &app,
        Method::POST,
        &uri,
        Some(json!({ "search_terms": "praktikum", "faq_id": 7 })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "ok": true }));
    let (status, _) = call(
        &app,
        Method::POST,
        &uri,
        Some(json!({ "search_terms": "x", "faq_id": 99 })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, after) = call(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(before["suggestions"], after["suggestions"]);
    assert_eq!(before["slots"], after["slots"]);
}

#[tokio::test]
async fn projects_follow_customer_messages_only() {
    let app = app();
    let id = new_session(&app).await;
    let uri = format!("/api/v1/sessions/{id}/projects");
    say(&app, &id, "agent", "Wir haben auch Umwelt-Projekte").await;
    let (_, body) = call(&app, Method::GET, &uri, None).await;
    assert_eq!(body, json!([]));
    say(&app, &id, "customer", "Ich suche ein Informatik Praktikum").await;
    let (status, body) = call(&app, Method::GET, &uri, None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<u64> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![1]);
}

#[tokio::test]
async fn ai_support_off_hides_suggestions() {
    let app = app();
    let id = new_session(&app).await;
    say(&app, &id, "customer", "Hallo").await;
    let uri = format!("/api/v1/sessions/{id}/settings");
    let (status, body) = call(
        &app,
        Method::PUT,
        &uri,
        Some(json!({ "ai_support": false, "learning_behavior": true })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "ok": true }));
    let (_, body) = say(&app, &id, "customer", "Noch eine Frage").await;
    assert_eq!(body["suggestions"], json!([]));
    assert_eq!(slot_classes(&body), vec![Value::Null, Value::Null]);
    let (_, view) = call(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(
        view["settings"],
        json!({ "ai_support": false, "learning_behavior": true })
    );
    assert_eq!(view["messages"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn request_errors() {
    let app = app();
    let (status, body) = say(&app, "nope", "customer", "Hallo").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
    let id = new_session(&app).await;
    let (status, _) = say(&app, &id, "customer", "   ").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        Method::POST,
        &format!("/api/v1/sessions/{id}/utterances"),
        Some(json!({ "sender": "x", "text": "hi", "role": "bot" })),
    )
    .await;
    assert!(status.is_client_error());
}

fn write_faqs(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("faqs.json");
    std::fs::write(&path, serde_json::to_string(&faq_items()).unwrap()).unwrap();
    path
}

#[tokio::test]
async fn event_log_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServerConfig::new(RankerKind::Bm25, write_faqs(dir.path()));
    config.event_log = Some(dir.path().join("events.jsonl"));

    let app = router(Arc::new(AppState::from_config(&config).unwrap()));
    let id = new_session(&app).await;
    say(&app, &id, "customer", "Frage 4 bitte").await;
    call(
        &app,
        Method::POST,
        &format!("/api/v1/sessions/{id}/slots/1/copy"),
        None,
    )
    .await;
    call(
        &app,
        Method::POST,
        &format!("/api/v1/sessions/{id}/slots/2/discard"),
        None,
    )
    .await;
    let (_, before) = call(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(before["slots"][0]["class"], 4);
    drop(app);

    let lines = std::fs::read_to_string(config.event_log.as_ref().unwrap()).unwrap();
    assert_eq!(lines.lines().count(), 3);
    assert!(lines
        .lines()
        .all(|l| serde_json::from_str::<Value>(l).is_ok()));

    let app = router(Arc::new(AppState::from_config(&config).unwrap()));
    let (status, after) = call(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    assert_eq!(after["counter"], 0);
}

#[tokio::test]
async fn dense_exact_match_shows_gold_and_runner_up() {
    let dir = tempfile::tempdir().unwrap();
    let dim = 11;
    let unit = |i: usize| {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    };
    let mut provider = SidecarProvider::new(dim);
    for i in 1..=10u32 {
        provider
            .insert_faq(FaqId::new(i).unwrap(), unit(i as usize - 1))
            .unwrap();
    }
    provider.set_silence(unit(10)).unwrap();
    let mut q = unit(6);
    q[1] = 0.5;
    provider
        .insert_query("KundeEins: Wie bewerbe ich mich?", q)
        .unwrap();
    let sidecar = dir.path().join("vectors.txt");
    std::fs::write(&sidecar, provider.to_sidecar_string()).unwrap();

    let mut config = ServerConfig::new(RankerKind::Dense, write_faqs(dir.path()));
    config.embeddings = Some(sidecar.display().to_string());
    let app = router(Arc::new(AppState::from_config(&config).unwrap()));
    let id = new_session(&app).await;
    let (status, body) = say(&app, &id, "customer", "Wie bewerbe ich mich?").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(slot_classes(&body), vec![json!(7), json!(2)]);
}

#[test]
fn startup_failures() {
    let dir = tempfile::tempdir().unwrap();
    let missing = ServerConfig::new(RankerKind::Bm25, dir.path().join("missing.json"));
    assert!(matches!(
        AppState::from_config(&missing),
        Err(ServerError::Corpus(_))
    ));

    let dense = ServerConfig::new(RankerKind::Dense, write_faqs(dir.path()));
    let err = AppState::from_config(&dense).err().unwrap();
    assert!(err.is_config(), "{err}");

    let mut bad_embeddings = ServerConfig::new(RankerKind::Dense, write_faqs(dir.path()));
    bad_embeddings.embeddings = Some(dir.path().join("nope.txt").display().to_string());
    assert!(AppState::from_config(&bad_embeddings).is_err());
}

#[tokio::test]
async fn bind_reports_port_in_use() {
    let dir = tempfile::tempdir().unwrap();
    let taken = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let mut config = ServerConfig::new(RankerKind::Dumb, write_faqs(dir.path()));
    config.listen = taken.local_addr().unwrap().to_string();
    let err = faq_assist_server::bind(&config).await.err().unwrap();
    assert!(matches!(err, ServerError::Bind { .. }), "{err}");
}
