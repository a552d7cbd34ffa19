mod common;

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use axum::Router;
use oius::model_tools::models;
use oius_service::{http::router, PatientRecord, UpdateSession, AND_PROPOSITION};
use serde_json::{json, Value};
use tower::ServiceExt;

use common::{example2, store};

fn app(token: Option<&str>) -> Router {
    router(Arc::new(store()), "autonomy-submodel", token.map(String::from))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_with(app, method, uri, body.map(|b| b.to_string()), None).await
}

async fn call_with(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<String>,
    token: Option<&str>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header(header::CONTENT_TYPE, "application/json").body(Body::from(b)),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn seed_body() -> Value {
    let obs: Vec<Value> = example2()
        .iter()
        .map(|o| json!({ "variable": o.variable, "state": o.state, "timestamp": o.timestamp }))
        .collect();
    json!({ "patient_id": "wilson", "observations": obs })
}

fn error_code(body: &Value) -> &str {
    assert!(body["message"].is_string(), "{body}");
    body["code"].as_str().unwrap()
}

#[tokio::test]
async fn review_round_trip() {
    let app = app(None);
    let (status, record) = call(&app, "POST", "/patients", Some(seed_body())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(record["revision"], 1);
    assert_eq!(record["observations"]["livesAlone"], json!({ "state": "1", "timestamp": 12 }));

    let new = json!({ "variable": "autonomyLoss", "state": "1", "timestamp": 20 });
    let (status, session) = call(&app, "POST", "/patients/wilson/observations", Some(new)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(session["state"], "open");
    let text = session["recommendation"].as_str().unwrap();
    assert!(text.contains("(leaf muscleImpairment 0 5 p=0.1904 proposed=1"), "{text}");
    let id = session["session_id"].as_str().unwrap().to_string();
    let (_, again) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(again, session);

    let session: UpdateSession = serde_json::from_value(session).unwrap();
    let tree = session.recommendation.unwrap();
    let mut decisions = serde_json::Map::new();
    for g in &tree.groups {
        for l in &g.and_set {
            decisions.insert(l.variable.clone(), json!({ "decision": "delete" }));
        }
        if let Some(first) = g.or_set.first() {
            decisions.insert(first.variable.clone(), json!({ "decision": "replace", "state": first.proposed_state }));
        }
    }
    let (status, outcome) =
        call(&app, "POST", &format!("/sessions/{id}/commit"), Some(json!({ "decisions": decisions }))).await;
    assert_eq!(status, StatusCode::OK, "{outcome}");
    assert_eq!(outcome["session"]["state"], "committed");
    assert_eq!(outcome["sweep"], json!([]));
    assert!(outcome["residual_session"].is_null());

    let (_, record) = call(&app, "GET", "/patients/wilson", None).await;
    assert_eq!(record, outcome["record"]);
    let record: PatientRecord = serde_json::from_value(record).unwrap();
    assert_eq!(record.revision, 2);
    assert_eq!(record.replay().unwrap(), record.observations);
    assert_eq!(record.observations.get("muscleImpairment").unwrap().state, "1");
}

#[tokio::test]
async fn consistent_submission_commits_and_predicts() {
    let app = app(None);
    call(&app, "POST", "/patients", Some(seed_body())).await;
    let new = json!({ "variable": "autonomyLoss", "state": "0" });
    let (status, session) = call(&app, "POST", "/patients/wilson/observations", Some(new)).await;
    assert_eq!((status, session["state"].as_str()), (StatusCode::CREATED, Some("committed")));
    assert!(session["recommendation"].is_null());
    // a missing timestamp takes the store clock
    assert_eq!(session["new_observation"]["timestamp"], common::NOW);

    let (_, empty) = call(&app, "POST", "/patients", Some(json!({}))).await;
    let empty = empty["patient_id"].as_str().unwrap();
    let (status, p) = call(&app, "GET", &format!("/patients/{empty}/predict?variable=autonomyLoss"), None).await;
    assert_eq!(status, StatusCode::OK);
    let prior = models::autonomy_submodel().posterior(&Default::default(), "autonomyLoss").unwrap();
    let mode = usize::from(prior[1] > prior[0]);
    assert_eq!(p, json!({ "variable": "autonomyLoss", "state": mode.to_string(), "confidence": prior[mode] }));

    let (status, body) = call(&app, "GET", "/patients/wilson/predict?variable=autonomyLoss", None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::CONFLICT, "target_observed"));
}

#[tokio::test]
async fn errors_carry_code_and_message() {
    let app = app(None);
    let (status, body) = call(&app, "GET", "/patients/nobody", None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::NOT_FOUND, "unknown_patient"));
    let (status, body) = call(&app, "GET", "/sessions/s42", None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::NOT_FOUND, "unknown_session"));

    call(&app, "POST", "/patients", Some(seed_body())).await;
    let (status, body) = call(&app, "POST", "/patients", Some(seed_body())).await;
    assert_eq!((status, error_code(&body)), (StatusCode::CONFLICT, "patient_exists"));
    let dup = json!({ "variable": "sex", "state": "1" });
    let (status, body) = call(&app, "POST", "/patients/wilson/observations", Some(dup)).await;
    assert_eq!((status, error_code(&body)), (StatusCode::CONFLICT, "duplicate_observation"));
    assert!(body["message"].as_str().unwrap().starts_with("duplicate observation"));
    let bad = json!({ "variable": "sex", "state": "maybe" });
    let (status, body) = call(&app, "POST", "/patients/wilson/observations", Some(bad)).await;
    assert_eq!((status, error_code(&body)), (StatusCode::UNPROCESSABLE_ENTITY, "invalid_observation"));
    let (status, body) =
        call_with(&app, "POST", "/patients/wilson/observations", Some("{not json".into()), None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::BAD_REQUEST, "bad_request"));
    let (status, body) = call(&app, "GET", "/patients/wilson/predict", None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::BAD_REQUEST, "bad_request"));

    let new = json!({ "variable": "autonomyLoss", "state": "1" });
    let (_, first) = call(&app, "POST", "/patients/wilson/observations", Some(new.clone())).await;
    let (_, second) = call(&app, "POST", "/patients/wilson/observations", Some(new)).await;
    let commit = |s: &Value| format!("/sessions/{}/commit", s["session_id"].as_str().unwrap());

    let keep_all = json!({ "decisions": { "livesAlone": { "decision": "keep" } } });
    let (status, body) = call(&app, "POST", &commit(&first), Some(keep_all)).await;
    assert_eq!((status, error_code(&body)), (StatusCode::UNPROCESSABLE_ENTITY, "invariant_violated"));
    assert!(body["message"].as_str().unwrap().contains(AND_PROPOSITION));

    let valid = json!({ "decisions": {
        "livesAlone": { "decision": "delete" }, "getUpAlone": { "decision": "delete" },
        "doShopping": { "decision": "delete" }, "driveCar": { "decision": "delete" },
        "muscleImpairment": { "decision": "delete" },
    }});
    assert_eq!(call(&app, "POST", &commit(&first), Some(valid.clone())).await.0, StatusCode::OK);
    let (status, body) = call(&app, "POST", &commit(&second), Some(valid.clone())).await;
    assert_eq!((status, error_code(&body)), (StatusCode::CONFLICT, "stale_revision"));
    let (status, body) = call(&app, "POST", &commit(&first), Some(valid)).await;
    assert_eq!((status, error_code(&body)), (StatusCode::CONFLICT, "session_not_open"));
}

#[tokio::test]
async fn token_is_required_when_configured() {
    let app = app(Some("sesame"));
    let (status, body) = call_with(&app, "GET", "/model", None, None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::UNAUTHORIZED, "unauthorized"));
    let (status, _) = call_with(&app, "GET", "/model", None, Some("wrong")).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let (status, _) = call_with(&app, "GET", "/model", None, Some("sesame")).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn model_lists_variables_states_and_parents() {
    let (status, model) = call(&app(None), "GET", "/model", None).await;
    assert_eq!(status, StatusCode::OK);
    let net = models::autonomy_submodel();
    assert_eq!(model["network"], "autonomy-submodel");
    assert_eq!((model["epsilon"].as_f64(), model["clamp_floor"].as_f64()), (Some(1e-2), Some(net.clamp_floor())));
    let vars = model["variables"].as_array().unwrap();
    assert_eq!(vars.len(), net.len());
    for (id, v) in vars.iter().enumerate() {
        assert_eq!(v["name"], net.variable(id).name);
        assert_eq!(v["states"], json!(net.variable(id).states));
        let parents: Vec<&str> = net.parents(id).iter().map(|&p| net.variable(p).name.as_str()).collect();
        assert_eq!(v["parents"], json!(parents));
    }
}
