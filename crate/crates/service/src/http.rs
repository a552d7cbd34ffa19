//! JSON over HTTP.
//!
//! | method | path | body | returns |
//! |---|---|---|---|
//! | POST | `/patients` | `{patient_id?, observations?}` | `PatientRecord` |
//! | GET | `/patients/{id}` | | `PatientRecord` |
//! | POST | `/patients/{id}/observations` | `{variable, state, timestamp?}` | `UpdateSession` |
//! | GET | `/sessions/{id}` | | `UpdateSession` |
//! | POST | `/sessions/{id}/commit` | `{decisions}` | `CommitOutcome` |
//! | GET | `/patients/{id}/predict?variable=X` | | `Prediction` |
//! | GET | `/model` | | `ModelInfo` |
//!
//! Errors come back as `{code, message}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use oius::detection::{Observation, Timestamp};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ServiceError;
use crate::store::{Decision, Store};

#[derive(Clone)]
struct App {
    store: Arc<Store>,
    network: String,
    token: Option<String>,
}

/// An observation as sent by clients; a missing timestamp means now.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservationInput {
    pub variable: String,
    pub state: String,
    #[serde(default)]
    pub timestamp: Option<Timestamp>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct CreatePatient {
    #[serde(default)]
    pub patient_id: Option<String>,
    #[serde(default)]
    pub observations: Vec<ObservationInput>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct CommitRequest {
    #[serde(default)]
    pub decisions: BTreeMap<String, Decision>,
}

#[derive(Debug, Deserialize)]
struct PredictQuery {
    variable: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VariableInfo {
    pub name: String,
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub parents: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelInfo {
    pub network: String,
    pub epsilon: f64,
    pub clamp_floor: f64,
    pub variables: Vec<VariableInfo>,
}

/// Error body `{code, message}` with a matching status.
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        use ServiceError::*;
        let status = match &e {
            UnknownPatient(_) | UnknownSession(_) => StatusCode::NOT_FOUND,
            PatientExists(_) | DuplicateObservation { .. } | SessionNotOpen { .. } | StaleRevision { .. }
            | TargetObserved(_) => StatusCode::CONFLICT,
            InvalidPatientId(_) | InvalidObservation(_) | InconsistentRecord(_) | InvalidDecision(_)
            | InvariantViolated { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            Inference(_) | Storage(_) | Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self { status, code: e.code(), message: e.to_string() }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "bad_request", message: e.body_text() }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "bad_request", message: e.body_text() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs a store call off the async workers; inference can take a while.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::from(ServiceError::Storage(format!("worker failed: {e}"))))?
        .map_err(ApiError::from)
}

impl ObservationInput {
    fn into_observation(self, now: Timestamp) -> Observation {
        Observation::new(self.variable, self.state, self.timestamp.unwrap_or(now))
    }
}

/// The API routes. `network` is reported by `GET /model`.
pub fn router(store: Arc<Store>, network: impl Into<String>, token: Option<String>) -> Router {
    let app = App { store, network: network.into(), token };
    Router::new()
        .route("/patients", post(create_patient))
        .route("/patients/{id}", get(get_patient))
        .route("/patients/{id}/observations", post(submit_observation))
        .route("/patients/{id}/predict", get(predict))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/commit", post(commit_session))
        .route("/model", get(model))
        .layer(middleware::from_fn_with_state(app.clone(), authorize))
        .with_state(app)
}

async fn authorize(State(app): State<App>, request: Request, next: Next) -> Response {
    if let Some(token) = &app.token {
        let given = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError {
                status: StatusCode::UNAUTHORIZED,
                code: "unauthorized",
                message: "missing or wrong API token".into(),
            }
            .into_response();
        }
    }
    next.run(request).await
}

async fn create_patient(
    State(app): State<App>,
    body: Result<Json<CreatePatient>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(body) = body?;
    let now = app.store.now();
    let initial = body.observations.into_iter().map(|o| o.into_observation(now)).collect();
    let record = blocking(move || app.store.create_patient(body.patient_id, initial)).await?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn get_patient(State(app): State<App>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.store.patient(&id)?))
}

async fn submit_observation(
    State(app): State<App>,
    Path(id): Path<String>,
    body: Result<Json<ObservationInput>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(input) = body?;
    let obs = input.into_observation(app.store.now());
    let session = blocking(move || app.store.submit_observation(&id, obs)).await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(app): State<App>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.store.session(&id)?))
}

async fn commit_session(
    State(app): State<App>,
    Path(id): Path<String>,
    body: Result<Json<CommitRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(body) = body?;
    let outcome = blocking(move || app.store.commit_session(&id, body.decisions)).await?;
    Ok(Json(outcome))
}

async fn predict(
    State(app): State<App>,
    Path(id): Path<String>,
    query: Result<Query<PredictQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = query?;
    let prediction = blocking(move || app.store.predict(&id, &q.variable)).await?;
    Ok(Json(prediction))
}

async fn model(State(app): State<App>) -> Json<ModelInfo> {
    let net = app.store.network();
    let variables = net
        .variables()
        .iter()
        .enumerate()
        .map(|(id, v)| VariableInfo {
            name: v.name.clone(),
            states: v.states.clone(),
            description: v.description.clone(),
            parents: net.parents(id).iter().map(|&p| net.variable(p).name.clone()).collect(),
        })
        .collect();
    Json(ModelInfo {
        network: app.network.clone(),
        epsilon: app.store.epsilon(),
        clamp_floor: net.clamp_floor(),
        variables,
    })
}
