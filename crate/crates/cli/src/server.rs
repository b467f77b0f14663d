//! JSON-over-HTTP access to served models.
//!
//! | route                   | body                                                        |
//! |-------------------------|-------------------------------------------------------------|
//! | `GET /health`           |                                                             |
//! | `GET /models`           |                                                             |
//! | `POST /predict`         | `{model_id, indicators}`                                    |
//! | `POST /counterfactuals` | `{model_id, indicators, method, frozen_features, max_counterfactuals}` |
//!
//! Every request is answered from immutable shared models, so responses do not
//! depend on how concurrent requests interleave.

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bankcf_core::cfgen::CfMethod;
use bankcf_core::evaluation::DesiderataScorer;
use bankcf_core::pipeline::explain::{explain_in, validate_indicators, ExplainOptions, ExplanationStatus, FieldError};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::bundle::{ModelBundle, Registry};

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Counterfactuals returned when the request does not say.
    pub max_counterfactuals: usize,
    /// Search budget per request; only MOC can run long enough to hit it.
    pub time_budget: Duration,
    /// Browser origin allowed by CORS; any origin when unset.
    pub allowed_origin: Option<String>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            max_counterfactuals: 5,
            time_budget: Duration::from_secs(10),
            allowed_origin: None,
        }
    }
}

struct AppState {
    registry: Registry,
    opts: ServeOptions,
}

#[derive(Debug)]
enum ApiError {
    BadRequest(Vec<FieldError>),
    UnknownModel(String),
    NoCounterfactual(Value),
    Internal(String),
}

fn field(name: &str, message: impl Into<String>) -> FieldError {
    FieldError {
        field: name.to_string(),
        message: message.into(),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(fields) => (
                StatusCode::BAD_REQUEST,
                json!({ "error": "invalid request", "fields": fields }),
            ),
            ApiError::UnknownModel(id) => (
                StatusCode::NOT_FOUND,
                json!({ "error": format!("unknown model `{id}`") }),
            ),
            ApiError::NoCounterfactual(doc) => (StatusCode::UNPROCESSABLE_ENTITY, doc),
            ApiError::Internal(msg) => {
                log::error!("request failed: {msg}");
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": msg }))
            }
        };
        (status, Json(body)).into_response()
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::BadRequest(vec![field("body", e.body_text())]))
}

#[derive(Debug, Deserialize)]
struct PredictRequest {
    model_id: String,
    indicators: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
struct CounterfactualRequest {
    model_id: String,
    indicators: Map<String, Value>,
    #[serde(default)]
    method: Option<String>,
    #[serde(default)]
    frozen_features: Vec<String>,
    #[serde(default)]
    max_counterfactuals: Option<usize>,
}

fn lookup<'a>(state: &'a AppState, id: &str) -> Result<&'a ModelBundle, ApiError> {
    state.registry.get(id).ok_or_else(|| ApiError::UnknownModel(id.to_string()))
}

fn factual(bundle: &ModelBundle, indicators: &Map<String, Value>) -> Result<Vec<f64>, ApiError> {
    validate_indicators(&bundle.model.schema, indicators).map_err(ApiError::BadRequest)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "status": "ok", "models": state.registry.len() }))
}

async fn models(State(state): State<Arc<AppState>>) -> Json<Value> {
    let list: Vec<Value> = state
        .registry
        .iter()
        .map(|b| {
            let m = &b.model.metadata;
            json!({
                "id": b.id,
                "kind": b.model.kind,
                "predictor_group": m.predictor_group,
                "strategy": m.strategy,
                "config_hash": m.config_hash,
                "features": b.model.schema,
            })
        })
        .collect();
    Json(json!({ "models": list }))
}

async fn predict(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<PredictRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let req = body(payload)?;
    let bundle = lookup(&state, &req.model_id)?;
    let x = factual(bundle, &req.indicators)?;
    let p = bundle.model.predict_proba(&x).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(json!({
        "model_id": bundle.id,
        "probability": p,
        "label": bundle.model.label_for(p),
    })))
}

fn explain_request(state: &AppState, req: CounterfactualRequest) -> Result<Value, ApiError> {
    let bundle = lookup(state, &req.model_id)?;
    let mut errors = Vec::new();
    let method = match req.method.as_deref() {
        None => Some(CfMethod::Nice),
        Some(m) => m
            .parse::<CfMethod>()
            .map_err(|_| errors.push(field("method", format!("`{m}` is not one of WhatIf, NICE, MOC"))))
            .ok(),
    };
    let schema = &bundle.model.schema;
    for f in &req.frozen_features {
        if !schema.iter().any(|s| &s.name == f) {
            errors.push(field("frozen_features", format!("`{f}` is not a feature of this model")));
        }
    }
    let max = req.max_counterfactuals.unwrap_or(state.opts.max_counterfactuals);
    if max == 0 {
        errors.push(field("max_counterfactuals", "must be at least 1"));
    }
    let x = match validate_indicators(schema, &req.indicators) {
        Ok(x) => Some(x),
        Err(e) => {
            errors.extend(e);
            None
        }
    };
    let (Some(method), Some(x), true) = (method, x, errors.is_empty()) else {
        return Err(ApiError::BadRequest(errors));
    };

    let mut opts = ExplainOptions::new(method);
    opts.frozen = req.frozen_features.into_iter().collect();
    opts.max_counterfactuals = max;
    opts.deadline = Some(Instant::now() + state.opts.time_budget);
    let internal = |e: bankcf_core::Error| ApiError::Internal(e.to_string());
    let ctx = bundle.context();
    let scorer = DesiderataScorer::new(&bundle.model, &bundle.reference, opts.desiderata).map_err(internal)?;
    let doc = explain_in(&ctx, &scorer, Default::default(), x, &opts).map_err(internal)?;
    let mut value = serde_json::to_value(&doc).map_err(|e| ApiError::Internal(e.to_string()))?;
    value["model_id"] = json!(bundle.id);
    if doc.status == ExplanationStatus::NoCounterfactual {
        value["error"] = json!("no counterfactual found");
        return Err(ApiError::NoCounterfactual(value));
    }
    Ok(value)
}

async fn counterfactuals(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<CounterfactualRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let req = body(payload)?;
    // The searches are CPU-bound; keep them off the async workers.
    tokio::task::spawn_blocking(move || explain_request(&state, req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map(Json)
}

fn cors(opts: &ServeOptions) -> anyhow::Result<CorsLayer> {
    let origin = match &opts.allowed_origin {
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o)?),
        None => AllowOrigin::any(),
    };
    Ok(CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]))
}

pub fn router(registry: Registry, opts: ServeOptions) -> anyhow::Result<Router> {
    let layer = cors(&opts)?;
    let state = Arc::new(AppState { registry, opts });
    Ok(Router::new()
        .route("/health", get(health))
        .route("/models", get(models))
        .route("/predict", post(predict))
        .route("/counterfactuals", post(counterfactuals))
        .layer(layer)
        .with_state(state))
}
