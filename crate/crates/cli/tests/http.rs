use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use bankcf_cli::{router, Registry, ServeOptions};
use bankcf_core::pipeline::{benchmark::benchmark_factuals, cmd_train, RunConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    _dir: tempfile::TempDir,
    bundle: PathBuf,
    failing: Vec<f64>,
    healthy: Vec<f64>,
    features: Vec<String>,
}

fn fixture() -> &'static Fixture {
    static FIX: OnceLock<Fixture> = OnceLock::new();
    FIX.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let bundle = dir.path().join("rf-ii");
        let mut cfg = RunConfig::with_seed(0);
        cfg.model.n_trees = 30;
        cfg.out_dir = Some(bundle.clone());
        let out = cmd_train(&cfg).unwrap();
        let failing = benchmark_factuals(&out.model, &out.data, 1).remove(0);
        let reference = out.data.reference();
        let healthy = (0..reference.len())
            .map(|i| reference.row_values(i).to_vec())
            .find(|x| out.model.predict_label(x).unwrap() == 0)
            .unwrap();
        Fixture {
            features: out.model.feature_names.clone(),
            _dir: dir,
            bundle,
            failing,
            healthy,
        }
    })
}

fn app() -> Router {
    app_from(&fixture().bundle)
}

fn app_from(path: &Path) -> Router {
    router(Registry::load(&[path.to_path_buf()]).unwrap(), ServeOptions::default()).unwrap()
}

fn indicators(values: &[f64]) -> Value {
    let f = fixture();
    Value::Object(f.features.iter().cloned().zip(values.iter().map(|v| json!(v))).collect())
}

async fn call(app: Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::test]
async fn health_reports_model_count() {
    let (status, body) = call(app(), "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "status": "ok", "models": 1 }));
}

#[tokio::test]
async fn models_list_schema_and_ranges() {
    let (status, body) = call(app(), "GET", "/models", None).await;
    assert_eq!(status, StatusCode::OK);
    let m = &body["models"][0];
    assert_eq!(m["id"], "rf-ii");
    assert_eq!(m["kind"], "RandomForest");
    assert_eq!(m["predictor_group"], "II");
    let feats = m["features"].as_array().unwrap();
    let names: Vec<&str> = feats.iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["TICRC", "NIMY", "INTEXPYQ", "RBCIAAJ", "ROE"]);
    assert_eq!(feats[4]["valid_range"], json!({ "lo": -12000.0, "hi": 1000.0 }));
}

#[tokio::test]
async fn predict_returns_probability_and_label() {
    let f = fixture();
    let (status, body) =
        call(app(), "POST", "/predict", Some(json!({ "model_id": "rf-ii", "indicators": indicators(&f.failing) }))).await;
    assert_eq!(status, StatusCode::OK);
    let p = body["probability"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(body["label"], 1);
}

#[tokio::test]
async fn predict_names_missing_field() {
    let f = fixture();
    let mut ind = indicators(&f.failing);
    ind.as_object_mut().unwrap().remove("ROE");
    let (status, body) = call(app(), "POST", "/predict", Some(json!({ "model_id": "rf-ii", "indicators": ind }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let fields = body["fields"].as_array().unwrap();
    assert_eq!(fields.len(), 1);
    assert_eq!(fields[0]["field"], "ROE");
}

#[tokio::test]
async fn out_of_range_and_malformed_bodies_are_400() {
    let f = fixture();
    let mut ind = indicators(&f.failing);
    ind["ROE"] = json!(5000.0);
    let (status, body) = call(app(), "POST", "/predict", Some(json!({ "model_id": "rf-ii", "indicators": ind }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["fields"][0]["field"], "ROE");
    let (status, body) = call(app(), "POST", "/predict", Some(json!({ "indicators": {} }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["fields"][0]["field"], "body");
}

#[tokio::test]
async fn unknown_model_is_404() {
    let f = fixture();
    let req = json!({ "model_id": "nope", "indicators": indicators(&f.failing) });
    let (status, _) = call(app(), "POST", "/predict", Some(req.clone())).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, body) = call(app(), "POST", "/counterfactuals", Some(req)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
}

#[tokio::test]
async fn nice_counterfactuals_are_valid() {
    let f = fixture();
    let req = json!({ "model_id": "rf-ii", "indicators": indicators(&f.failing), "method": "NICE" });
    let (status, body) = call(app(), "POST", "/counterfactuals", Some(req)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "counterfactuals_found");
    let cfs = body["counterfactuals"].as_array().unwrap();
    assert!(!cfs.is_empty() && cfs.len() <= 5);
    for cf in cfs {
        assert_eq!(cf["desiderata"]["valid_flip"], true);
        assert!(cf["deltas"].as_array().unwrap().iter().any(|d| d["direction"] != "unchanged"));
    }
}

#[tokio::test]
async fn healthy_bank_needs_no_search() {
    let f = fixture();
    let req = json!({ "model_id": "rf-ii", "indicators": indicators(&f.healthy), "method": "MOC" });
    let (status, body) = call(app(), "POST", "/counterfactuals", Some(req)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "no_action_needed");
    assert_eq!(body["counterfactuals"], json!([]));
}

#[tokio::test]
async fn everything_frozen_is_422_with_reason() {
    let f = fixture();
    let req = json!({
        "model_id": "rf-ii",
        "indicators": indicators(&f.failing),
        "method": "NICE",
        "frozen_features": f.features,
    });
    let (status, body) = call(app(), "POST", "/counterfactuals", Some(req)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["status"], "no_counterfactual");
    assert!(!body["reason"].as_str().unwrap().is_empty());
}

#[tokio::test]
async fn bad_method_and_frozen_names_are_field_errors() {
    let f = fixture();
    let req = json!({
        "model_id": "rf-ii",
        "indicators": indicators(&f.failing),
        "method": "gradient",
        "frozen_features": ["XYZ"],
    });
    let (status, body) = call(app(), "POST", "/counterfactuals", Some(req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let fields: Vec<&str> = body["fields"].as_array().unwrap().iter().map(|e| e["field"].as_str().unwrap()).collect();
    assert_eq!(fields, ["method", "frozen_features"]);
}

#[tokio::test]
async fn cors_headers_are_sent() {
    let req = Request::builder()
        .uri("/health")
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_requests_agree() {
    let f = fixture();
    let app = app();
    let cf = json!({ "model_id": "rf-ii", "indicators": indicators(&f.failing), "method": "MOC", "max_counterfactuals": 3 });
    let pr = json!({ "model_id": "rf-ii", "indicators": indicators(&f.failing) });
    let (a, b, c, d) = tokio::join!(
        call(app.clone(), "POST", "/counterfactuals", Some(cf.clone())),
        call(app.clone(), "POST", "/predict", Some(pr.clone())),
        call(app.clone(), "POST", "/counterfactuals", Some(cf)),
        call(app.clone(), "POST", "/predict", Some(pr)),
    );
    assert_eq!(a.0, StatusCode::OK);
    assert_eq!(a, c);
    assert_eq!(b, d);
}

#[test]
fn directory_of_bundles_loads_each() {
    let f = fixture();
    let parent = f.bundle.parent().unwrap();
    let reg = Registry::load(&[parent.to_path_buf()]).unwrap();
    assert_eq!(reg.len(), 1);
    assert!(reg.get("rf-ii").is_some());
    assert!(Registry::load(&[f.bundle.join("missing")]).is_err());
}
