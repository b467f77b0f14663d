mod common;

use std::fs;

use bankcf_core::cfgen::CfMethod;
use bankcf_core::dataset::{save_csv, synth};
use bankcf_core::evaluation::{DesiderataConfig, DesiderataScorer};
use bankcf_core::pipeline::explain::{cmd_explain, explain_in, BankInput, ExplainOptions, ExplanationStatus, Subject};
use bankcf_core::pipeline::{cmd_train, prepare_data, DataSource, RunConfig};
use bankcf_core::Error;
use common::Desk;

fn cfg_in(dir: &std::path::Path, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::with_seed(seed);
    cfg.model.n_trees = 20;
    cfg.out_dir = Some(dir.to_path_buf());
    cfg
}

#[test]
fn training_twice_writes_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = cmd_train(&cfg_in(a.path(), 4)).unwrap().files;
    let fb = cmd_train(&cfg_in(b.path(), 4)).unwrap().files;
    assert_eq!(fa.len(), 5);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert!(fs::read(x).unwrap() == fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn invalid_strategy_is_a_config_error() {
    let e = RunConfig::from_toml("seed = 1\n[model]\nstrategy = \"Bogus\"\n").unwrap_err();
    assert!(matches!(e, Error::Config(_)), "{e}");
    let e = RunConfig::from_toml("seed = 1\nunknown_key = 3\n").unwrap_err();
    assert!(matches!(e, Error::Config(_)));
}

#[test]
fn missing_seed_is_rejected() {
    let e = prepare_data(&RunConfig::default()).unwrap_err();
    assert!(e.to_string().contains("seed"), "{e}");
}

#[test]
fn errors_name_their_stage() {
    let mut cfg = RunConfig::with_seed(1);
    cfg.data.source = DataSource::Csv;
    cfg.data.path = Some("/nonexistent/banks.csv".into());
    let e = prepare_data(&cfg).unwrap_err();
    assert!(matches!(e, Error::Stage { stage: "ingest", .. }), "{e}");
    assert!(e.to_string().starts_with("ingest failed"));
}

#[test]
fn failed_write_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    // A directory where a file should go makes the second write fail.
    fs::create_dir(dir.path().join("reference.csv")).unwrap();
    let e = cmd_train(&cfg_in(dir.path(), 2)).err().unwrap();
    assert!(matches!(e, Error::Stage { stage: "write", .. }), "{e}");
    assert!(!dir.path().join("model.json").exists());
}

#[test]
fn csv_source_matches_bundled_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("banks.csv");
    save_csv(&synth::desk_table(), &path).unwrap();
    let bundled = prepare_data(&RunConfig::with_seed(3)).unwrap();
    let mut cfg = RunConfig::with_seed(3);
    cfg.apply_env(|k| (k == "BANKCF_DATA_CSV").then(|| path.display().to_string())).unwrap();
    let from_csv = prepare_data(&cfg).unwrap();
    assert_eq!(bundled.split.in_sample.rows(), from_csv.split.in_sample.rows());
    assert_eq!(bundled.split.out_of_time.rows(), from_csv.split.out_of_time.rows());
}

#[test]
fn healthy_bank_needs_no_action() {
    let d = Desk::new(0);
    let ctx = d.context();
    let scorer = DesiderataScorer::new(&d.model, d.data.reference(), DesiderataConfig::default()).unwrap();
    let healthy = (0..d.data.reference().len())
        .map(|i| d.data.reference().row_values(i).to_vec())
        .find(|x| d.model.predict_label(x).unwrap() == 0)
        .unwrap();
    let doc = explain_in(&ctx, &scorer, Subject::default(), healthy, &ExplainOptions::new(CfMethod::Moc)).unwrap();
    assert_eq!(doc.status, ExplanationStatus::NoActionNeeded);
    assert!(doc.counterfactuals.is_empty());
    assert!(doc.render_text().contains("No action needed"));
}

#[test]
fn explain_from_files_reports_field_errors() {
    let dir = tempfile::tempdir().unwrap();
    cmd_train(&cfg_in(dir.path(), 5)).unwrap();
    let input: BankInput = serde_json::from_str(r#"{"bank_id": "77", "indicators": {"ROE": 1.0, "TICRC": 0.5}}"#).unwrap();
    let e = cmd_explain(
        &dir.path().join("model.json"),
        &dir.path().join("reference.csv"),
        input,
        &ExplainOptions::new(CfMethod::WhatIf),
    )
    .unwrap_err();
    let msg = e.to_string();
    for field in ["TICRC", "NIMY", "INTEXPYQ", "RBCIAAJ"] {
        assert!(msg.contains(field), "{msg}");
    }
}

#[test]
fn explain_from_files_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_train(&cfg_in(dir.path(), 5)).unwrap();
    let factual = bankcf_core::pipeline::benchmark::benchmark_factuals(&out.model, &out.data, 1).remove(0);
    let indicators = out
        .model
        .feature_names
        .iter()
        .cloned()
        .zip(factual.iter().map(|v| serde_json::json!(v)))
        .collect();
    let input = BankInput { subject: Subject { bank_id: Some("9".into()), report_date: None }, indicators };
    let doc = cmd_explain(
        &dir.path().join("model.json"),
        &dir.path().join("reference.csv"),
        input,
        &ExplainOptions::new(CfMethod::WhatIf),
    )
    .unwrap();
    assert_eq!(doc.status, ExplanationStatus::CounterfactualsFound);
    assert_eq!(doc.factual, factual);
    assert!(doc.counterfactuals.iter().all(|c| c.label == 0));
    let json: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
    assert_eq!(json["bank_id"], "9");
    assert_eq!(json["status"], "counterfactuals_found");
}

#[test]
fn factual_cap_bounds_cell_counts() {
    let mut cfg = RunConfig::with_seed(6);
    cfg.model.n_trees = 10;
    cfg.counterfactuals.factual_cap = 5;
    cfg.counterfactuals.moc.generations = 10;
    let data = prepare_data(&cfg).unwrap();
    let grid = bankcf_core::pipeline::run_benchmark(&data, &cfg).unwrap();
    assert_eq!(grid.cells.len(), 45);
    for (key, cell) in &grid.cells {
        assert!(cell.factuals <= 5, "{key}");
        for stat in cell.metrics.values() {
            assert!(stat.n <= 5 * cfg.counterfactuals.max_per_factual, "{key}");
        }
    }
}
