//! Versioned JSON model documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EnsembleModel;
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "bankcf-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct DocumentRef<'a> {
    format: &'static str,
    version: u32,
    model: &'a EnsembleModel,
}

#[derive(Deserialize)]
struct Document {
    format: String,
    version: u32,
    model: EnsembleModel,
}

pub fn model_to_json(model: &EnsembleModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&DocumentRef {
        format: MODEL_FORMAT,
        version: MODEL_FORMAT_VERSION,
        model,
    })?)
}

/// Parses a model document; when `expected_features` is given the stored
/// feature names must match it exactly.
pub fn model_from_json(text: &str, expected_features: Option<&[String]>) -> Result<EnsembleModel> {
    let doc: Document = serde_json::from_str(text)?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::ModelFormat(format!("unexpected format tag `{}`", doc.format)));
    }
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
            doc.version
        )));
    }
    let m = doc.model;
    if let Some(expected) = expected_features {
        if m.feature_names != expected {
            return Err(Error::ModelFormat(format!(
                "feature mismatch: model has {:?}, expected {:?}",
                m.feature_names, expected
            )));
        }
    }
    if m.trees.is_empty() || m.schema.len() != m.feature_names.len() {
        return Err(Error::ModelFormat("model has no trees or an inconsistent schema".into()));
    }
    for t in &m.trees {
        for node in &t.nodes {
            if let super::Node::Split { feature, left, right, threshold } = node {
                if *feature >= m.feature_names.len() || *left >= t.nodes.len() || *right >= t.nodes.len() || !threshold.is_finite() {
                    return Err(Error::ModelFormat("corrupt split node".into()));
                }
            }
        }
    }
    Ok(m)
}

pub fn save_model(model: &EnsembleModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>, expected_features: Option<&[String]>) -> Result<EnsembleModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text, expected_features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balancing::{LabeledMatrix, SampleWeightVector};
    use crate::trees::{fit_random_forest, ModelKind, TrainConfig};

    fn model() -> EnsembleModel {
        let m = LabeledMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0, 2.0, 2.0, 3.0, 1.0], vec![0, 0, 1, 1]).unwrap();
        let mut cfg = TrainConfig::for_kind(ModelKind::RandomForest, 5);
        cfg.n_trees = 4;
        fit_random_forest(&m, &SampleWeightVector::uniform(4), &cfg).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let m = model();
        let text = model_to_json(&m).unwrap();
        assert_eq!(model_from_json(&text, Some(&m.feature_names)).unwrap(), m);
    }

    #[test]
    fn version_and_features_checked() {
        let m = model();
        let text = model_to_json(&m).unwrap().replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(model_from_json(&text, None), Err(Error::ModelFormat(_))));
        let good = model_to_json(&m).unwrap();
        let wrong = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(model_from_json(&good, Some(&wrong)), Err(Error::ModelFormat(_))));
    }
}
