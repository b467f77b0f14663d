//! Per-counterfactual quality scores.
//!
//! Two validity notions are kept: `valid_flip` (the model now predicts the
//! desired class) and `valid_threshold` (the counterfactual lies within
//! `epsilon` of the factual). Plausibility is the mean distance to the
//! `k_plaus` nearest training rows, so lower means more plausible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cfgen::distance::{gower_unchecked, l1_unchecked};
use crate::cfgen::{changed_features, Counterfactual, PlausibilityIndex, DEFAULT_PLAUSIBILITY_K};
use crate::dataset::{DataTable, FeatureSpec};
use crate::trees::EnsembleModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceKind {
    #[default]
    Gower,
    #[serde(rename = "HEOM")]
    Heom,
}

impl DistanceKind {
    pub fn distance(self, a: &[f64], b: &[f64], specs: &[FeatureSpec]) -> f64 {
        match self {
            DistanceKind::Gower => gower_unchecked(a, b, specs),
            DistanceKind::Heom => l1_unchecked(a, b, specs),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceKind::Gower => "Gower",
            DistanceKind::Heom => "HEOM",
        })
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gower" => Ok(DistanceKind::Gower),
            "heom" => Ok(DistanceKind::Heom),
            _ => Err(Error::Config(format!("unknown distance `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesiderataConfig {
    pub epsilon: f64,
    pub k_plaus: usize,
    pub distance: DistanceKind,
}

impl Default for DesiderataConfig {
    fn default() -> Self {
        DesiderataConfig {
            epsilon: 0.5,
            k_plaus: DEFAULT_PLAUSIBILITY_K,
            distance: DistanceKind::Gower,
        }
    }
}

impl DesiderataConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.k_plaus == 0 {
            return Err(Error::Config("k_plaus must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesiderataRecord {
    pub valid_flip: bool,
    pub valid_threshold: bool,
    pub proximity: f64,
    pub sparsity: usize,
    pub plausibility: f64,
}

/// Scores many counterfactuals against one model and training table.
#[derive(Debug, Clone)]
pub struct DesiderataScorer<'a> {
    model: &'a EnsembleModel,
    index: PlausibilityIndex,
    config: DesiderataConfig,
}

impl<'a> DesiderataScorer<'a> {
    pub fn new(model: &'a EnsembleModel, training: &DataTable, config: DesiderataConfig) -> Result<Self> {
        config.validate()?;
        Ok(DesiderataScorer {
            model,
            index: PlausibilityIndex::new(training, &model.schema, config.k_plaus)?,
            config,
        })
    }

    /// Scores `values` as a counterfactual for `factual`; the desired class is
    /// the opposite of the factual's predicted label.
    pub fn score_values(&self, factual: &[f64], values: &[f64]) -> Result<DesiderataRecord> {
        let desired = 1 - self.model.predict_label(factual)?;
        let label = self.model.predict_label(values)?;
        let schema = &self.model.schema;
        let proximity = self.config.distance.distance(factual, values, schema);
        Ok(DesiderataRecord {
            valid_flip: label == desired,
            valid_threshold: proximity <= self.config.epsilon,
            proximity,
            sparsity: changed_features(schema, factual, values).len(),
            plausibility: self.index.mean_knn_distance(values),
        })
    }

    pub fn score(&self, factual: &[f64], cf: &Counterfactual) -> Result<DesiderataRecord> {
        self.score_values(factual, &cf.values)
    }
}

pub fn desiderata(
    factual: &[f64],
    cf: &Counterfactual,
    model: &EnsembleModel,
    training: &DataTable,
    config: &DesiderataConfig,
) -> Result<DesiderataRecord> {
    DesiderataScorer::new(model, training, *config)?.score(factual, cf)
}
