//! CART decision trees, random forests and extra-trees ensembles.
//!
//! Trees are stored as flat node arrays (root at index 0). Ensembles average
//! the per-tree leaf positive fractions. Each tree draws its randomness from
//! `seed` and its own index, so parallel and sequential fits agree.

mod cart;
mod serial;

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::balancing::{LabeledMatrix, SampleWeightVector, StrategyTag};
use crate::dataset::{FeatureSpec, PredictorGroup};
use crate::{par, rng, Error, Result};

pub use serial::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        positive_mass: f64,
        total_weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { positive_mass, .. } => return *positive_mass,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    /// Split (feature, threshold) pairs in pre-order.
    pub fn split_sequence(&self) -> Vec<(usize, f64)> {
        fn walk(t: &Tree, at: usize, out: &mut Vec<(usize, f64)>) {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = &t.nodes[at]
            {
                out.push((*feature, *threshold));
                walk(t, *left, out);
                walk(t, *right, out);
            }
        }
        let mut out = Vec::new();
        walk(self, 0, &mut out);
        out
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.root(), Node::Leaf { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    ExtraTrees,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::DecisionTree, ModelKind::RandomForest, ModelKind::ExtraTrees];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::DecisionTree => "DecisionTree",
            ModelKind::RandomForest => "RandomForest",
            ModelKind::ExtraTrees => "ExtraTrees",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "decisiontree" | "tree" | "dt" => Ok(ModelKind::DecisionTree),
            "randomforest" | "forest" | "rf" => Ok(ModelKind::RandomForest),
            "extratrees" | "et" => Ok(ModelKind::ExtraTrees),
            _ => Err(Error::Config(format!("unknown model kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Candidate features per split; `None` picks the kind's default
    /// (all features for a single tree, `ceil(sqrt(d))` for ensembles).
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn for_kind(kind: ModelKind, seed: u64) -> Self {
        TrainConfig {
            n_trees: if kind == ModelKind::DecisionTree { 1 } else { 100 },
            max_depth: None,
            min_samples_split: 2,
            mtry: None,
            bootstrap: kind == ModelKind::RandomForest,
            seed,
        }
    }

    fn resolved_mtry(&self, kind: ModelKind, d: usize) -> Result<usize> {
        let m = self.mtry.unwrap_or(match kind {
            ModelKind::DecisionTree => d,
            _ => (d as f64).sqrt().ceil() as usize,
        });
        if m == 0 || m > d {
            return Err(Error::Parameter(format!("mtry {m} must lie in 1..={d}")));
        }
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.min_samples_split == 0 || self.max_depth == Some(0) {
            return Err(Error::Parameter("tree counts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictor_group: Option<PredictorGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub kind: ModelKind,
    pub trees: Vec<Tree>,
    pub feature_names: Vec<String>,
    /// Feature specs with the observed ranges frozen at training time.
    pub schema: Vec<FeatureSpec>,
    pub train_config: TrainConfig,
    pub decision_threshold: f64,
    #[serde(default)]
    pub metadata: ModelMetadata,
}

impl EnsembleModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Replaces the generic column names with a real schema.
    pub fn with_schema(mut self, schema: Vec<FeatureSpec>) -> Result<Self> {
        if schema.len() != self.n_features() {
            return Err(Error::Shape {
                expected: self.n_features(),
                got: schema.len(),
            });
        }
        self.feature_names = schema.iter().map(|s| s.name.clone()).collect();
        self.schema = schema;
        Ok(self)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::Shape {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("feature `{}` is not finite", self.feature_names[j])));
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.proba_unchecked(x))
    }

    /// Mean leaf positive fraction; `x` must already be validated.
    pub fn proba_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_value(x)).sum();
        sum / self.trees.len() as f64
    }

    pub fn label_for(&self, proba: f64) -> u8 {
        u8::from(proba >= self.decision_threshold)
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<u8> {
        Ok(self.label_for(self.predict_proba(x)?))
    }

    pub fn predict_proba_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        par::try_map_slice(rows, |x| self.predict_proba(x))
    }

    pub fn predict_label_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        Ok(self.predict_proba_batch(rows)?.into_iter().map(|p| self.label_for(p)).collect())
    }
}

fn check_training(data: &LabeledMatrix, weights: &SampleWeightVector) -> Result<()> {
    if data.n_rows() == 0 {
        return Err(Error::Training("no training rows".into()));
    }
    if weights.len() != data.n_rows() {
        return Err(Error::Shape {
            expected: data.n_rows(),
            got: weights.len(),
        });
    }
    Ok(())
}

fn generic_schema(d: usize) -> Vec<FeatureSpec> {
    (0..d)
        .map(|j| {
            let mut s = FeatureSpec::numeric(&format!("x{j}"), f64::NEG_INFINITY, f64::INFINITY);
            s.valid_range = None;
            s
        })
        .collect()
}

fn fit(kind: ModelKind, data: &LabeledMatrix, weights: &SampleWeightVector, config: &TrainConfig) -> Result<EnsembleModel> {
    check_training(data, weights)?;
    config.validate()?;
    let d = data.n_cols();
    let mtry = config.resolved_mtry(kind, d)?;
    let n_trees = if kind == ModelKind::DecisionTree { 1 } else { config.n_trees };
    let bootstrap = kind != ModelKind::DecisionTree && config.bootstrap;
    let params = cart::GrowParams {
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split,
        mtry,
        search: if kind == ModelKind::ExtraTrees {
            cart::SplitSearch::RandomThreshold
        } else {
            cart::SplitSearch::Exhaustive
        },
    };
    let unit = SampleWeightVector::uniform(data.n_rows());
    let sampler = if bootstrap {
        Some(WeightedIndex::new(weights.as_slice()).map_err(|e| Error::Training(e.to_string()))?)
    } else {
        None
    };

    let trees = par::map_range(n_trees, |t| {
        let mut r = rng::child(config.seed, t as u64);
        match &sampler {
            Some(s) => {
                let rows: Vec<usize> = (0..data.n_rows()).map(|_| s.sample(&mut r)).collect();
                cart::grow(data, unit.as_slice(), rows, params, r)
            }
            None => cart::grow(data, weights.as_slice(), (0..data.n_rows()).collect(), params, r),
        }
    });

    let mut train_config = config.clone();
    train_config.n_trees = n_trees;
    train_config.mtry = Some(mtry);
    train_config.bootstrap = bootstrap;
    let schema = generic_schema(d);
    Ok(EnsembleModel {
        kind,
        trees,
        feature_names: schema.iter().map(|s| s.name.clone()).collect(),
        schema,
        train_config,
        decision_threshold: 0.5,
        metadata: ModelMetadata::default(),
    })
}

pub fn fit_decision_tree(data: &LabeledMatrix, weights: &SampleWeightVector, config: &TrainConfig) -> Result<EnsembleModel> {
    fit(ModelKind::DecisionTree, data, weights, config)
}

pub fn fit_random_forest(data: &LabeledMatrix, weights: &SampleWeightVector, config: &TrainConfig) -> Result<EnsembleModel> {
    fit(ModelKind::RandomForest, data, weights, config)
}

pub fn fit_extra_trees(data: &LabeledMatrix, weights: &SampleWeightVector, config: &TrainConfig) -> Result<EnsembleModel> {
    fit(ModelKind::ExtraTrees, data, weights, config)
}

pub fn fit_kind(kind: ModelKind, data: &LabeledMatrix, weights: &SampleWeightVector, config: &TrainConfig) -> Result<EnsembleModel> {
    fit(kind, data, weights, config)
}
