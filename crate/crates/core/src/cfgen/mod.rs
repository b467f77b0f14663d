//! Counterfactual generation: distances, WhatIf, NICE and MOC.

pub mod context;
pub mod distance;
pub mod moc;
pub mod nice;
pub mod objectives;
pub mod pareto;
pub mod whatif;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureSpec;
use crate::trees::EnsembleModel;
use crate::{Error, Result};

pub use context::{CfContext, DEFAULT_PLAUSIBILITY_K};
pub use distance::{gower_distance, heom_distance};
pub use moc::{evolve_population, generate_moc, moc_in, MocConfig, Population};
pub use nice::{generate_nice, nice_in};
pub use objectives::{evaluate_objectives, ObjectiveVector, PlausibilityIndex};
pub use pareto::{crowding_distance, dominates, nondominated_sort};
pub use whatif::{generate_whatif, whatif_in};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CfMethod {
    WhatIf,
    #[serde(rename = "NICE")]
    Nice,
    #[serde(rename = "MOC")]
    Moc,
}

impl CfMethod {
    pub const ALL: [CfMethod; 3] = [CfMethod::WhatIf, CfMethod::Nice, CfMethod::Moc];
}

impl fmt::Display for CfMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CfMethod::WhatIf => "WhatIf",
            CfMethod::Nice => "NICE",
            CfMethod::Moc => "MOC",
        })
    }
}

impl FromStr for CfMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "whatif" | "what-if" | "what_if" => Ok(CfMethod::WhatIf),
            "nice" => Ok(CfMethod::Nice),
            "moc" => Ok(CfMethod::Moc),
            _ => Err(Error::Config(format!("unknown counterfactual method `{s}`"))),
        }
    }
}

/// One counterfactual request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfQuery {
    pub factual: Vec<f64>,
    pub desired_class: u8,
    /// Target interval for the probability of `desired_class`.
    pub desired_proba: (f64, f64),
    pub frozen_features: BTreeSet<String>,
    pub max_counterfactuals: usize,
}

impl CfQuery {
    /// Query asking to flip the model's current label for `factual`.
    pub fn flip(model: &EnsembleModel, factual: Vec<f64>) -> Result<Self> {
        let current = model.predict_label(&factual)?;
        Ok(CfQuery {
            factual,
            desired_class: 1 - current,
            desired_proba: (0.5, 1.0),
            frozen_features: BTreeSet::new(),
            max_counterfactuals: 5,
        })
    }

    pub fn with_frozen<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.frozen_features = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_max(mut self, n: usize) -> Self {
        self.max_counterfactuals = n;
        self
    }

    /// Checks arity, that the factual is not already in the desired class,
    /// and that every frozen feature exists. Returns the frozen mask.
    pub fn validate(&self, model: &EnsembleModel) -> Result<Vec<bool>> {
        let label = model.predict_label(&self.factual)?;
        if self.max_counterfactuals == 0 {
            return Err(Error::Input("max_counterfactuals must be at least 1".into()));
        }
        if self.desired_class > 1 {
            return Err(Error::Input(format!("desired class {} is not binary", self.desired_class)));
        }
        if label == self.desired_class {
            return Err(Error::Input("factual is already predicted as the desired class".into()));
        }
        let (lo, hi) = self.desired_proba;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::Input(format!("bad desired probability interval [{lo}, {hi}]")));
        }
        frozen_mask(&model.schema, &self.frozen_features)
    }

    /// Probability of the desired class under `model`.
    pub fn desired_proba_of(&self, model: &EnsembleModel, x: &[f64]) -> f64 {
        let p = model.proba_unchecked(x);
        if self.desired_class == 1 {
            p
        } else {
            1.0 - p
        }
    }

    pub fn flips(&self, model: &EnsembleModel, x: &[f64]) -> bool {
        model.label_for(model.proba_unchecked(x)) == self.desired_class
    }
}

pub(crate) fn frozen_mask(schema: &[FeatureSpec], frozen: &BTreeSet<String>) -> Result<Vec<bool>> {
    for name in frozen {
        if !schema.iter().any(|s| &s.name == name) {
            return Err(Error::MissingFeature(name.clone()));
        }
    }
    Ok(schema
        .iter()
        .map(|s| frozen.contains(&s.name) || !s.mutable_in_cf)
        .collect())
}

/// A candidate explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub values: Vec<f64>,
    pub method: CfMethod,
    pub changed_features: Vec<String>,
    pub objectives: ObjectiveVector,
    pub predicted_proba: f64,
}

impl Counterfactual {
    pub(crate) fn build(
        values: Vec<f64>,
        method: CfMethod,
        query: &CfQuery,
        model: &EnsembleModel,
        plausibility: &PlausibilityIndex,
    ) -> Counterfactual {
        let objectives = objectives::objectives_unchecked(&values, query, model, plausibility);
        let changed_features = changed_features(&model.schema, &query.factual, &values);
        Counterfactual {
            predicted_proba: model.proba_unchecked(&values),
            values,
            method,
            changed_features,
            objectives,
        }
    }

    pub fn sparsity(&self) -> usize {
        self.changed_features.len()
    }
}

pub fn changed_features(schema: &[FeatureSpec], factual: &[f64], cf: &[f64]) -> Vec<String> {
    schema
        .iter()
        .zip(factual.iter().zip(cf))
        .filter(|(_, (a, b))| a != b)
        .map(|(s, _)| s.name.clone())
        .collect()
}

/// Result of a generator: counterfactuals, or the reason none were found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfOutcome {
    pub counterfactuals: Vec<Counterfactual>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl CfOutcome {
    pub fn found(counterfactuals: Vec<Counterfactual>) -> Self {
        CfOutcome {
            counterfactuals,
            reason: None,
        }
    }

    pub fn none(reason: impl Into<String>) -> Self {
        CfOutcome {
            counterfactuals: Vec::new(),
            reason: Some(reason.into()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counterfactuals.is_empty()
    }
}

/// Sort by sparsity, then proximity; stable so earlier candidates win ties.
pub(crate) fn sort_by_sparsity_then_proximity(cfs: &mut [Counterfactual]) {
    cfs.sort_by(|a, b| {
        a.objectives
            .sparsity
            .cmp(&b.objectives.sparsity)
            .then(a.objectives.proximity.total_cmp(&b.objectives.proximity))
    });
}

/// Runs `method` for `query` against a prepared context. `deadline` only
/// bounds MOC; WhatIf and NICE are single passes.
pub fn generate_in(
    ctx: &CfContext<'_>,
    query: &CfQuery,
    method: CfMethod,
    moc: &MocConfig,
    deadline: Option<std::time::Instant>,
) -> Result<CfOutcome> {
    match method {
        CfMethod::WhatIf => whatif_in(ctx, query),
        CfMethod::Nice => nice_in(ctx, query),
        CfMethod::Moc => moc_in(ctx, query, moc, deadline),
    }
}
