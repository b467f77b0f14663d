//! Explanation documents: the factual, its prediction and each
//! counterfactual as per-feature deltas with direction markers.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::cfgen::{generate_in, CfContext, CfMethod, CfQuery, MocConfig};
use crate::dataset::{load_csv, FeatureSpec};
use crate::evaluation::{DesiderataConfig, DesiderataRecord, DesiderataScorer};
use crate::trees::{load_model, ModelKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increase,
    Decrease,
    Unchanged,
}

impl Direction {
    pub fn between(old: f64, new: f64) -> Direction {
        if new > old {
            Direction::Increase
        } else if new < old {
            Direction::Decrease
        } else {
            Direction::Unchanged
        }
    }

    pub fn marker(self) -> &'static str {
        match self {
            Direction::Increase => "↑",
            Direction::Decrease => "↓",
            Direction::Unchanged => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDelta {
    pub feature: String,
    pub old: f64,
    pub new: f64,
    pub direction: Direction,
}

pub fn feature_deltas(schema: &[FeatureSpec], old: &[f64], new: &[f64]) -> Vec<FeatureDelta> {
    schema
        .iter()
        .zip(old.iter().zip(new))
        .map(|(s, (&o, &n))| FeatureDelta {
            feature: s.name.clone(),
            old: o,
            new: n,
            direction: Direction::between(o, n),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainedCounterfactual {
    pub rank: usize,
    pub method: CfMethod,
    pub values: Vec<f64>,
    pub deltas: Vec<FeatureDelta>,
    pub probability: f64,
    pub label: u8,
    pub desiderata: DesiderataRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationStatus {
    CounterfactualsFound,
    NoActionNeeded,
    NoCounterfactual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bank_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_date: Option<NaiveDate>,
    pub model_kind: ModelKind,
    pub method: CfMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub features: Vec<String>,
    pub factual: Vec<f64>,
    pub probability: f64,
    pub label: u8,
    pub status: ExplanationStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub counterfactuals: Vec<ExplainedCounterfactual>,
}

fn label_name(label: u8) -> &'static str {
    if label == 1 {
        "failing"
    } else {
        "non-failing"
    }
}

impl ExplanationDocument {
    pub fn to_json(&self) -> Result<String> {
        super::report::to_canonical_json(self)
    }

    /// Human-readable rendering, one block per counterfactual, with ↑ / ↓
    /// markers next to each changed feature.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let subject = match (&self.bank_id, self.report_date) {
            (Some(b), Some(d)) => format!("Bank {b} ({d})"),
            (Some(b), None) => format!("Bank {b}"),
            (None, Some(d)) => format!("Bank record ({d})"),
            (None, None) => "Bank record".to_string(),
        };
        let _ = writeln!(out, "{subject}");
        let _ = writeln!(out, "Model {}, method {}", self.model_kind, self.method);
        let _ = writeln!(
            out,
            "Prediction: {} (probability of failure {:.6})",
            label_name(self.label),
            self.probability
        );
        match self.status {
            ExplanationStatus::NoActionNeeded => {
                let _ = writeln!(out, "\nNo action needed: the bank is not predicted to fail.");
                return out;
            }
            ExplanationStatus::NoCounterfactual => {
                let _ = writeln!(
                    out,
                    "\nNo counterfactual found: {}",
                    self.reason.as_deref().unwrap_or("no reason given")
                );
                return out;
            }
            ExplanationStatus::CounterfactualsFound => {}
        }
        let width = self.features.iter().map(String::len).max().unwrap_or(7).max(7);
        let total = self.counterfactuals.len();
        for cf in &self.counterfactuals {
            let d = &cf.desiderata;
            let _ = writeln!(
                out,
                "\nCounterfactual {} of {total}: {} (probability {:.6}), proximity {:.6}, sparsity {}, plausibility {:.6}",
                cf.rank,
                label_name(cf.label),
                cf.probability,
                d.proximity,
                d.sparsity,
                d.plausibility
            );
            let _ = writeln!(out, "  {:<width$}  {:>16}  {:>16}", "Feature", "Factual", "Counterfactual");
            for delta in &cf.deltas {
                let _ = writeln!(
                    out,
                    "  {:<width$}  {:>16.6}  {:>16.6}  {}",
                    delta.feature,
                    delta.old,
                    delta.new,
                    delta.direction.marker()
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExplainOptions {
    pub method: CfMethod,
    pub frozen: BTreeSet<String>,
    pub max_counterfactuals: usize,
    pub moc: MocConfig,
    pub desiderata: DesiderataConfig,
    pub deadline: Option<Instant>,
}

impl ExplainOptions {
    pub fn new(method: CfMethod) -> Self {
        ExplainOptions {
            method,
            frozen: BTreeSet::new(),
            max_counterfactuals: 5,
            moc: MocConfig::default(),
            desiderata: DesiderataConfig::default(),
            deadline: None,
        }
    }
}

/// Identifies the bank being explained; both parts are optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    #[serde(default)]
    pub bank_id: Option<String>,
    #[serde(default)]
    pub report_date: Option<NaiveDate>,
}

pub fn explain_in(
    ctx: &CfContext<'_>,
    scorer: &DesiderataScorer<'_>,
    subject: Subject,
    factual: Vec<f64>,
    opts: &ExplainOptions,
) -> Result<ExplanationDocument> {
    let model = ctx.model;
    let probability = model.predict_proba(&factual)?;
    let label = model.label_for(probability);
    let mut doc = ExplanationDocument {
        bank_id: subject.bank_id,
        report_date: subject.report_date,
        model_kind: model.kind,
        method: opts.method,
        config_hash: model.metadata.config_hash.clone(),
        features: model.feature_names.clone(),
        factual,
        probability,
        label,
        status: ExplanationStatus::NoActionNeeded,
        reason: None,
        counterfactuals: Vec::new(),
    };
    if label == 0 {
        return Ok(doc);
    }
    let query = CfQuery::flip(model, doc.factual.clone())?
        .with_frozen(opts.frozen.iter().cloned())
        .with_max(opts.max_counterfactuals);
    let outcome = generate_in(ctx, &query, opts.method, &opts.moc, opts.deadline)?;
    if outcome.is_empty() {
        doc.status = ExplanationStatus::NoCounterfactual;
        doc.reason = outcome.reason.or_else(|| Some("generator returned no candidate".into()));
        return Ok(doc);
    }
    doc.status = ExplanationStatus::CounterfactualsFound;
    for (i, cf) in outcome.counterfactuals.iter().enumerate() {
        let p = model.predict_proba(&cf.values)?;
        doc.counterfactuals.push(ExplainedCounterfactual {
            rank: i + 1,
            method: cf.method,
            values: cf.values.clone(),
            deltas: feature_deltas(&model.schema, &doc.factual, &cf.values),
            probability: p,
            label: model.label_for(p),
            desiderata: scorer.score(&doc.factual, cf)?,
        });
    }
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Checks a name → value object against `schema`: every feature present,
/// numeric, finite and inside its valid range, and no unknown names.
pub fn validate_indicators(
    schema: &[FeatureSpec],
    indicators: &Map<String, Value>,
) -> std::result::Result<Vec<f64>, Vec<FieldError>> {
    let mut errors = Vec::new();
    let mut values = Vec::with_capacity(schema.len());
    let mut err = |field: &str, message: String| {
        errors.push(FieldError {
            field: field.to_string(),
            message,
        })
    };
    for spec in schema {
        let v = match indicators.get(&spec.name) {
            None | Some(Value::Null) => {
                err(&spec.name, "is required".into());
                continue;
            }
            Some(v) => v,
        };
        let Some(x) = v.as_f64() else {
            err(&spec.name, format!("must be a number, got {v}"));
            continue;
        };
        if !x.is_finite() {
            err(&spec.name, "must be finite".into());
            continue;
        }
        if let Some(r) = spec.valid_range {
            if !r.contains(x) {
                err(&spec.name, format!("{x} is outside the valid range [{}, {}]", r.lo, r.hi));
                continue;
            }
        }
        values.push(x);
    }
    for name in indicators.keys() {
        if !schema.iter().any(|s| &s.name == name) {
            err(name, "is not a feature of this model".into());
        }
    }
    if errors.is_empty() {
        Ok(values)
    } else {
        Err(errors)
    }
}

pub fn field_errors_to_error(errors: &[FieldError]) -> Error {
    let parts: Vec<String> = errors.iter().map(|e| format!("{} {}", e.field, e.message)).collect();
    Error::Input(parts.join("; "))
}

/// A bank record as accepted by `explain`: `{"bank_id", "report_date",
/// "indicators": {name: value}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BankInput {
    #[serde(flatten)]
    pub subject: Subject,
    pub indicators: Map<String, Value>,
}

/// Loads a trained model and its reference table and explains one bank.
pub fn cmd_explain(
    model_path: &Path,
    reference_path: &Path,
    input: BankInput,
    opts: &ExplainOptions,
) -> Result<ExplanationDocument> {
    let model = load_model(model_path, None)?;
    let reference = load_csv(reference_path, &model.schema)?;
    let factual = validate_indicators(&model.schema, &input.indicators).map_err(|e| field_errors_to_error(&e))?;
    let ctx = CfContext::new(&model, &reference, opts.moc.k_plausibility)?;
    let scorer = DesiderataScorer::new(&model, &reference, opts.desiderata)?;
    explain_in(&ctx, &scorer, input.subject, factual, opts)
}
