//! The four MOC objectives: prediction gap, proximity, sparsity and
//! implausibility (mean distance to the nearest training rows).

use serde::{Deserialize, Serialize};

use super::distance::gower_unchecked;
use super::CfQuery;
use crate::dataset::{DataTable, FeatureKind, FeatureSpec};
use crate::trees::EnsembleModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Distance of the desired-class probability to the target interval.
    pub prediction_gap: f64,
    /// Gower distance to the factual.
    pub proximity: f64,
    /// Number of changed features.
    pub sparsity: usize,
    /// Mean Gower distance to the k nearest training rows.
    pub implausibility: f64,
}

impl ObjectiveVector {
    pub fn as_array(&self) -> [f64; 4] {
        [self.prediction_gap, self.proximity, self.sparsity as f64, self.implausibility]
    }
}

/// Training rows used for the k-nearest-neighbour plausibility term.
///
/// Columns are stored pre-divided by each feature's range width so a query
/// is one vectorisable pass per feature. Results agree with
/// [`gower_distance`](super::gower_distance) up to rounding.
#[derive(Debug, Clone)]
pub struct PlausibilityIndex {
    /// Column-major, `columns[j][i]` is row `i`, feature `j`.
    columns: Vec<Vec<f64>>,
    /// Width used to normalise each column; `None` compares by equality.
    scale: Vec<Option<f64>>,
    schema: Vec<FeatureSpec>,
    n_rows: usize,
    k: usize,
}

impl PlausibilityIndex {
    /// `schema` supplies the distance denominators (normally the model's);
    /// the table's feature names must match it.
    pub fn new(training: &DataTable, schema: &[FeatureSpec], k: usize) -> Result<Self> {
        let names: Vec<&str> = schema.iter().map(|s| s.name.as_str()).collect();
        let table_names = training.feature_names();
        if table_names.iter().map(String::as_str).ne(names.iter().copied()) {
            return Err(Error::Schema(format!(
                "training columns {table_names:?} do not match model features {names:?}"
            )));
        }
        if k == 0 {
            return Err(Error::Parameter("plausibility k must be at least 1".into()));
        }
        if training.is_empty() {
            return Err(Error::Input("plausibility needs at least one training row".into()));
        }
        let scale: Vec<Option<f64>> = schema
            .iter()
            .map(|s| {
                let w = s.range_width();
                (s.kind == FeatureKind::Numeric && w > 0.0 && w.is_finite()).then_some(w)
            })
            .collect();
        let columns = scale
            .iter()
            .enumerate()
            .map(|(j, w)| {
                training
                    .rows()
                    .iter()
                    .map(|r| match w {
                        Some(w) => r.indicators[j] / w,
                        None => r.indicators[j],
                    })
                    .collect()
            })
            .collect();
        Ok(PlausibilityIndex {
            columns,
            scale,
            schema: schema.to_vec(),
            n_rows: training.len(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    /// Mean Gower distance to the `k` nearest rows (fewer if the table is
    /// smaller). The k distances are summed in ascending order.
    pub fn mean_knn_distance(&self, x: &[f64]) -> f64 {
        let mut acc = vec![0.0; self.n_rows];
        for ((col, w), &q) in self.columns.iter().zip(&self.scale).zip(x) {
            match w {
                Some(w) => {
                    let q = q / w;
                    for (a, &v) in acc.iter_mut().zip(col) {
                        *a += (v - q).abs().min(1.0);
                    }
                }
                None => {
                    for (a, &v) in acc.iter_mut().zip(col) {
                        *a += if v == q { 0.0 } else { 1.0 };
                    }
                }
            }
        }
        let k = self.k.min(self.n_rows);
        if k < acc.len() {
            acc.select_nth_unstable_by(k - 1, f64::total_cmp);
            acc.truncate(k);
        }
        acc.sort_by(f64::total_cmp);
        let d = self.schema.len().max(1) as f64;
        acc.iter().sum::<f64>() / k as f64 / d
    }
}

pub fn prediction_gap(p: f64, (lo, hi): (f64, f64)) -> f64 {
    if p < lo {
        lo - p
    } else if p > hi {
        p - hi
    } else {
        0.0
    }
}

pub(crate) fn objectives_unchecked(
    candidate: &[f64],
    query: &CfQuery,
    model: &EnsembleModel,
    plausibility: &PlausibilityIndex,
) -> ObjectiveVector {
    let schema = &model.schema;
    ObjectiveVector {
        prediction_gap: prediction_gap(query.desired_proba_of(model, candidate), query.desired_proba),
        proximity: gower_unchecked(candidate, &query.factual, schema),
        sparsity: candidate.iter().zip(&query.factual).filter(|(a, b)| a != b).count(),
        implausibility: plausibility.mean_knn_distance(candidate),
    }
}

pub fn evaluate_objectives(
    candidate: &[f64],
    query: &CfQuery,
    model: &EnsembleModel,
    training: &DataTable,
    k: usize,
) -> Result<ObjectiveVector> {
    let n = model.n_features();
    for v in [candidate.len(), query.factual.len()] {
        if v != n {
            return Err(Error::Shape { expected: n, got: v });
        }
    }
    model.predict_proba(candidate)?;
    let index = PlausibilityIndex::new(training, &model.schema, k)?;
    Ok(objectives_unchecked(candidate, query, model, &index))
}
