//! Classifier metrics, counterfactual desiderata and the benchmark grid.

pub mod desiderata;
pub mod grid;

use serde::{Deserialize, Serialize};

use crate::dataset::DataTable;
use crate::trees::EnsembleModel;
use crate::{Error, Result};

pub use desiderata::{desiderata, DesiderataConfig, DesiderataRecord, DesiderataScorer, DistanceKind};
pub use grid::{aggregate_benchmark, BenchmarkGrid, CellKey, CellSummary, GridProvenance, Metric, Stat};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(predicted: &[u8], actual: &[u8]) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::Shape {
                expected: actual.len(),
                got: predicted.len(),
            });
        }
        let mut m = ConfusionMatrix::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p != 0, a != 0) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, false) => m.tn += 1,
                (false, true) => m.fn_ += 1,
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; zero when there are no true
    /// positives.
    pub fn f1(&self) -> f64 {
        if self.tp == 0 {
            return 0.0;
        }
        let (p, r) = (self.precision(), self.recall());
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub confusion: ConfusionMatrix,
    pub n: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassificationReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        ClassificationReport {
            n: confusion.total(),
            accuracy: confusion.accuracy(),
            precision: confusion.precision(),
            recall: confusion.recall(),
            f1: confusion.f1(),
            confusion,
        }
    }
}

pub fn classification_report(model: &EnsembleModel, table: &DataTable) -> Result<ClassificationReport> {
    if table.n_features() != model.n_features() {
        return Err(Error::Shape {
            expected: model.n_features(),
            got: table.n_features(),
        });
    }
    if table.feature_names() != model.feature_names {
        return Err(Error::Schema(format!(
            "table columns {:?} do not match model features {:?}",
            table.feature_names(),
            model.feature_names
        )));
    }
    if table.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty table".into()));
    }
    let rows: Vec<Vec<f64>> = table.rows().iter().map(|r| r.indicators.clone()).collect();
    let predicted = model.predict_label_batch(&rows)?;
    let confusion = ConfusionMatrix::from_predictions(&predicted, &table.labels())?;
    Ok(ClassificationReport::from_confusion(confusion))
}
