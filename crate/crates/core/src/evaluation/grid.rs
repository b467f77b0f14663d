//! Aggregation of desiderata records into the model × strategy × method
//! grid, and its CSV / JSON / plot exports.
//!
//! Exports are byte-stable: cells are ordered by key, JSON object keys are
//! sorted and every number is written with six decimals.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::DesiderataRecord;
use crate::balancing::StrategyTag;
use crate::cfgen::CfMethod;
use crate::trees::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub model: ModelKind,
    pub strategy: StrategyTag,
    pub method: CfMethod,
}

impl CellKey {
    pub fn all() -> Vec<CellKey> {
        let mut out = Vec::with_capacity(45);
        for model in ModelKind::ALL {
            for strategy in StrategyTag::ALL {
                for method in CfMethod::ALL {
                    out.push(CellKey { model, strategy, method });
                }
            }
        }
        out
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.model, self.strategy, self.method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Share of counterfactuals that flip the prediction.
    Validity,
    Proximity,
    Sparsity,
    Plausibility,
    /// Share within `epsilon` of the factual; exported in JSON only.
    ValidityThreshold,
}

impl Metric {
    /// The four desiderata reported in the long-format CSV.
    pub const REPORTED: [Metric; 4] = [Metric::Validity, Metric::Proximity, Metric::Sparsity, Metric::Plausibility];
    pub const ALL: [Metric; 5] = [
        Metric::Validity,
        Metric::Proximity,
        Metric::Sparsity,
        Metric::Plausibility,
        Metric::ValidityThreshold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Validity => "validity",
            Metric::Proximity => "proximity",
            Metric::Sparsity => "sparsity",
            Metric::Plausibility => "plausibility",
            Metric::ValidityThreshold => "validity_threshold",
        }
    }

    pub fn of(self, r: &DesiderataRecord) -> f64 {
        match self {
            Metric::Validity => f64::from(u8::from(r.valid_flip)),
            Metric::Proximity => r.proximity,
            Metric::Sparsity => r.sparsity as f64,
            Metric::Plausibility => r.plausibility,
            Metric::ValidityThreshold => f64::from(u8::from(r.valid_threshold)),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    /// Values are summed in sorted order so the result does not depend on
    /// the order records arrived in.
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        sq.sort_by(f64::total_cmp);
        let std = (sq.iter().sum::<f64>() / n).sqrt();
        Some(Stat { mean, std, n: v.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellSummary {
    /// Empty when the cell produced no counterfactuals.
    pub metrics: BTreeMap<Metric, Stat>,
    pub reason: Option<String>,
    /// Factual instances submitted to the generator.
    pub factuals: usize,
    /// Factuals for which at least one counterfactual was returned.
    pub explained: usize,
}

impl CellSummary {
    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridProvenance {
    pub config_hash: String,
    pub seed: u64,
    /// Derived seed for each model × strategy cell, keyed `model/strategy`.
    pub cell_seeds: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchmarkGrid {
    pub cells: BTreeMap<CellKey, CellSummary>,
    pub provenance: GridProvenance,
}

pub fn aggregate_benchmark(runs: &[(CellKey, DesiderataRecord)]) -> BenchmarkGrid {
    let mut grouped: BTreeMap<CellKey, Vec<&DesiderataRecord>> = BTreeMap::new();
    for (k, r) in runs {
        grouped.entry(*k).or_default().push(r);
    }
    let cells = grouped
        .into_iter()
        .map(|(k, recs)| {
            let metrics = Metric::ALL
                .iter()
                .map(|&m| {
                    let vals: Vec<f64> = recs.iter().map(|r| m.of(r)).collect();
                    (m, Stat::of(&vals).expect("group is non-empty"))
                })
                .collect();
            (k, CellSummary { metrics, ..CellSummary::default() })
        })
        .collect();
    BenchmarkGrid {
        cells,
        provenance: GridProvenance::default(),
    }
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn fixed_value(x: f64) -> Value {
    // Round-trip through the six-decimal text so JSON and CSV agree.
    fixed(x).parse::<f64>().map(Value::from).unwrap_or(Value::Null)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl BenchmarkGrid {
    /// Marks `key` as empty with `reason`, keeping any coverage counts.
    pub fn record_empty(&mut self, key: CellKey, reason: impl Into<String>) {
        let cell = self.cells.entry(key).or_default();
        cell.metrics.clear();
        cell.reason = Some(reason.into());
    }

    pub fn set_coverage(&mut self, key: CellKey, factuals: usize, explained: usize) {
        let cell = self.cells.entry(key).or_default();
        cell.factuals = factuals;
        cell.explained = explained;
    }

    /// Adds an empty-with-reason entry for every key in `keys` not yet present
    /// or present without metrics and without a reason.
    pub fn fill_missing(&mut self, keys: &[CellKey], reason: &str) {
        for k in keys {
            let cell = self.cells.entry(*k).or_default();
            if cell.metrics.is_empty() && cell.reason.is_none() {
                cell.reason = Some(reason.to_string());
            }
        }
    }

    pub fn stat(&self, key: &CellKey, metric: Metric) -> Option<Stat> {
        self.cells.get(key)?.metrics.get(&metric).copied()
    }

    /// Long format: one row per cell and reported metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,strategy,method,metric,mean,std,n,reason,config_hash,seed\n");
        for (k, cell) in &self.cells {
            for m in Metric::REPORTED {
                let (mean, std, n) = match cell.metrics.get(&m) {
                    Some(s) => (fixed(s.mean), fixed(s.std), s.n.to_string()),
                    None => (String::new(), String::new(), "0".to_string()),
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{mean},{std},{n},{},{},{}",
                    k.model,
                    k.strategy,
                    k.method,
                    m,
                    csv_field(cell.reason.as_deref().unwrap_or("")),
                    self.provenance.config_hash,
                    self.provenance.seed
                );
            }
        }
        out
    }

    fn provenance_json(&self) -> Value {
        json!({
            "config_hash": self.provenance.config_hash,
            "seed": self.provenance.seed,
            "cell_seeds": self.provenance.cell_seeds,
        })
    }

    pub fn to_json(&self) -> Value {
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|(k, cell)| {
                let metrics: Map<String, Value> = cell
                    .metrics
                    .iter()
                    .map(|(m, s)| {
                        (
                            m.name().to_string(),
                            json!({"mean": fixed_value(s.mean), "std": fixed_value(s.std), "n": s.n}),
                        )
                    })
                    .collect();
                json!({
                    "model": k.model.to_string(),
                    "strategy": k.strategy.to_string(),
                    "method": k.method.to_string(),
                    "status": if cell.is_empty() { "empty" } else { "populated" },
                    "reason": cell.reason,
                    "factuals": cell.factuals,
                    "explained": cell.explained,
                    "metrics": metrics,
                })
            })
            .collect();
        json!({ "provenance": self.provenance_json(), "cells": cells })
    }

    /// Per-metric series of labels, means and standard deviations for an
    /// error-bar chart. Empty cells appear with null mean and std.
    pub fn to_plotdata(&self) -> Value {
        let mut metrics = Map::new();
        for m in Metric::REPORTED {
            let mut labels = Vec::new();
            let mut means = Vec::new();
            let mut stds = Vec::new();
            let mut ns = Vec::new();
            for (k, cell) in &self.cells {
                labels.push(Value::from(k.to_string()));
                match cell.metrics.get(&m) {
                    Some(s) => {
                        means.push(fixed_value(s.mean));
                        stds.push(fixed_value(s.std));
                        ns.push(Value::from(s.n));
                    }
                    None => {
                        means.push(Value::Null);
                        stds.push(Value::Null);
                        ns.push(Value::from(0));
                    }
                }
            }
            metrics.insert(
                m.name().to_string(),
                json!({"labels": labels, "mean": means, "std": stds, "n": ns}),
            );
        }
        json!({ "provenance": self.provenance_json(), "metrics": metrics })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(proximity: f64) -> DesiderataRecord {
        DesiderataRecord {
            valid_flip: true,
            valid_threshold: true,
            proximity,
            sparsity: 1,
            plausibility: 0.0,
        }
    }

    fn key() -> CellKey {
        CellKey {
            model: ModelKind::RandomForest,
            strategy: StrategyTag::Smote,
            method: CfMethod::Nice,
        }
    }

    #[test]
    fn two_point_std() {
        let g = aggregate_benchmark(&[(key(), rec(0.1)), (key(), rec(0.3))]);
        let s = g.stat(&key(), Metric::Proximity).unwrap();
        assert!((s.mean - 0.2).abs() < 1e-15);
        assert!((s.std - 0.1).abs() < 1e-15);
        assert_eq!(s.n, 2);
    }

    #[test]
    fn single_record_zero_std() {
        let g = aggregate_benchmark(&[(key(), rec(0.4))]);
        assert_eq!(g.stat(&key(), Metric::Sparsity).unwrap().std, 0.0);
    }

    #[test]
    fn full_grid_has_45_cells() {
        assert_eq!(CellKey::all().len(), 45);
        let mut g = BenchmarkGrid::default();
        g.fill_missing(&CellKey::all(), "not run");
        assert_eq!(g.to_csv().lines().count(), 1 + 45 * 4);
    }

    #[test]
    fn empty_cell_row() {
        let mut g = aggregate_benchmark(&[(key(), rec(0.4))]);
        g.record_empty(key(), "no factual predicted failing");
        let csv = g.to_csv();
        let row = csv.lines().nth(1).unwrap();
        assert!(row.starts_with("RandomForest,SMOTE,NICE,validity,,,0,no factual predicted failing"));
    }
}
