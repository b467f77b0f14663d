//! Brute-force oracles and fixtures shared by the integration tests.
//!
//! Every oracle here is written independently of the library code it checks:
//! exact integer arithmetic for Gini, peeling for Pareto fronts, a plain
//! double loop for confusion counts.

#![allow(dead_code)]

use bankcf_core::balancing::LabeledMatrix;
use bankcf_core::cfgen::{CfContext, CfQuery};
use bankcf_core::dataset::{BankQuarterRecord, DataTable, FeatureSpec};
use bankcf_core::pipeline::{fit_model, prepare_data, PreparedData, RunConfig};
use bankcf_core::trees::{EnsembleModel, Node};
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (tp, fp, tn, fn) by direct counting.
pub fn confusion_oracle(predicted: &[u8], actual: &[u8]) -> (usize, usize, usize, usize) {
    let mut c = (0, 0, 0, 0);
    for i in 0..predicted.len() {
        if predicted[i] == 1 && actual[i] == 1 {
            c.0 += 1;
        } else if predicted[i] == 1 {
            c.1 += 1;
        } else if actual[i] == 0 {
            c.2 += 1;
        } else {
            c.3 += 1;
        }
    }
    c
}

/// Exact rational `a / b` with positive `b`.
#[derive(Debug, Clone, Copy)]
pub struct Ratio(pub i128, pub i128);

impl Ratio {
    pub fn cmp(&self, o: &Ratio) -> std::cmp::Ordering {
        (self.0 * o.1).cmp(&(o.0 * self.1))
    }
}

/// Best root split by exhaustive weighted-Gini enumeration over integer
/// feature values and integer weights, in exact arithmetic. Candidate
/// thresholds are midpoints of consecutive distinct values; ties go to the
/// lowest feature, then the lowest threshold. Returns `None` for a pure node
/// or when every feature is constant.
pub fn best_root_split_oracle(rows: &[Vec<i64>], labels: &[u8], weights: &[i64]) -> Option<(usize, f64)> {
    if labels.iter().all(|&l| l == labels[0]) {
        return None;
    }
    let d = rows[0].len();
    let mut best: Option<(Ratio, usize, f64)> = None;
    for j in 0..d {
        let mut values: Vec<i64> = rows.iter().map(|r| r[j]).collect();
        values.sort_unstable();
        values.dedup();
        for pair in values.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (mut lp, mut lw, mut rp, mut rw) = (0i128, 0i128, 0i128, 0i128);
            for i in 0..rows.len() {
                let w = weights[i] as i128;
                let p = if labels[i] == 1 { w } else { 0 };
                if rows[i][j] <= a {
                    lw += w;
                    lp += p;
                } else {
                    rw += w;
                    rp += p;
                }
            }
            // Σ 2 p (w - p) / w over the children, over the common
            // denominator lw * rw (the parent weight is the same for all
            // candidates so it can be dropped).
            let num = 2 * lp * (lw - lp) * rw + 2 * rp * (rw - rp) * lw;
            let score = Ratio(num, lw * rw);
            let threshold = (a as f64 + b as f64) / 2.0;
            let better = match &best {
                None => true,
                Some((s, _, _)) => score.cmp(s) == std::cmp::Ordering::Less,
            };
            if better {
                best = Some((score, j, threshold));
            }
        }
    }
    best.map(|(_, j, t)| (j, t))
}

pub fn dominates_oracle(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for i in 0..a.len() {
        if a[i] > b[i] {
            return false;
        }
        if a[i] < b[i] {
            strictly = true;
        }
    }
    strictly
}

/// Fronts by repeated peeling: each front is every remaining point that no
/// other remaining point dominates. Indices ascend within a front.
pub fn fronts_oracle(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates_oracle(&points[j], &points[i])))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Standardized-Euclidean k nearest minority neighbours, recomputed from
/// scratch. Standardization uses the mean and population deviation of the
/// whole matrix.
pub fn knn_oracle(data: &LabeledMatrix, minority: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = data.n_rows() as f64;
    let d = data.n_cols();
    let mut mean = vec![0.0; d];
    let mut sd = vec![0.0; d];
    for j in 0..d {
        mean[j] = (0..data.n_rows()).map(|i| data.value(i, j)).sum::<f64>() / n;
        let var = (0..data.n_rows()).map(|i| (data.value(i, j) - mean[j]).powi(2)).sum::<f64>() / n;
        sd[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let dist = |a: usize, b: usize| -> f64 {
        (0..d)
            .map(|j| ((data.value(a, j) - data.value(b, j)) / sd[j]).powi(2))
            .sum()
    };
    minority
        .iter()
        .map(|&a| {
            let mut others: Vec<(f64, usize)> =
                minority.iter().filter(|&&b| b != a).map(|&b| (dist(a, b), b)).collect();
            others.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
            others.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

/// Least-squares λ with `s ≈ a + λ (b − a)` and the residual norm.
pub fn backsolve_lambda(s: &[f64], a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let dir: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let dd: f64 = dir.iter().map(|v| v * v).sum();
    let off: Vec<f64> = s.iter().zip(a).map(|(x, y)| x - y).collect();
    if dd == 0.0 {
        let r = off.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Some((0.0, r));
    }
    let lambda = off.iter().zip(&dir).map(|(o, v)| o * v).sum::<f64>() / dd;
    let resid = off
        .iter()
        .zip(&dir)
        .map(|(o, v)| (o - lambda * v).powi(2))
        .sum::<f64>()
        .sqrt();
    Some((lambda, resid))
}

pub fn record(bank: &str, date: NaiveDate, values: Vec<f64>, label: u8) -> BankQuarterRecord {
    BankQuarterRecord {
        bank_id: bank.to_string(),
        report_date: date,
        indicators: values,
        failed_label: label,
        failure_date: None,
    }
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// A reference table from plain rows with observed ranges fitted.
pub fn table(schema: Vec<FeatureSpec>, rows: &[Vec<f64>], labels: &[u8]) -> DataTable {
    let recs = rows
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (r, &l))| record(&format!("b{i}"), date(2010, 3, 31), r.clone(), l))
        .collect();
    let mut t = DataTable::new(schema, recs).unwrap();
    t.fit_observed_ranges();
    t
}

pub fn int_matrix(rows: &[Vec<i64>], labels: &[u8]) -> LabeledMatrix {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    LabeledMatrix::from_rows(&rows, labels.to_vec()).unwrap()
}

pub fn root_split(model: &EnsembleModel) -> Option<(usize, f64)> {
    match model.trees[0].root() {
        Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
        Node::Leaf { .. } => None,
    }
}

pub type WeightedCase = (Vec<Vec<i64>>, Vec<u8>, Vec<i64>);

/// A fixed battery of small integer-weighted instances: up to 20 rows, one
/// to three features on a coarse grid so that value and score ties occur.
pub fn tree_battery() -> Vec<WeightedCase> {
    let mut r = ChaCha8Rng::seed_from_u64(20240611);
    let mut out = Vec::new();
    while out.len() < 400 {
        let n = r.random_range(2..=20);
        let d = r.random_range(1..=3);
        let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(0..6)).collect()).collect();
        let labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let weights: Vec<i64> = (0..n).map(|_| r.random_range(1..=5)).collect();
        out.push((rows, labels, weights));
    }
    out
}

/// Expands integer weights into repeated rows.
pub fn replicate(rows: &[Vec<i64>], labels: &[u8], weights: &[i64]) -> (Vec<Vec<i64>>, Vec<u8>) {
    let mut rep_rows = Vec::new();
    let mut rep_labels = Vec::new();
    for i in 0..rows.len() {
        for _ in 0..weights[i] {
            rep_rows.push(rows[i].clone());
            rep_labels.push(labels[i]);
        }
    }
    (rep_rows, rep_labels)
}

/// The bundled desk dataset prepared with Group II and a trained model.
pub struct Desk {
    pub cfg: RunConfig,
    pub data: PreparedData,
    pub model: EnsembleModel,
}

impl Desk {
    pub fn new(seed: u64) -> Desk {
        let cfg = RunConfig::with_seed(seed);
        let data = prepare_data(&cfg).unwrap();
        let model = fit_model(&data, &cfg, cfg.model.kind, cfg.model.strategy, seed).unwrap();
        Desk { cfg, data, model }
    }

    pub fn context(&self) -> CfContext<'_> {
        CfContext::new(&self.model, self.data.reference(), 10).unwrap()
    }

    /// Test rows predicted failing, capped.
    pub fn failing_factuals(&self, cap: usize) -> Vec<Vec<f64>> {
        bankcf_core::pipeline::benchmark::benchmark_factuals(&self.model, &self.data, cap)
    }

    pub fn query(&self, factual: &[f64]) -> CfQuery {
        CfQuery::flip(&self.model, factual.to_vec()).unwrap()
    }
}
