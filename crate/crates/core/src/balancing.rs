//! Imbalance handling: undersampling, oversampling, SMOTE and
//! cost-sensitive weights, plus the untreated baseline.
//!
//! All resampling strategies target an exact 1:1 label balance.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataTable, FeatureKind};
use crate::{rng, Error, Result};

/// Where a row of a [`LabeledMatrix`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Row `i` of the source, untouched.
    Original(usize),
    /// A copy of source row `i` introduced by resampling.
    Resampled(usize),
    Synthetic,
}

/// Row-major feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    n_cols: usize,
    values: Vec<f64>,
    labels: Vec<u8>,
    kinds: Vec<FeatureKind>,
    provenance: Vec<Provenance>,
}

impl LabeledMatrix {
    pub fn new(n_cols: usize, values: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        Self::with_kinds(vec![FeatureKind::Numeric; n_cols], values, labels)
    }

    pub fn with_kinds(kinds: Vec<FeatureKind>, values: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let n_cols = kinds.len();
        if n_cols == 0 || values.len() != n_cols * labels.len() {
            return Err(Error::Shape {
                expected: n_cols * labels.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Input(format!("label {bad} is not binary")));
        }
        let provenance = (0..labels.len()).map(Provenance::Original).collect();
        Ok(LabeledMatrix {
            n_cols,
            values,
            labels,
            kinds,
            provenance,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Input("ragged rows".into()));
        }
        Self::new(n_cols, rows.concat(), labels)
    }

    pub fn from_table(table: &DataTable) -> Result<Self> {
        let kinds = table.schema().iter().map(|s| s.kind).collect();
        let values = table.rows().iter().flat_map(|r| r.indicators.iter().copied()).collect();
        Self::with_kinds(kinds, values, table.labels())
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// True when every row is an untouched source row.
    pub fn is_unbalanced_source(&self) -> bool {
        self.provenance.iter().all(|p| matches!(p, Provenance::Original(_)))
    }

    /// (negatives, positives)
    pub fn label_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    fn select(&self, picks: &[(usize, Provenance)]) -> LabeledMatrix {
        let mut values = Vec::with_capacity(picks.len() * self.n_cols);
        let mut labels = Vec::with_capacity(picks.len());
        let mut provenance = Vec::with_capacity(picks.len());
        for &(i, p) in picks {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            provenance.push(p);
        }
        LabeledMatrix {
            n_cols: self.n_cols,
            values,
            labels,
            kinds: self.kinds.clone(),
            provenance,
        }
    }

    fn indices_with_label(&self, label: u8) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.labels[i] == label).collect()
    }

    /// (minority label, majority label); ties resolve to positives as minority.
    fn minority_majority(&self) -> Result<(u8, u8)> {
        let (neg, pos) = self.label_counts();
        if neg == 0 || pos == 0 {
            return Err(Error::Balancing(format!(
                "both labels required, got {neg} negatives and {pos} positives"
            )));
        }
        Ok(if pos <= neg { (1, 0) } else { (0, 1) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyTag {
    Original,
    Undersampling,
    Oversampling,
    #[serde(rename = "SMOTE")]
    Smote,
    CostSensitive,
}

impl StrategyTag {
    pub const ALL: [StrategyTag; 5] = [
        StrategyTag::Original,
        StrategyTag::Undersampling,
        StrategyTag::Oversampling,
        StrategyTag::Smote,
        StrategyTag::CostSensitive,
    ];
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyTag::Original => "Original",
            StrategyTag::Undersampling => "Undersampling",
            StrategyTag::Oversampling => "Oversampling",
            StrategyTag::Smote => "SMOTE",
            StrategyTag::CostSensitive => "CostSensitive",
        })
    }
}

impl FromStr for StrategyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "original" | "none" => Ok(StrategyTag::Original),
            "undersampling" | "under" => Ok(StrategyTag::Undersampling),
            "oversampling" | "over" => Ok(StrategyTag::Oversampling),
            "smote" => Ok(StrategyTag::Smote),
            "costsensitive" | "cost" => Ok(StrategyTag::CostSensitive),
            _ => Err(Error::Config(format!("unknown balancing strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancingStrategy {
    pub tag: StrategyTag,
    pub smote_k: usize,
    pub seed: u64,
}

impl BalancingStrategy {
    pub fn new(tag: StrategyTag, seed: u64) -> Self {
        BalancingStrategy { tag, smote_k: 5, seed }
    }
}

/// Per-row training weights, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeightVector(Vec<f64>);

impl SampleWeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Input(format!("sample weight {w} is not positive")));
        }
        Ok(SampleWeightVector(weights))
    }

    pub fn uniform(n: usize) -> Self {
        SampleWeightVector(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Majority rows subsampled without replacement down to the minority count.
pub fn undersample(data: &LabeledMatrix, seed: u64) -> Result<LabeledMatrix> {
    let (minority, majority) = data.minority_majority()?;
    let min_idx = data.indices_with_label(minority);
    let maj_idx = data.indices_with_label(majority);
    let mut r = rng::seeded(seed);
    let mut kept: Vec<usize> = index::sample(&mut r, maj_idx.len(), min_idx.len())
        .into_iter()
        .map(|k| maj_idx[k])
        .collect();
    kept.extend(&min_idx);
    kept.sort_unstable();
    let picks: Vec<_> = kept.into_iter().map(|i| (i, Provenance::Original(i))).collect();
    Ok(data.select(&picks))
}

/// Minority rows drawn with replacement until the counts match. Source rows
/// are kept; the extra copies are appended.
pub fn oversample(data: &LabeledMatrix, seed: u64) -> Result<LabeledMatrix> {
    let (minority, majority) = data.minority_majority()?;
    let min_idx = data.indices_with_label(minority);
    let deficit = data.indices_with_label(majority).len() - min_idx.len();
    let mut r = rng::seeded(seed);
    let mut picks: Vec<_> = (0..data.n_rows()).map(|i| (i, Provenance::Original(i))).collect();
    for _ in 0..deficit {
        let i = min_idx[r.random_range(0..min_idx.len())];
        picks.push((i, Provenance::Resampled(i)));
    }
    Ok(data.select(&picks))
}

/// Column means and standard deviations (population); zero deviations are
/// replaced with one.
fn standardizer(data: &LabeledMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = data.n_rows() as f64;
    let mut mean = vec![0.0; data.n_cols()];
    for row in data.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut sd = vec![0.0; data.n_cols()];
    for row in data.rows() {
        for ((s, v), m) in sd.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in sd.iter_mut() {
        *s = (*s / n).sqrt();
        if *s <= 0.0 || !s.is_finite() {
            *s = 1.0;
        }
    }
    (mean, sd)
}

/// The `k` nearest minority neighbours (standardized Euclidean) of each
/// minority row, as positions into `min_idx`. Ties go to the lower row index.
pub fn minority_neighbours(data: &LabeledMatrix, min_idx: &[usize], k: usize) -> Vec<Vec<usize>> {
    let (mean, sd) = standardizer(data);
    let z: Vec<Vec<f64>> = min_idx
        .iter()
        .map(|&i| data.row(i).iter().zip(&mean).zip(&sd).map(|((v, m), s)| (v - m) / s).collect())
        .collect();
    (0..z.len())
        .map(|a| {
            let mut d: Vec<(f64, usize)> = (0..z.len())
                .filter(|&b| b != a)
                .map(|b| (z[a].iter().zip(&z[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>(), b))
                .collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            d.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

/// SMOTE: appends `x + λ (x_nn − x)` synthetic minority rows until the label
/// counts are equal, with `x_nn` one of the `k` nearest minority neighbours of
/// `x` in standardized feature space and `λ ~ U[0, 1)`.
pub fn smote(data: &LabeledMatrix, k: usize, seed: u64) -> Result<LabeledMatrix> {
    let (minority, majority) = data.minority_majority()?;
    if let Some(j) = data.kinds().iter().position(|k| *k != FeatureKind::Numeric) {
        return Err(Error::UnsupportedFeature(format!("column {j}")));
    }
    let min_idx = data.indices_with_label(minority);
    if k == 0 || min_idx.len() <= k {
        return Err(Error::Parameter(format!(
            "SMOTE needs k >= 1 and more than k minority rows (k = {k}, minority = {})",
            min_idx.len()
        )));
    }
    let deficit = data.indices_with_label(majority).len() - min_idx.len();
    let neighbours = minority_neighbours(data, &min_idx, k);

    let mut out = data.select(&(0..data.n_rows()).map(|i| (i, Provenance::Original(i))).collect::<Vec<_>>());
    let mut r = rng::seeded(seed);
    for _ in 0..deficit {
        let a = r.random_range(0..min_idx.len());
        let b = neighbours[a][r.random_range(0..k)];
        let lambda: f64 = r.random();
        let x = data.row(min_idx[a]);
        let nn = data.row(min_idx[b]);
        out.values.extend(x.iter().zip(nn).map(|(xi, ni)| xi + lambda * (ni - xi)));
        out.labels.push(minority);
        out.provenance.push(Provenance::Synthetic);
    }
    Ok(out)
}

/// Balanced class weights `n / (2 n_c)`.
pub fn cost_sensitive_weights(labels: &[u8]) -> Result<SampleWeightVector> {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let neg = n - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::Balancing("cost-sensitive weights need both labels".into()));
    }
    let w_pos = n / (2.0 * pos);
    let w_neg = n / (2.0 * neg);
    SampleWeightVector::new(labels.iter().map(|&l| if l == 1 { w_pos } else { w_neg }).collect())
}

pub fn apply_strategy(data: &LabeledMatrix, strategy: &BalancingStrategy) -> Result<(LabeledMatrix, SampleWeightVector)> {
    let balanced = match strategy.tag {
        StrategyTag::Original => data.clone(),
        StrategyTag::Undersampling => undersample(data, strategy.seed)?,
        StrategyTag::Oversampling => oversample(data, strategy.seed)?,
        StrategyTag::Smote => smote(data, strategy.smote_k, strategy.seed)?,
        StrategyTag::CostSensitive => {
            let w = cost_sensitive_weights(data.labels())?;
            return Ok((data.clone(), w));
        }
    };
    let n = balanced.n_rows();
    Ok((balanced, SampleWeightVector::uniform(n)))
}
