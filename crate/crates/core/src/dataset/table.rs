use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use super::schema::{FeatureSpec, Interval, PredictorGroup};
use crate::{Error, Result};

/// One bank in one reporting quarter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankQuarterRecord {
    pub bank_id: String,
    pub report_date: NaiveDate,
    /// Indicator values aligned with the owning table's schema.
    pub indicators: Vec<f64>,
    pub failed_label: u8,
    pub failure_date: Option<NaiveDate>,
}

/// Snaps a date to the last day of its calendar quarter.
pub fn quarter_end(date: NaiveDate) -> NaiveDate {
    let last_month = ((date.month() - 1) / 3 + 1) * 3;
    let (y, m) = if last_month == 12 {
        (date.year() + 1, 1)
    } else {
        (date.year(), last_month + 1)
    };
    NaiveDate::from_ymd_opt(y, m, 1).and_then(|d| d.pred_opt()).expect("valid quarter end")
}

/// Bank-quarter rows sharing one indicator schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    schema: Vec<FeatureSpec>,
    rows: Vec<BankQuarterRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeViolation {
    pub row: usize,
    pub bank_id: String,
    pub feature: String,
    pub value: f64,
    pub valid_range: Interval,
}

impl DataTable {
    pub fn new(schema: Vec<FeatureSpec>, rows: Vec<BankQuarterRecord>) -> Result<Self> {
        let mut names = HashSet::new();
        for s in &schema {
            if !names.insert(s.name.as_str()) {
                return Err(Error::Schema(format!("feature `{}` listed twice", s.name)));
            }
            if let Some(r) = s.valid_range {
                Interval::new(r.lo, r.hi)?;
            }
        }
        let mut keys = HashSet::with_capacity(rows.len());
        for r in &rows {
            if r.indicators.len() != schema.len() {
                return Err(Error::Shape {
                    expected: schema.len(),
                    got: r.indicators.len(),
                });
            }
            if !keys.insert((r.bank_id.as_str(), r.report_date)) {
                return Err(Error::Duplicate {
                    bank_id: r.bank_id.clone(),
                    report_date: r.report_date.to_string(),
                });
            }
        }
        Ok(DataTable { schema, rows })
    }

    pub fn empty(schema: Vec<FeatureSpec>) -> Self {
        DataTable { schema, rows: Vec::new() }
    }

    pub fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    pub fn rows(&self) -> &[BankQuarterRecord] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema.iter().map(|s| s.name.clone()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    pub fn row_values(&self, i: usize) -> &[f64] {
        &self.rows[i].indicators
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.failed_label).collect()
    }

    pub fn indicator(&self, row: usize, name: &str) -> Option<f64> {
        self.feature_index(name).map(|j| self.rows[row].indicators[j])
    }

    /// Keeps the rows for which `keep` returns true, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&BankQuarterRecord) -> bool) -> DataTable {
        DataTable {
            schema: self.schema.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(schema: Vec<FeatureSpec>, rows: Vec<BankQuarterRecord>) -> Self {
        DataTable { schema, rows }
    }

    /// Replaces each numeric feature's `observed_range` with the min/max seen
    /// in this table's rows.
    pub fn fit_observed_ranges(&mut self) {
        for (j, spec) in self.schema.iter_mut().enumerate() {
            if !spec.is_numeric() {
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in &self.rows {
                lo = lo.min(r.indicators[j]);
                hi = hi.max(r.indicators[j]);
            }
            spec.observed_range = if lo <= hi { Some(Interval { lo, hi }) } else { None };
        }
    }

    pub fn with_schema_ranges_from(mut self, specs: &[FeatureSpec]) -> Self {
        for s in self.schema.iter_mut() {
            if let Some(src) = specs.iter().find(|o| o.name == s.name) {
                s.observed_range = src.observed_range;
            }
        }
        self
    }
}

/// Relabels rows by failure date: rows of failed banks dated in
/// `(failure_date - lag, failure_date]` become positive, rows after the
/// failure are dropped, everything else is negative.
pub fn label_with_failure_lag(table: &DataTable, lag: Months) -> Result<DataTable> {
    let mut failure_dates: HashMap<&str, NaiveDate> = HashMap::new();
    for r in table.rows() {
        if let Some(fd) = r.failure_date {
            match failure_dates.get(r.bank_id.as_str()) {
                Some(prev) if *prev != fd => {
                    return Err(Error::Schema(format!(
                        "bank `{}` has conflicting failure dates {prev} and {fd}",
                        r.bank_id
                    )))
                }
                _ => {
                    failure_dates.insert(r.bank_id.as_str(), fd);
                }
            }
        }
    }
    for r in table.rows() {
        if r.failed_label == 1 && !failure_dates.contains_key(r.bank_id.as_str()) {
            return Err(Error::Labeling(r.bank_id.clone()));
        }
    }

    let mut rows = Vec::with_capacity(table.len());
    for r in table.rows() {
        let mut row = r.clone();
        match failure_dates.get(r.bank_id.as_str()) {
            Some(&fd) => {
                if r.report_date > fd {
                    continue;
                }
                let window_start = fd.checked_sub_months(lag).ok_or_else(|| {
                    Error::Input(format!("lag underflows failure date {fd}"))
                })?;
                row.failed_label = u8::from(r.report_date > window_start);
                row.failure_date = Some(fd);
            }
            None => row.failed_label = 0,
        }
        rows.push(row);
    }
    Ok(DataTable::from_parts_unchecked(table.schema.clone(), rows))
}

pub fn one_year() -> Months {
    Months::new(12)
}

/// Projects the table onto the named features, in the given order.
pub fn select_features(table: &DataTable, names: &[&str]) -> Result<DataTable> {
    let idx: Vec<usize> = names
        .iter()
        .map(|n| table.feature_index(n).ok_or_else(|| Error::MissingFeature(n.to_string())))
        .collect::<Result<_>>()?;
    let schema = idx.iter().map(|&j| table.schema[j].clone()).collect();
    let rows = table
        .rows
        .iter()
        .map(|r| BankQuarterRecord {
            indicators: idx.iter().map(|&j| r.indicators[j]).collect(),
            ..r.clone()
        })
        .collect();
    Ok(DataTable::from_parts_unchecked(schema, rows))
}

pub fn select_predictors(table: &DataTable, group: PredictorGroup) -> Result<DataTable> {
    select_features(table, group.features())
}

/// Lists every value outside its feature's valid range. Never mutates.
pub fn validate_ranges(table: &DataTable) -> Vec<RangeViolation> {
    let mut out = Vec::new();
    for (i, r) in table.rows().iter().enumerate() {
        for (j, spec) in table.schema().iter().enumerate() {
            let Some(range) = spec.valid_range else { continue };
            let v = r.indicators[j];
            if !range.contains(v) {
                out.push(RangeViolation {
                    row: i,
                    bank_id: r.bank_id.clone(),
                    feature: spec.name.clone(),
                    value: v,
                    valid_range: range,
                });
            }
        }
    }
    out
}

/// Counts of rows per label, keyed 0/1.
pub fn label_counts(table: &DataTable) -> BTreeMap<u8, usize> {
    let mut m = BTreeMap::new();
    for r in table.rows() {
        *m.entry(r.failed_label).or_insert(0) += 1;
    }
    m
}
