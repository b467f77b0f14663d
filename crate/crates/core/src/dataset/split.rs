use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::table::DataTable;
use crate::{rng, Error, Result};

/// Default boundary between the training era and the out-of-time era.
pub fn default_boundary() -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 1, 1).expect("valid date")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBundle {
    pub in_sample: DataTable,
    pub out_of_sample: DataTable,
    pub out_of_time: DataTable,
    pub boundary_date: NaiveDate,
    pub holdout_ratio: f64,
    pub seed: u64,
}

/// Rows dated before `boundary` are shuffled with `seed` and split
/// `ratio : 1 - ratio` into in-sample and out-of-sample; later rows form the
/// out-of-time partition. Row order inside each partition follows the input.
pub fn split_temporal_holdout(table: &DataTable, boundary: NaiveDate, ratio: f64, seed: u64) -> Result<SplitBundle> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Split(format!("holdout ratio {ratio} must lie strictly between 0 and 1")));
    }
    let (pre, post): (Vec<usize>, Vec<usize>) =
        (0..table.len()).partition(|&i| table.rows()[i].report_date < boundary);
    if pre.is_empty() || post.is_empty() {
        return Err(Error::Split(format!(
            "{} rows before and {} rows on/after {boundary}; both sides must be non-empty",
            pre.len(),
            post.len()
        )));
    }

    let mut shuffled = pre.clone();
    shuffled.shuffle(&mut rng::seeded(seed));
    let n_in = ((pre.len() as f64) * ratio).round() as usize;
    let mut in_mask = vec![false; table.len()];
    for &i in &shuffled[..n_in] {
        in_mask[i] = true;
    }

    let pick = |idx: &[usize], want: bool| {
        let rows = idx
            .iter()
            .filter(|&&i| in_mask[i] == want)
            .map(|&i| table.rows()[i].clone())
            .collect();
        DataTable::from_parts_unchecked(table.schema().to_vec(), rows)
    };

    Ok(SplitBundle {
        in_sample: pick(&pre, true),
        out_of_sample: pick(&pre, false),
        out_of_time: DataTable::from_parts_unchecked(
            table.schema().to_vec(),
            post.iter().map(|&i| table.rows()[i].clone()).collect(),
        ),
        boundary_date: boundary,
        holdout_ratio: ratio,
        seed,
    })
}
