//! Bank-quarter ingestion, failure labeling, predictor selection and the
//! in-sample / out-of-sample / out-of-time partitions.

pub mod csv_io;
#[cfg(feature = "fdic")]
pub mod fdic;
pub mod schema;
pub mod split;
pub mod synth;
pub mod table;

pub use csv_io::{load_csv, read_csv, save_csv, write_csv, LoadStats};
pub use schema::{indicator_catalog, FeatureKind, FeatureSpec, Interval, PredictorGroup};
pub use split::{default_boundary, split_temporal_holdout, SplitBundle};
pub use table::{
    label_with_failure_lag, one_year, quarter_end, select_features, select_predictors, validate_ranges,
    BankQuarterRecord, DataTable, RangeViolation,
};
