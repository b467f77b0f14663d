//! ingest → label → select → split → balance → fit → evaluate.

use std::collections::{BTreeMap, HashSet};

use chrono::Months;

use super::config::{DataSource, RunConfig};
use super::report::{emit_report, OutputSet, ReportBundle, ReportFormat};
use super::{seeds, STAGE_BALANCE, STAGE_EVALUATE, STAGE_FIT, STAGE_INGEST, STAGE_LABEL, STAGE_SELECT, STAGE_SPLIT, STAGE_WRITE};
use crate::balancing::{apply_strategy, BalancingStrategy, LabeledMatrix, StrategyTag};
use crate::dataset::{
    indicator_catalog, label_with_failure_lag, load_csv, select_predictors, split_temporal_holdout, synth,
    write_csv, DataTable, SplitBundle,
};
use crate::error::StageExt;
use crate::evaluation::{classification_report, ClassificationReport};
use crate::trees::{fit_kind, model_to_json, EnsembleModel, ModelKind, ModelMetadata, TrainConfig};
use crate::{Error, Result};

pub const PARTITION_OUT_OF_SAMPLE: &str = "out_of_sample";
pub const PARTITION_OUT_OF_TIME: &str = "out_of_time";

/// Labeled, predictor-selected and split data. The in-sample partition
/// carries observed feature ranges and doubles as the counterfactual
/// reference set.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub split: SplitBundle,
}

impl PreparedData {
    pub fn reference(&self) -> &DataTable {
        &self.split.in_sample
    }

    /// Out-of-sample rows followed by out-of-time rows.
    pub fn test_rows(&self) -> impl Iterator<Item = &crate::dataset::BankQuarterRecord> {
        self.split.out_of_sample.rows().iter().chain(self.split.out_of_time.rows())
    }
}

fn ingest(cfg: &RunConfig) -> Result<DataTable> {
    let schema = indicator_catalog();
    match cfg.data.source {
        DataSource::Bundled => Ok(synth::desk_table()),
        DataSource::Csv => {
            let path = cfg.data.path.as_ref().ok_or_else(|| Error::Config("data.path is not set".into()))?;
            load_csv(path, &schema)
        }
        #[cfg(feature = "fdic")]
        DataSource::Fdic => {
            let fc = crate::dataset::fdic::FdicConfig::load(cfg.data.fdic_config.as_deref())?;
            crate::dataset::fdic::fetch_fdic_snapshot(&fc)
        }
        #[cfg(not(feature = "fdic"))]
        DataSource::Fdic => Err(Error::Config("this build has no FDIC client".into())),
    }
}

pub fn prepare_data(cfg: &RunConfig) -> Result<PreparedData> {
    cfg.validate()?;
    let seed = cfg.master_seed()?;
    let raw = ingest(cfg).stage(STAGE_INGEST)?;
    let labeled = label_with_failure_lag(&raw, Months::new(cfg.data.lag_months)).stage(STAGE_LABEL)?;
    let selected = select_predictors(&labeled, cfg.model.group).stage(STAGE_SELECT)?;
    let mut split = split_temporal_holdout(&selected, cfg.data.boundary, cfg.data.holdout_ratio, seeds::split(seed))
        .stage(STAGE_SPLIT)?;
    if split.in_sample.is_empty() || split.in_sample.labels().iter().all(|&l| l == 0) {
        return Err(Error::Split("in-sample partition has no failing bank".into()).in_stage(STAGE_SPLIT));
    }
    split.in_sample.fit_observed_ranges();
    Ok(PreparedData { split })
}

/// Balances the in-sample partition and fits one model.
pub fn fit_model(
    data: &PreparedData,
    cfg: &RunConfig,
    kind: ModelKind,
    strategy: StrategyTag,
    seed: u64,
) -> Result<EnsembleModel> {
    let reference = data.reference();
    let matrix = LabeledMatrix::from_table(reference).stage(STAGE_BALANCE)?;
    let mut balancing = BalancingStrategy::new(strategy, seeds::balance(seed));
    balancing.smote_k = cfg.model.smote_k;
    let (balanced, weights) = apply_strategy(&matrix, &balancing).stage(STAGE_BALANCE)?;
    let m = &cfg.model;
    let mut tc = TrainConfig::for_kind(kind, seeds::fit(seed));
    if kind != ModelKind::DecisionTree {
        tc.n_trees = m.n_trees;
    }
    tc.max_depth = m.max_depth;
    tc.min_samples_split = m.min_samples_split;
    tc.mtry = m.mtry;
    let mut model = fit_kind(kind, &balanced, &weights, &tc)
        .and_then(|model| model.with_schema(reference.schema().to_vec()))
        .stage(STAGE_FIT)?;
    model.metadata = ModelMetadata {
        predictor_group: Some(m.group),
        strategy: Some(strategy),
        config_hash: Some(cfg.config_hash()),
    };
    Ok(model)
}

/// Checks that an evaluation partition is untouched by resampling: no
/// repeated bank-quarter and no overlap with the training rows.
pub fn ensure_unbalanced(name: &str, partition: &DataTable, training: &DataTable) -> Result<()> {
    let key = |r: &crate::dataset::BankQuarterRecord| (r.bank_id.clone(), r.report_date);
    let train: HashSet<_> = training.rows().iter().map(key).collect();
    let mut seen = HashSet::new();
    for r in partition.rows() {
        let k = key(r);
        if train.contains(&k) {
            return Err(Error::Split(format!("{name} shares bank {} on {} with training", k.0, k.1)));
        }
        if !seen.insert(k.clone()) {
            return Err(Error::Split(format!("{name} repeats bank {} on {}; was it resampled?", k.0, k.1)));
        }
    }
    Ok(())
}

/// Classification metrics on the out-of-sample and out-of-time partitions.
pub fn evaluate_partitions(model: &EnsembleModel, data: &PreparedData) -> Result<BTreeMap<String, ClassificationReport>> {
    let s = &data.split;
    let parts = [(PARTITION_OUT_OF_SAMPLE, &s.out_of_sample), (PARTITION_OUT_OF_TIME, &s.out_of_time)];
    let mut out = BTreeMap::new();
    for (name, table) in parts {
        ensure_unbalanced(name, table, &s.in_sample).stage(STAGE_EVALUATE)?;
        out.insert(name.to_string(), classification_report(model, table).stage(STAGE_EVALUATE)?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EnsembleModel,
    pub data: PreparedData,
    pub bundle: ReportBundle,
    pub files: Vec<std::path::PathBuf>,
}

/// Trains the configured model in memory, without writing anything.
pub fn train_in_memory(cfg: &RunConfig) -> Result<(EnsembleModel, PreparedData, ReportBundle)> {
    let data = prepare_data(cfg)?;
    let seed = cfg.master_seed()?;
    let model = fit_model(&data, cfg, cfg.model.kind, cfg.model.strategy, seed)?;
    let classification = evaluate_partitions(&model, &data)?;
    let bundle = ReportBundle {
        config_hash: cfg.config_hash(),
        seed,
        config_snapshot: cfg.to_toml()?,
        classification,
        ..ReportBundle::default()
    };
    Ok((model, data, bundle))
}

/// Trains and writes `model.json`, `reference.csv`, `config.toml`,
/// `report.json` and `report.csv` into the output directory.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let (model, data, bundle) = train_in_memory(cfg)?;
    let mut out = OutputSet::new(cfg.out_dir()).stage(STAGE_WRITE)?;
    let written = (|| {
        out.write("model.json", model_to_json(&model)?)?;
        let mut reference = Vec::new();
        write_csv(data.reference(), &mut reference)?;
        out.write("reference.csv", reference)?;
        out.write("config.toml", &bundle.config_snapshot)?;
        emit_report(&bundle, ReportFormat::Json, &mut out)?;
        emit_report(&bundle, ReportFormat::Csv, &mut out)?;
        Ok::<_, Error>(())
    })();
    match written {
        Ok(()) => Ok(TrainOutcome {
            model,
            data,
            bundle,
            files: out.finish(),
        }),
        Err(e) => {
            out.discard();
            Err(e.in_stage(STAGE_WRITE))
        }
    }
}
