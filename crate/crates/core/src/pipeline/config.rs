//! Run configuration: one TOML document, environment overrides, and a hash
//! that stamps every artifact.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::balancing::StrategyTag;
use crate::cfgen::{CfMethod, MocConfig};
use crate::dataset::{default_boundary, PredictorGroup};
use crate::evaluation::DesiderataConfig;
use crate::trees::ModelKind;
use crate::{Error, Result};

pub const ENV_SEED: &str = "BANKCF_SEED";
pub const ENV_OUT: &str = "BANKCF_OUT";
pub const ENV_DATA_CSV: &str = "BANKCF_DATA_CSV";
pub const ENV_GROUP: &str = "BANKCF_GROUP";
pub const ENV_MODEL: &str = "BANKCF_MODEL";
pub const ENV_STRATEGY: &str = "BANKCF_STRATEGY";
pub const ENV_METHODS: &str = "BANKCF_METHODS";
pub const ENV_FACTUAL_CAP: &str = "BANKCF_FACTUAL_CAP";

/// Enums travel as their display names so configs accept `"SMOTE"`,
/// `"random_forest"`, `"II"` and so on.
mod as_str {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }

    pub mod list {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&x.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, T, D>(d: D) -> Result<Vec<T>, D::Error>
        where
            T: FromStr,
            T::Err: Display,
            D: Deserializer<'de>,
        {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|s| s.parse().map_err(de::Error::custom))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// The synthetic desk dataset shipped with the crate.
    #[default]
    Bundled,
    Csv,
    Fdic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// CSV file for `source = "csv"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Optional FDIC client settings file for `source = "fdic"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fdic_config: Option<PathBuf>,
    pub boundary: NaiveDate,
    pub holdout_ratio: f64,
    pub lag_months: u32,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Bundled,
            path: None,
            fdic_config: None,
            boundary: default_boundary(),
            holdout_ratio: 0.8,
            lag_months: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(with = "as_str")]
    pub group: PredictorGroup,
    #[serde(with = "as_str")]
    pub kind: ModelKind,
    #[serde(with = "as_str")]
    pub strategy: StrategyTag,
    pub n_trees: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mtry: Option<usize>,
    pub smote_k: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            group: PredictorGroup::II,
            kind: ModelKind::RandomForest,
            strategy: StrategyTag::CostSensitive,
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            mtry: None,
            smote_k: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterfactualConfig {
    #[serde(with = "as_str::list")]
    pub methods: Vec<CfMethod>,
    /// Counterfactuals returned per factual.
    pub max_per_factual: usize,
    /// Factual instances explained per benchmark cell.
    pub factual_cap: usize,
    /// Features no generator may change.
    pub frozen_features: Vec<String>,
    pub moc: MocConfig,
}

impl Default for CounterfactualConfig {
    fn default() -> Self {
        CounterfactualConfig {
            methods: CfMethod::ALL.to_vec(),
            max_per_factual: 5,
            factual_cap: 100,
            frozen_features: Vec::new(),
            moc: MocConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(with = "as_str::list")]
    pub models: Vec<ModelKind>,
    #[serde(with = "as_str::list")]
    pub strategies: Vec<StrategyTag>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            models: ModelKind::ALL.to_vec(),
            strategies: StrategyTag::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every other seed is derived from it. Required.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Not part of the config hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub counterfactuals: CounterfactualConfig,
    pub desiderata: DesiderataConfig,
    pub benchmark: BenchmarkConfig,
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        RunConfig {
            seed: Some(seed),
            ..RunConfig::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` (if any) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
            None => RunConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        let bad = |k: &str, v: &str| Error::Config(format!("{k}={v} is not valid"));
        if let Some(v) = get(ENV_SEED) {
            self.seed = Some(v.trim().parse().map_err(|_| bad(ENV_SEED, &v))?);
        }
        if let Some(v) = get(ENV_OUT) {
            self.out_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = get(ENV_DATA_CSV) {
            self.data.source = DataSource::Csv;
            self.data.path = Some(PathBuf::from(v));
        }
        if let Some(v) = get(ENV_GROUP) {
            self.model.group = v.parse()?;
        }
        if let Some(v) = get(ENV_MODEL) {
            self.model.kind = v.parse()?;
        }
        if let Some(v) = get(ENV_STRATEGY) {
            self.model.strategy = v.parse()?;
        }
        if let Some(v) = get(ENV_METHODS) {
            self.counterfactuals.methods = v.split(',').map(str::parse).collect::<Result<_>>()?;
        }
        if let Some(v) = get(ENV_FACTUAL_CAP) {
            self.counterfactuals.factual_cap = v.trim().parse().map_err(|_| bad(ENV_FACTUAL_CAP, &v))?;
        }
        Ok(())
    }

    pub fn master_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (config `seed`, --seed or BANKCF_SEED)".into()))
    }

    pub fn validate(&self) -> Result<()> {
        self.master_seed()?;
        let d = &self.data;
        if !(d.holdout_ratio > 0.0 && d.holdout_ratio < 1.0) {
            return Err(Error::Config(format!("holdout_ratio {} must lie in (0, 1)", d.holdout_ratio)));
        }
        if d.source == DataSource::Csv && d.path.is_none() {
            return Err(Error::Config("data.source = \"csv\" needs data.path".into()));
        }
        if d.source == DataSource::Fdic && !cfg!(feature = "fdic") {
            return Err(Error::Config("this build has no FDIC client (enable the `fdic` feature)".into()));
        }
        let m = &self.model;
        if m.n_trees == 0 || m.min_samples_split == 0 || m.smote_k == 0 || m.max_depth == Some(0) {
            return Err(Error::Config("tree and neighbour counts must be at least 1".into()));
        }
        let c = &self.counterfactuals;
        if c.methods.is_empty() || c.max_per_factual == 0 || c.factual_cap == 0 {
            return Err(Error::Config("need at least one method, max_per_factual >= 1 and factual_cap >= 1".into()));
        }
        if self.benchmark.models.is_empty() || self.benchmark.strategies.is_empty() {
            return Err(Error::Config("benchmark needs at least one model kind and strategy".into()));
        }
        self.desiderata.validate()
    }

    /// Hex SHA-256 (first 16 characters) of the canonical JSON form, with the
    /// output directory left out.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
    }

    /// TOML form with the output directory left out, so runs that differ
    /// only in where they write produce identical snapshots.
    pub fn to_toml(&self) -> Result<String> {
        let mut c = self.clone();
        c.out_dir = None;
        toml::to_string(&c).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 7
            [model]
            group = "III"
            kind = "extra_trees"
            strategy = "smote"
            [counterfactuals]
            methods = ["nice", "WhatIf"]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.model.group, PredictorGroup::III);
        assert_eq!(cfg.model.kind, ModelKind::ExtraTrees);
        assert_eq!(cfg.model.strategy, StrategyTag::Smote);
        assert_eq!(cfg.counterfactuals.methods, vec![CfMethod::Nice, CfMethod::WhatIf]);
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn invalid_strategy_is_config_error() {
        let e = RunConfig::from_toml("seed = 1\n[model]\nstrategy = \"bogus\"\n").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn seed_required() {
        assert!(RunConfig::default().validate().is_err());
        assert!(RunConfig::with_seed(3).validate().is_ok());
    }

    #[test]
    fn env_overrides() {
        let mut cfg = RunConfig::with_seed(1);
        cfg.apply_env(|k| match k {
            ENV_SEED => Some("9".into()),
            ENV_STRATEGY => Some("undersampling".into()),
            ENV_METHODS => Some("moc,nice".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.model.strategy, StrategyTag::Undersampling);
        assert_eq!(cfg.counterfactuals.methods, vec![CfMethod::Moc, CfMethod::Nice]);
    }

    #[test]
    fn hash_ignores_out_dir() {
        let a = RunConfig::with_seed(1);
        let mut b = a.clone();
        b.out_dir = Some("elsewhere".into());
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = Some(2);
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
