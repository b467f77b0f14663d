//! Trained models as served: a directory holding `model.json` and
//! `reference.csv`, identified by the directory name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bankcf_core::cfgen::{CfContext, PlausibilityIndex, DEFAULT_PLAUSIBILITY_K};
use bankcf_core::dataset::{load_csv, DataTable};
use bankcf_core::trees::{load_model, EnsembleModel};

pub const MODEL_FILE: &str = "model.json";
pub const REFERENCE_FILE: &str = "reference.csv";

/// A loaded model with the per-model parts of a counterfactual context
/// computed once, so requests only borrow.
#[derive(Debug)]
pub struct ModelBundle {
    pub id: String,
    pub model: EnsembleModel,
    pub reference: DataTable,
    predicted: Vec<u8>,
    plausibility: PlausibilityIndex,
}

impl ModelBundle {
    pub fn new(id: impl Into<String>, model: EnsembleModel, reference: DataTable) -> anyhow::Result<Self> {
        let ctx = CfContext::new(&model, &reference, DEFAULT_PLAUSIBILITY_K)?;
        let (predicted, plausibility) = (ctx.predicted, ctx.plausibility);
        Ok(ModelBundle {
            id: id.into(),
            model,
            reference,
            predicted,
            plausibility,
        })
    }

    pub fn load(dir: &Path) -> anyhow::Result<Self> {
        let id = dir
            .canonicalize()
            .unwrap_or_else(|_| dir.to_path_buf())
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into());
        let model = load_model(dir.join(MODEL_FILE), None).with_context(|| format!("loading model `{id}`"))?;
        let reference =
            load_csv(dir.join(REFERENCE_FILE), &model.schema).with_context(|| format!("loading reference rows of `{id}`"))?;
        Self::new(id, model, reference)
    }

    pub fn context(&self) -> CfContext<'_> {
        CfContext {
            model: &self.model,
            reference: &self.reference,
            predicted: self.predicted.clone(),
            plausibility: self.plausibility.clone(),
        }
    }
}

/// Models by id.
#[derive(Debug, Default)]
pub struct Registry {
    models: BTreeMap<String, ModelBundle>,
}

impl Registry {
    pub fn insert(&mut self, bundle: ModelBundle) -> anyhow::Result<()> {
        if self.models.contains_key(&bundle.id) {
            bail!("two models share the id `{}`", bundle.id);
        }
        self.models.insert(bundle.id.clone(), bundle);
        Ok(())
    }

    /// Each path is either a bundle directory or a directory of bundles.
    pub fn load(paths: &[PathBuf]) -> anyhow::Result<Self> {
        let mut reg = Registry::default();
        for path in paths {
            if path.join(MODEL_FILE).is_file() {
                reg.insert(ModelBundle::load(path)?)?;
                continue;
            }
            let mut dirs: Vec<PathBuf> = std::fs::read_dir(path)
                .with_context(|| format!("reading {}", path.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.join(MODEL_FILE).is_file())
                .collect();
            dirs.sort();
            if dirs.is_empty() {
                bail!("{} holds no {MODEL_FILE}", path.display());
            }
            for d in dirs {
                reg.insert(ModelBundle::load(&d)?)?;
            }
        }
        Ok(reg)
    }

    pub fn get(&self, id: &str) -> Option<&ModelBundle> {
        self.models.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModelBundle> {
        self.models.values()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}
