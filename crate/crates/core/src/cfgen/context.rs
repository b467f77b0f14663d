use super::objectives::PlausibilityIndex;
use crate::dataset::DataTable;
use crate::trees::EnsembleModel;
use crate::{par, Error, Result};

pub const DEFAULT_PLAUSIBILITY_K: usize = 10;

/// A model together with its reference rows and their predicted labels.
/// Build once per model and reuse across queries.
#[derive(Debug, Clone)]
pub struct CfContext<'a> {
    pub model: &'a EnsembleModel,
    pub reference: &'a DataTable,
    pub predicted: Vec<u8>,
    pub plausibility: PlausibilityIndex,
}

impl<'a> CfContext<'a> {
    pub fn new(model: &'a EnsembleModel, reference: &'a DataTable, k_plausibility: usize) -> Result<Self> {
        if reference.feature_names() != model.feature_names {
            return Err(Error::Schema(format!(
                "reference columns {:?} do not match model features {:?}",
                reference.feature_names(),
                model.feature_names
            )));
        }
        let predicted = par::try_map_slice(reference.rows(), |r| model.predict_label(&r.indicators))?;
        let plausibility = PlausibilityIndex::new(reference, &model.schema, k_plausibility)?;
        Ok(CfContext {
            model,
            reference,
            predicted,
            plausibility,
        })
    }

    /// Reference row indices predicted as `class`.
    pub fn rows_predicted(&self, class: u8) -> impl Iterator<Item = usize> + '_ {
        self.predicted
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == class)
            .map(|(i, _)| i)
    }
}
