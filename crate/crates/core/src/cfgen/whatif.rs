//! Nearest observed instance with the desired prediction.

use super::context::{CfContext, DEFAULT_PLAUSIBILITY_K};
use super::distance::gower_unchecked;
use super::{sort_by_sparsity_then_proximity, CfMethod, CfOutcome, CfQuery, Counterfactual};
use crate::dataset::DataTable;
use crate::trees::EnsembleModel;
use crate::Result;

/// Reference rows predicted as the desired class, closest first by Gower
/// distance (ties by row order). Rows that differ from the factual on a
/// frozen feature are skipped.
pub fn whatif_in(ctx: &CfContext<'_>, query: &CfQuery) -> Result<CfOutcome> {
    let frozen = query.validate(ctx.model)?;
    let schema = &ctx.model.schema;
    let mut scored: Vec<(f64, usize)> = ctx
        .rows_predicted(query.desired_class)
        .filter(|&i| {
            let row = ctx.reference.row_values(i);
            frozen
                .iter()
                .zip(row.iter().zip(&query.factual))
                .all(|(&f, (a, b))| !f || a == b)
        })
        .map(|i| (gower_unchecked(ctx.reference.row_values(i), &query.factual, schema), i))
        .collect();
    if scored.is_empty() {
        return Ok(CfOutcome::none(
            "no reference row is predicted as the desired class (after applying frozen features)",
        ));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(query.max_counterfactuals);
    let cfs: Vec<Counterfactual> = scored
        .into_iter()
        .map(|(_, i)| {
            Counterfactual::build(
                ctx.reference.row_values(i).to_vec(),
                CfMethod::WhatIf,
                query,
                ctx.model,
                &ctx.plausibility,
            )
        })
        .collect();
    Ok(CfOutcome::found(cfs))
}

pub fn generate_whatif(query: &CfQuery, model: &EnsembleModel, reference: &DataTable) -> Result<CfOutcome> {
    let ctx = CfContext::new(model, reference, DEFAULT_PLAUSIBILITY_K)?;
    whatif_in(&ctx, query)
}

/// Sorting used when several generators' outputs are merged for display.
pub fn sort_for_display(cfs: &mut [Counterfactual]) {
    sort_by_sparsity_then_proximity(cfs);
}
