//! Greedy substitution from the nearest unlike neighbour.
//!
//! The nearest unlike neighbour (NUN) is the closest reference row, under
//! HEOM, that the model predicts as the desired class. Starting from the
//! factual, NUN values are copied in one feature at a time, each step taking
//! the substitution that most increases the desired-class probability. At
//! the first step where some single substitution flips the prediction, every
//! flipping candidate of that step is returned.

use super::context::{CfContext, DEFAULT_PLAUSIBILITY_K};
use super::distance::l1_unchecked;
use super::{sort_by_sparsity_then_proximity, CfMethod, CfOutcome, CfQuery, Counterfactual};
use crate::dataset::DataTable;
use crate::trees::EnsembleModel;
use crate::Result;

/// Index of the nearest unlike neighbour in the reference table.
pub fn nearest_unlike_neighbour(ctx: &CfContext<'_>, query: &CfQuery) -> Option<usize> {
    let schema = &ctx.model.schema;
    ctx.rows_predicted(query.desired_class)
        .map(|i| (l1_unchecked(ctx.reference.row_values(i), &query.factual, schema), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
}

pub fn nice_in(ctx: &CfContext<'_>, query: &CfQuery) -> Result<CfOutcome> {
    let frozen = query.validate(ctx.model)?;
    let Some(nun_idx) = nearest_unlike_neighbour(ctx, query) else {
        return Ok(CfOutcome::none("no reference row is predicted as the desired class"));
    };
    let nun = ctx.reference.row_values(nun_idx);
    let mut remaining: Vec<usize> = (0..nun.len())
        .filter(|&j| nun[j] != query.factual[j] && !frozen[j])
        .collect();
    let mut current = query.factual.clone();

    while !remaining.is_empty() {
        let candidates: Vec<(usize, Vec<f64>, f64)> = remaining
            .iter()
            .map(|&j| {
                let mut x = current.clone();
                x[j] = nun[j];
                let p = query.desired_proba_of(ctx.model, &x);
                (j, x, p)
            })
            .collect();
        let flipped: Vec<Vec<f64>> = candidates
            .iter()
            .filter(|(_, x, _)| query.flips(ctx.model, x))
            .map(|(_, x, _)| x.clone())
            .collect();
        if !flipped.is_empty() {
            let mut cfs: Vec<Counterfactual> = flipped
                .into_iter()
                .map(|x| Counterfactual::build(x, CfMethod::Nice, query, ctx.model, &ctx.plausibility))
                .collect();
            sort_by_sparsity_then_proximity(&mut cfs);
            cfs.truncate(query.max_counterfactuals);
            return Ok(CfOutcome::found(cfs));
        }
        // Highest desired probability; ties go to the lowest feature index.
        let (best_j, best_x, _) = candidates
            .into_iter()
            .reduce(|a, b| if b.2 > a.2 { b } else { a })
            .expect("non-empty");
        current = best_x;
        remaining.retain(|&j| j != best_j);
    }
    Ok(CfOutcome::none(
        "copying every non-frozen feature from the nearest unlike neighbour does not flip the prediction",
    ))
}

pub fn generate_nice(query: &CfQuery, model: &EnsembleModel, reference: &DataTable) -> Result<CfOutcome> {
    let ctx = CfContext::new(model, reference, DEFAULT_PLAUSIBILITY_K)?;
    nice_in(&ctx, query)
}
