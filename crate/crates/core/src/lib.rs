//! Counterfactual explanations for tree-ensemble bank failure models.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] ingests bank-quarter financials, applies lagged failure
//!   labels and produces in-sample / out-of-sample / out-of-time partitions.
//! * [`balancing`] implements undersampling, oversampling, SMOTE and
//!   cost-sensitive weights.
//! * [`trees`] holds a CART decision tree plus random forest and extra-trees
//!   ensembles with sample-weight support.
//! * [`cfgen`] generates counterfactuals with WhatIf, NICE and MOC.
//! * [`evaluation`] scores classifiers and counterfactuals and aggregates the
//!   benchmark grid.
//! * [`pipeline`] ties everything together for the `train`, `benchmark` and
//!   `explain` commands.
//!
//! With the default `parallel` feature the data-parallel loops (tree fitting,
//! batch prediction, MOC evaluation, benchmark cells) run on rayon; without
//! it every loop falls back to a sequential iterator with identical results.

pub mod balancing;
pub mod cfgen;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod trees;

pub use error::{Error, Result};
