//! Random-forest regression with a fitted correction for the forest's
//! toward-the-mean prediction bias.
//!
//! The pieces compose into one workflow: generate or load a [`data::Dataset`],
//! split it, train a [`forest::ForestModel`] (standard or purely random),
//! predict on the training rows, fit a [`correction::CorrectionModel`] mapping
//! raw predictions to ground truth, apply it to new predictions and compare
//! the results with [`evaluation::evaluate`].

pub mod baseline;
pub mod cli;
pub mod correction;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod forest;
mod lsq;
pub mod model_io;
pub mod pure_forest;
pub mod rng;

pub use baseline::{fit_ols, predict_linear, LinearModel};
pub use correction::{
    apply_correction, eval_correction, fit_correction, logistic_shifted, logit_core, select_family,
    CorrectionFamily, CorrectionModel,
};
pub use data::{generate_synthetic, load_csv, split_dataset, Dataset, SplitSpec, SyntheticSpec};
pub use error::{Error, Result};
pub use evaluation::{evaluate, fit_line, linearized_residuals, mse, runs_test, EvaluationReport, RunsTestResult, Sign};
pub use forest::{best_split, predict, predict_batch, train_forest, ForestModel, ForestParams, Tree};
pub use pure_forest::{random_split, train_pure_forest, PureForestParams};
pub use rng::RngStream;
