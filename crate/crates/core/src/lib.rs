//! Imbalanced tabular classification with synthetic minority samples learned
//! by differentiating a validation loss through a classifier update.
//!
//! The pieces, bottom-up:
//!
//! - [`autodiff`]: a small reverse-mode engine whose backward pass is itself
//!   differentiable.
//! - [`model`]: MLP classifier/regressor, losses, SGD/Adam, a training loop.
//! - [`data`]: KEEL `.dat` and CSV ingestion, preprocessing, stratified
//!   splitting and induced imbalance.
//! - [`resampling`]: upsampling, balanced batches, SMOTE, and selection of the
//!   initial synthetic set.
//! - [`meta`]: the adapt-then-update loop over the synthetic points.
//! - [`metrics`]: precision-recall curve, average precision and threshold
//!   metrics.
//! - [`sine_demo`]: the toy imbalanced sine regression.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod meta;
pub mod metrics;
pub mod model;
pub mod resampling;
pub mod seed;
pub mod sine_demo;

pub use error::{Error, Result};
