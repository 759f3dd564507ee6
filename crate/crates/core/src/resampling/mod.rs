//! Resampling baselines and the synthetic minority set.

mod oversample;
mod synthetic;

pub use oversample::{
    balanced_batches, smote, upsample_minority, BalancedBatches, SmoteDraw, SmoteOutput,
    SMOTE_DEFAULT_K,
};
pub use synthetic::{init_synthetic, SyntheticSet};
