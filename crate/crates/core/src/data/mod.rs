//! Dataset ingestion, preprocessing and splitting.

mod imbalance;
mod preprocess;
mod raw;
mod split;

pub use imbalance::{balance_by_downsampling, imbalance_ratio, induce_imbalance, Induced};
pub use preprocess::{preprocess, FeaturePlan, Pca, ProcessedDataset, Transform};
pub use raw::{
    load_csv, load_keel_dat, parse_keel, Column, ColumnKind, CsvColumnType, CsvSchema, Field,
    RawDataset,
};
pub use split::{
    cv_splits, stratified_kfold, stratified_partition, stratified_split, SplitIndices,
};
