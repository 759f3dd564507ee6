use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    /// A pipeline stage failed for one dataset / seed / fold.
    #[error("{dataset} seed {seed} fold {fold}: stage '{stage}' failed: {source}")]
    Stage {
        dataset: String,
        seed: u64,
        fold: usize,
        stage: &'static str,
        #[source]
        source: metaug::Error,
    },

    /// A failure that is not tied to one fold (loading, dataset-level setup).
    #[error("{dataset}: stage '{stage}' failed: {source}")]
    Dataset {
        dataset: String,
        stage: &'static str,
        #[source]
        source: metaug::Error,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report: {0}")]
    Report(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
