//! Experiment configuration read from TOML.
//!
//! ```toml
//! name = "yeast5"
//! seeds = [0, 1, 2]
//! folds = 4
//! methods = ["ce", "rs", "smote", "focal", "explicit_gradient"]
//!
//! [[datasets]]
//! path = "../data/keel/yeast5.dat"
//!
//! [model]
//! hidden = [64]
//! lr = 1e-2
//!
//! [meta]
//! eta1 = 1e-2
//! eta2 = 10.0
//! ```
//!
//! Relative dataset paths resolve against the directory of the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use metaug::data::CsvSchema;
use metaug::meta::MetaConfig;
use metaug::model::{Activation, LossKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ce,
    Rs,
    Smote,
    Focal,
    ExplicitGradient,
    Potential,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ce,
        Method::Rs,
        Method::Smote,
        Method::Focal,
        Method::ExplicitGradient,
        Method::Potential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ce => "ce",
            Method::Rs => "rs",
            Method::Smote => "smote",
            Method::Focal => "focal",
            Method::ExplicitGradient => "explicit_gradient",
            Method::Potential => "potential",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Keel,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub path: PathBuf,
    /// Inferred from the extension when absent (`.dat` is KEEL).
    #[serde(default)]
    pub format: Option<DataFormat>,
    /// Defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub csv: Option<CsvSchema>,
}

impl DatasetSpec {
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            format: None,
            name: None,
            csv: None,
        }
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    pub fn format(&self) -> DataFormat {
        self.format
            .unwrap_or_else(|| match self.path.extension().and_then(|e| e.to_str()) {
                Some("csv") => DataFormat::Csv,
                _ => DataFormat::Keel,
            })
    }
}

/// Fixed classifier and its optimiser settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Adam learning rate.
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hidden: vec![128, 16],
            activation: Activation::Relu,
            lr: 1e-3,
            epochs: 200,
            batch_size: 128,
        }
    }
}

/// Architecture and learning-rate search. Each candidate has `layers`
/// hidden layers of equal `width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub layers: Vec<usize>,
    pub widths: Vec<usize>,
    pub lrs: Vec<f64>,
    /// Training epochs per candidate; `model.epochs` when absent.
    pub epochs: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            layers: vec![1, 2, 3],
            widths: vec![16, 32, 64, 128],
            lrs: vec![1e-1, 1e-2, 1e-3],
            epochs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocalSpec {
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for FocalSpec {
    fn default() -> Self {
        match LossKind::focal_default() {
            LossKind::Focal { gamma, alpha } => Self { gamma, alpha },
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSpec {
    pub k: usize,
    /// New rows as a multiple of the training minority count.
    pub ratio: f64,
}

impl Default for SmoteSpec {
    fn default() -> Self {
        Self {
            k: metaug::resampling::SMOTE_DEFAULT_K,
            ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub datasets: Vec<DatasetSpec>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub folds: usize,
    /// Share of the non-test rows of each fold used for validation.
    pub valid_fraction: f64,
    /// Downsample the majority class to a balanced set before anything else.
    pub balance: bool,
    /// Target imbalance ratio, induced by dropping minority rows.
    pub ir: Option<f64>,
    pub pca_dim: Option<usize>,
    /// Decision threshold for F1, MCC, kappa and accuracy.
    pub threshold: f64,
    pub model: ModelSpec,
    pub grid: Option<GridSpec>,
    pub meta: MetaConfig,
    pub focal: FocalSpec,
    pub smote: SmoteSpec,
    pub out: PathBuf,
    /// Also render SVG plots.
    pub svg: bool,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            datasets: Vec::new(),
            methods: vec![
                Method::Ce,
                Method::Rs,
                Method::Smote,
                Method::Focal,
                Method::ExplicitGradient,
            ],
            seeds: vec![0],
            folds: 4,
            valid_fraction: 0.2,
            balance: false,
            ir: None,
            pca_dim: None,
            threshold: 0.5,
            model: ModelSpec::default(),
            grid: None,
            meta: MetaConfig {
                epochs: 20,
                ..MetaConfig::default()
            },
            focal: FocalSpec::default(),
            smote: SmoteSpec::default(),
            out: PathBuf::from("runs"),
            svg: true,
            threads: 0,
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// A dataset file, or the name of one of the configured datasets.
    pub dataset: Option<String>,
    pub methods: Option<Vec<Method>>,
    pub ir: Option<f64>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path` and resolves relative dataset paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for d in &mut cfg.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(d) = &o.dataset {
            let by_name: Vec<DatasetSpec> = self
                .datasets
                .iter()
                .filter(|s| s.name() == *d)
                .cloned()
                .collect();
            if !by_name.is_empty() {
                self.datasets = by_name;
            } else if Path::new(d).exists() {
                self.datasets = vec![DatasetSpec::from_path(d)];
            } else {
                return Err(CliError::Config(format!(
                    "'{d}' is neither a configured dataset nor a file"
                )));
            }
        }
        if let Some(m) = &o.methods {
            self.methods = m.clone();
        }
        if let Some(ir) = o.ir {
            self.ir = Some(ir);
        }
        if let Some(k) = o.folds {
            self.folds = k;
        }
        if let Some(s) = o.seed {
            self.seeds = vec![s];
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.datasets.is_empty() {
            return bad("no datasets configured".into());
        }
        if self.methods.is_empty() {
            return bad("no methods configured".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds configured".into());
        }
        if self.folds < 2 {
            return bad(format!("need at least 2 folds, got {}", self.folds));
        }
        if !(self.valid_fraction > 0.0 && self.valid_fraction < 1.0) {
            return bad(format!(
                "valid_fraction {} not in (0, 1)",
                self.valid_fraction
            ));
        }
        if self.methods.contains(&Method::Potential) && self.ir.is_none() {
            return bad("method 'potential' needs an induced imbalance ('ir')".into());
        }
        if let Some(ir) = self.ir {
            if !(ir >= 1.0 && ir.is_finite()) {
                return bad(format!("ir must be >= 1, got {ir}"));
            }
        }
        if self.model.hidden.iter().any(|&w| w == 0)
            || self.model.epochs == 0
            || self.model.batch_size == 0
        {
            return bad("model widths, epochs and batch size must be positive".into());
        }
        if !(self.model.lr > 0.0) {
            return bad(format!("model lr must be positive, got {}", self.model.lr));
        }
        if let Some(g) = &self.grid {
            if g.layers.is_empty() || g.widths.is_empty() || g.lrs.is_empty() {
                return bad("grid must have at least one value per axis".into());
            }
            if g.layers.contains(&0) || g.widths.contains(&0) || g.lrs.iter().any(|&lr| !(lr > 0.0))
            {
                return bad("grid values must be positive".into());
            }
        }
        if self.methods.contains(&Method::ExplicitGradient) {
            self.meta
                .validate()
                .map_err(|e| CliError::Config(format!("meta: {e}")))?;
        }
        if self.smote.k == 0 || !(self.smote.ratio > 0.0) {
            return bad("smote k and ratio must be positive".into());
        }
        let mut names: Vec<String> = self.datasets.iter().map(DatasetSpec::name).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("dataset names must be unique".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_file() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            methods = ["ce", "explicit_gradient"]
            [[datasets]]
            path = "a.dat"
            [meta]
            eta2 = 5.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.methods, vec![Method::Ce, Method::ExplicitGradient]);
        assert_eq!(cfg.meta.eta2, 5.0);
        assert_eq!(cfg.meta.eta1, 1e-2);
        assert_eq!(cfg.datasets[0].format(), DataFormat::Keel);
        assert_eq!(cfg.datasets[0].name(), "a");
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::from_toml("[model]\nwidth = 3").is_err());
    }

    #[test]
    fn potential_needs_an_ir() {
        let mut cfg = ExperimentConfig {
            datasets: vec![DatasetSpec::from_path("a.dat")],
            methods: vec![Method::Potential],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.ir = Some(50.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("smote2".parse::<Method>().is_err());
    }

    #[test]
    fn overrides_select_a_dataset_by_name() {
        let mut cfg = ExperimentConfig {
            datasets: vec![
                DatasetSpec::from_path("x/a.dat"),
                DatasetSpec::from_path("x/b.dat"),
            ],
            ..Default::default()
        };
        cfg.apply(&Overrides {
            dataset: Some("b".into()),
            seed: Some(9),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(cfg.datasets.len(), 1);
        assert_eq!(cfg.seeds, vec![9]);
        assert!(cfg
            .apply(&Overrides {
                dataset: Some("nope".into()),
                ..Default::default()
            })
            .is_err());
    }
}
