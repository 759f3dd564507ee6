//! Per-fold experiment pipeline.
//!
//! For every dataset and master seed:
//!
//! 1. load, optionally balance by downsampling, optionally induce imbalance;
//! 2. stratified k-fold, with a stratified validation slice of the non-test
//!    rows of each fold;
//! 3. per fold: fit preprocessing on the training rows, pick the classifier
//!    (grid search or fixed), train every method, score the test fold.
//!
//! Child seeds come from [`metaug::seed::derive`] on
//! `(master, [dataset, "fold<i>", purpose])`. All methods of a fold share the
//! same initial weights and the same shuffling stream.

use metaug::autodiff::Tensor;
use metaug::data::{
    balance_by_downsampling, cv_splits, induce_imbalance, load_csv, load_keel_dat, preprocess,
    CsvSchema, ProcessedDataset, RawDataset, SplitIndices,
};
use metaug::meta::{meta_train, MetaState};
use metaug::metrics::{average_precision, evaluate, pr_curve, MetricReport, PrCurve};
use metaug::model::{self, BatchSampler, LossKind, OptimizerKind, ParamSet, TrainConfig};
use metaug::resampling::{init_synthetic, smote, BalancedBatches};
use metaug::seed;
use rayon::prelude::*;

use crate::config::{DataFormat, DatasetSpec, ExperimentConfig, Method};
use crate::error::{CliError, Result};
use crate::grid::{grid_search, Candidate, GridResult};

/// A dataset after balancing and imbalance induction for one master seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub name: String,
    pub seed: u64,
    /// Rows available to the pipeline, including the withheld pool.
    pub raw: RawDataset,
    /// Positions in `raw` taking part in cross-validation.
    pub retained: Vec<usize>,
    /// Minority positions in `raw` dropped by imbalance induction.
    pub withheld: Vec<usize>,
    /// Folds as positions in `raw`.
    pub splits: Vec<SplitIndices>,
    /// Target ratio if one was induced, else the measured one.
    pub ir: f64,
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub metrics: MetricReport,
    pub curve: PrCurve,
    pub params: ParamSet,
    pub meta: Option<MetaState>,
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub dataset: String,
    pub seed: u64,
    pub fold: usize,
    pub ir: f64,
    pub selection: GridResult,
    /// In configured method order.
    pub methods: Vec<MethodOutcome>,
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<RawDataset> {
    let name = spec.name();
    let wrap = |source| CliError::Dataset {
        dataset: name.clone(),
        stage: "load",
        source,
    };
    let mut raw = match spec.format() {
        DataFormat::Keel => load_keel_dat(&spec.path).map_err(wrap)?,
        DataFormat::Csv => {
            let schema = match &spec.csv {
                Some(s) => s.clone(),
                None => csv_schema_from_header(&spec.path)?,
            };
            load_csv(&spec.path, &schema).map_err(wrap)?
        }
    };
    raw.name = name;
    Ok(raw)
}

/// Schema-less default for CSV files named on the command line: the last
/// column is the label.
pub fn csv_schema_from_header(path: &std::path::Path) -> Result<CsvSchema> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let header = text.lines().next().unwrap_or_default();
    let label = header.rsplit(',').next().unwrap_or_default().trim();
    if label.is_empty() {
        return Err(CliError::Config(format!(
            "{}: empty header",
            path.display()
        )));
    }
    Ok(CsvSchema::new(label))
}

pub fn prepare(raw: &RawDataset, cfg: &ExperimentConfig, master: u64) -> Result<Prepared> {
    let name = raw.name.clone();
    let wrap = |stage: &'static str| {
        let name = name.clone();
        move |source| CliError::Dataset {
            dataset: name,
            stage,
            source,
        }
    };
    let raw = if cfg.balance {
        let idx = balance_by_downsampling(&raw.labels, seed::derive(master, &[&name, "balance"]))
            .map_err(wrap("balance"))?;
        raw.subset(&idx)
    } else {
        raw.clone()
    };
    let (retained, withheld, ir) = match cfg.ir {
        Some(target) => {
            let induced = induce_imbalance(
                &raw.labels,
                target,
                seed::derive(master, &[&name, "induce"]),
            )
            .map_err(wrap("induce"))?;
            (induced.retained, induced.withheld, target)
        }
        None => ((0..raw.len()).collect(), Vec::new(), raw.imbalance_ratio()),
    };
    let y: Vec<u8> = retained.iter().map(|&i| raw.labels[i]).collect();
    let splits = cv_splits(
        &y,
        cfg.folds,
        cfg.valid_fraction,
        seed::derive(master, &[&name, "split"]),
    )
    .map_err(wrap("split"))?
    .into_iter()
    .map(|s| {
        let back = |v: Vec<usize>| v.into_iter().map(|p| retained[p]).collect();
        SplitIndices {
            train: back(s.train),
            valid: back(s.valid),
            test: back(s.test),
        }
    })
    .collect();
    Ok(Prepared {
        name,
        seed: master,
        raw,
        retained,
        withheld,
        splits,
        ir,
    })
}

fn stage_name(m: Method) -> &'static str {
    match m {
        Method::Ce => "train_ce",
        Method::Rs => "train_rs",
        Method::Smote => "train_smote",
        Method::Focal => "train_focal",
        Method::ExplicitGradient => "meta_train",
        Method::Potential => "train_potential",
    }
}

struct Fold<'a> {
    cfg: &'a ExperimentConfig,
    data: ProcessedDataset,
    split: &'a SplitIndices,
    withheld: &'a [usize],
    dataset: &'a str,
    master: u64,
    fold: usize,
}

impl Fold<'_> {
    fn seed(&self, purpose: &str) -> u64 {
        seed::derive(
            self.master,
            &[self.dataset, &format!("fold{}", self.fold), purpose],
        )
    }

    fn labels(&self, idx: &[usize]) -> Vec<u8> {
        idx.iter().map(|&i| self.data.y[i]).collect()
    }

    fn init(&self, cand: &Candidate) -> metaug::Result<ParamSet> {
        ParamSet::init(
            &cand.architecture(self.data.dim(), self.cfg.model.activation),
            self.seed("init"),
        )
    }

    fn train_config(&self, epochs: usize) -> TrainConfig {
        TrainConfig {
            batch_size: self.cfg.model.batch_size,
            epochs,
            seed: self.seed("train"),
        }
    }

    fn fit(
        &self,
        cand: &Candidate,
        x: &Tensor,
        y: &Tensor,
        loss: LossKind,
        epochs: usize,
        sampler: Option<&mut dyn BatchSampler>,
    ) -> metaug::Result<ParamSet> {
        let init = self.init(cand)?;
        let opt = OptimizerKind::adam(cand.lr);
        Ok(model::train(&init, x, y, loss, opt, &self.train_config(epochs), sampler)?.params)
    }

    fn select(&self) -> Result<GridResult> {
        let Some(grid) = &self.cfg.grid else {
            let c = self.cfg.model.candidate();
            return Ok(GridResult {
                best: c.clone(),
                best_score: f64::NAN,
                scores: vec![(c, f64::NAN)],
            });
        };
        let (xt, yt) = self.data.select(&self.split.train);
        let (xv, _) = self.data.select(&self.split.valid);
        let yv = self.labels(&self.split.valid);
        let epochs = grid.epochs.unwrap_or(self.cfg.model.epochs);
        Ok(grid_search(&grid.candidates(), self.data.dim(), |c| {
            let scored = self
                .fit(c, &xt, &yt, LossKind::Bce, epochs, None)
                .and_then(|p| p.predict(&xv))
                .and_then(|s| pr_curve(&s, &yv));
            match scored {
                Ok(curve) => average_precision(&curve),
                Err(e) => {
                    log::warn!(
                        "{} fold {}: candidate {} lr {} failed: {e}",
                        self.dataset,
                        self.fold,
                        c.label(),
                        c.lr
                    );
                    f64::NEG_INFINITY
                }
            }
        }))
    }

    fn run_method(
        &self,
        m: Method,
        cand: &Candidate,
        ce: Option<&ParamSet>,
    ) -> metaug::Result<(ParamSet, Option<MetaState>)> {
        let cfg = self.cfg;
        let train = &self.split.train;
        let (xt, yt) = self.data.select(train);
        let ytr = self.labels(train);
        let epochs = cfg.model.epochs;
        let params = match m {
            Method::Ce => self.fit(cand, &xt, &yt, LossKind::Bce, epochs, None)?,
            Method::Rs => {
                let pos = ytr.iter().filter(|&&l| l == 1).count();
                if pos * 2 == ytr.len() {
                    self.fit(cand, &xt, &yt, LossKind::Bce, epochs, None)?
                } else {
                    let mut sampler = BalancedBatches::new(&ytr)?;
                    self.fit(cand, &xt, &yt, LossKind::Bce, epochs, Some(&mut sampler))?
                }
            }
            Method::Focal => {
                let loss = LossKind::Focal {
                    gamma: cfg.focal.gamma,
                    alpha: cfg.focal.alpha,
                };
                self.fit(cand, &xt, &yt, loss, epochs, None)?
            }
            Method::Smote => {
                let minority: Vec<usize> = train
                    .iter()
                    .copied()
                    .filter(|&i| self.data.y[i] == 1)
                    .collect();
                let n_new = (cfg.smote.ratio * minority.len() as f64).round() as usize;
                let k = cfg.smote.k.min(minority.len().saturating_sub(1)).max(1);
                let out = smote(
                    &self.data.x.select_rows(&minority),
                    k,
                    n_new,
                    self.seed("smote"),
                )?;
                let x = Tensor::vstack(&[&xt, &out.rows])?;
                let y = Tensor::vstack(&[&yt, &Tensor::full(&[n_new, 1], 1.0)])?;
                self.fit(cand, &x, &y, LossKind::Bce, epochs, None)?
            }
            Method::Potential => {
                let (xw, yw) = self.data.select(self.withheld);
                let x = Tensor::vstack(&[&xt, &xw])?;
                let y = Tensor::vstack(&[&yt, &yw])?;
                self.fit(cand, &x, &y, LossKind::Bce, epochs, None)?
            }
            Method::ExplicitGradient => {
                let theta0 = match ce {
                    Some(p) => p.clone(),
                    None => self.fit(cand, &xt, &yt, LossKind::Bce, epochs, None)?,
                };
                let synthetic = init_synthetic(&xt, &ytr, &theta0, cfg.meta.c)?;
                let (xv, yv) = self.data.select(&self.split.valid);
                let classes = self.labels(&self.split.valid);
                let meta_cfg = metaug::meta::MetaConfig {
                    seed: self.seed("meta"),
                    ..cfg.meta
                };
                let state =
                    meta_train(&xt, &yt, &xv, &yv, &classes, &theta0, synthetic, &meta_cfg)?;
                return Ok((state.theta.clone(), Some(state)));
            }
        };
        Ok((params, None))
    }
}

fn run_fold(prep: &Prepared, fold: usize, cfg: &ExperimentConfig) -> Result<FoldOutcome> {
    let split = &prep.splits[fold];
    let err = |stage: &'static str| {
        move |source| CliError::Stage {
            dataset: prep.name.clone(),
            seed: prep.seed,
            fold,
            stage,
            source,
        }
    };
    let data = preprocess(&prep.raw, &split.train, cfg.pca_dim).map_err(err("preprocess"))?;
    let ctx = Fold {
        cfg,
        data,
        split,
        withheld: &prep.withheld,
        dataset: &prep.name,
        master: prep.seed,
        fold,
    };
    let selection = ctx.select()?;
    let (xtest, _) = ctx.data.select(&split.test);
    let ytest = ctx.labels(&split.test);

    let mut ce_params: Option<ParamSet> = None;
    let mut methods = Vec::with_capacity(cfg.methods.len());
    // CE first when it is also the starting point of the meta loop.
    let mut order = cfg.methods.clone();
    if order.contains(&Method::ExplicitGradient) && order.contains(&Method::Ce) {
        order.retain(|&m| m != Method::Ce);
        order.insert(0, Method::Ce);
    }
    for m in order {
        let (params, meta) = ctx
            .run_method(m, &selection.best, ce_params.as_ref())
            .map_err(err(stage_name(m)))?;
        let scores = params.predict(&xtest).map_err(err("evaluate"))?;
        let metrics = evaluate(&scores, &ytest, cfg.threshold).map_err(err("evaluate"))?;
        let curve = pr_curve(&scores, &ytest).map_err(err("evaluate"))?;
        if m == Method::Ce {
            ce_params = Some(params.clone());
        }
        methods.push(MethodOutcome {
            method: m,
            metrics,
            curve,
            params,
            meta,
        });
    }
    methods.sort_by_key(|o| cfg.methods.iter().position(|&m| m == o.method));
    Ok(FoldOutcome {
        dataset: prep.name.clone(),
        seed: prep.seed,
        fold,
        ir: prep.ir,
        selection,
        methods,
    })
}

/// Runs every dataset x seed x fold. Folds run on the rayon pool; results
/// come back in dataset, seed, fold order whatever the scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<FoldOutcome>> {
    cfg.validate()?;
    let mut prepared = Vec::new();
    for spec in &cfg.datasets {
        let raw = load_dataset(spec)?;
        log::info!(
            "{}: {} rows, {} minority, {} dropped for missing values",
            raw.name,
            raw.len(),
            raw.class_counts().1,
            raw.dropped_missing
        );
        for &s in &cfg.seeds {
            prepared.push(prepare(&raw, cfg, s)?);
        }
    }
    let tasks: Vec<(&Prepared, usize)> = prepared
        .iter()
        .flat_map(|p| (0..p.splits.len()).map(move |f| (p, f)))
        .collect();
    let work = || {
        tasks
            .par_iter()
            .map(|&(p, f)| {
                let out = run_fold(p, f, cfg);
                if out.is_ok() {
                    log::info!("{} seed {} fold {} done", p.name, p.seed, f);
                }
                out
            })
            .collect::<Vec<_>>()
    };
    let results = if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    results.into_iter().collect()
}
