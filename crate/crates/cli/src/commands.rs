//! Subcommand bodies. Each writes into `cfg.out` and returns the paths it
//! wrote.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use metaug::data::preprocess;
use metaug::meta::{convergence_report, MetaConfig};
use metaug::sine_demo::{run_sine_experiment, SineExperiment, SineTask};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::error::{CliError, Result};
use crate::pipeline::{load_dataset, prepare, run_experiment, FoldOutcome};
use crate::report::{emit_reports, read_outputs, Outputs};
use crate::svg::{LinePlot, Series};

pub const PREP_HEADER: &str =
    "dataset,seed,rows,majority,minority,ir,withheld,dropped_missing,encoded_width,features";
pub const SINE_HEADER: &str =
    "seed,status,baseline_mse,pretrained_mse,meta_mse,distance_initial,distance_final";

fn write_file(path: &Path, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    written.push(path.to_path_buf());
    Ok(())
}

/// Loads, balances and induces imbalance, then writes the preprocessed
/// retained rows (fitted on all of them) and a summary line per dataset.
pub fn prep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut summary = format!("{PREP_HEADER}\n");
    let master = cfg.seeds[0];
    for spec in &cfg.datasets {
        let raw = load_dataset(spec)?;
        let p = prepare(&raw, cfg, master)?;
        let data =
            preprocess(&p.raw, &p.retained, cfg.pca_dim).map_err(|source| CliError::Dataset {
                dataset: p.name.clone(),
                stage: "preprocess",
                source,
            })?;
        let mut csv = (0..data.dim())
            .map(|j| format!("f{j}"))
            .collect::<Vec<_>>()
            .join(",");
        csv.push_str(",label\n");
        for &i in &p.retained {
            for v in data.x.row(i) {
                let _ = write!(csv, "{v},");
            }
            let _ = writeln!(csv, "{}", data.y[i]);
        }
        write_file(
            &cfg.out.join("prep").join(format!("{}.csv", p.name)),
            &csv,
            &mut written,
        )?;
        let minority = p.retained.iter().filter(|&&i| p.raw.labels[i] == 1).count();
        let _ = writeln!(
            summary,
            "{},{master},{},{},{minority},{},{},{},{},{}",
            p.name,
            p.retained.len(),
            p.retained.len() - minority,
            (p.retained.len() - minority) as f64 / minority as f64,
            p.withheld.len(),
            raw.dropped_missing,
            data.transform.encoded_width(),
            data.dim()
        );
    }
    write_file(
        &cfg.out.join("prep").join("summary.csv"),
        &summary,
        &mut written,
    )?;
    Ok(written)
}

fn emit(cfg: &ExperimentConfig, outcomes: &[FoldOutcome]) -> Result<Vec<PathBuf>> {
    emit_reports(&Outputs::from_outcomes(outcomes), &cfg.out, cfg.svg)
}

/// Baseline training; also saves every fold's classifier.
pub fn train(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    if cfg.methods.contains(&Method::ExplicitGradient) {
        return Err(CliError::Config(
            "use 'meta-train' for explicit_gradient".into(),
        ));
    }
    let outcomes = run_experiment(cfg)?;
    let mut written = emit(cfg, &outcomes)?;
    for o in &outcomes {
        for m in &o.methods {
            let path = cfg
                .out
                .join("models")
                .join(&o.dataset)
                .join(format!("seed{}_fold{}_{}.json", o.seed, o.fold, m.method));
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            m.params
                .save(&path)
                .map_err(|e| CliError::Report(e.to_string()))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Explicit-gradient runs; also saves each fold's meta state and final
/// synthetic points.
pub fn meta_train(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut cfg = cfg.clone();
    if cfg.methods.iter().any(|&m| m != Method::ExplicitGradient) {
        cfg.methods = vec![Method::ExplicitGradient];
    }
    let outcomes = run_experiment(&cfg)?;
    let mut written = emit(&cfg, &outcomes)?;
    for o in &outcomes {
        for state in o.methods.iter().filter_map(|m| m.meta.as_ref()) {
            let dir = cfg.out.join("meta").join(&o.dataset);
            std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            let stem = format!("seed{}_fold{}", o.seed, o.fold);
            let state_path = dir.join(format!("{stem}_state.json"));
            state
                .save(&state_path)
                .map_err(|e| CliError::Report(e.to_string()))?;
            let synth_path = dir.join(format!("{stem}_synthetic.csv"));
            state
                .synthetic
                .write_csv(&synth_path)
                .map_err(|e| CliError::Report(e.to_string()))?;
            written.extend([state_path, synth_path]);
        }
    }
    Ok(written)
}

/// Every configured method on every dataset, seed and fold.
pub fn bench(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let outcomes = run_experiment(cfg)?;
    emit(cfg, &outcomes)
}

/// Re-renders summary tables and plots from the CSVs in `dir`.
pub fn report(dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    let out = read_outputs(dir)?;
    emit_reports(&out, dir, svg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SineDemoConfig {
    pub seeds: Vec<u64>,
    pub task: SineTask,
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub meta: MetaConfig,
    pub out: PathBuf,
    pub svg: bool,
}

impl Default for SineDemoConfig {
    fn default() -> Self {
        let e = SineExperiment::default();
        Self {
            seeds: (0..10).collect(),
            task: e.task,
            pretrain_epochs: e.pretrain_epochs,
            pretrain_lr: e.pretrain_lr,
            meta: e.meta,
            out: PathBuf::from("runs/sine"),
            svg: true,
        }
    }
}

impl SineDemoConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn sine_plot(report: &metaug::sine_demo::SineReport, seed: u64) -> Result<LinePlot> {
    let csv = report
        .plot_csv()
        .map_err(|e| CliError::Report(e.to_string()))?;
    let mut series: Vec<Series> = Vec::new();
    for line in csv.lines().skip(1) {
        let mut cells = line.split(',');
        let (Some(x), Some(y), Some(role)) = (cells.next(), cells.next(), cells.next()) else {
            continue;
        };
        let (x, y): (f64, f64) = (x.parse().unwrap_or(f64::NAN), y.parse().unwrap_or(f64::NAN));
        match series.iter_mut().find(|s| s.name == role) {
            Some(s) => s.points.push((x, y)),
            None => {
                let points = vec![(x, y)];
                series.push(if role.ends_with("_curve") {
                    Series::line(role, points)
                } else {
                    Series::scatter(role, points)
                });
            }
        }
    }
    Ok(LinePlot {
        title: format!("sine regression, seed {seed}"),
        x_label: "x".into(),
        y_label: "y".into(),
        series,
        ..Default::default()
    })
}

/// Sine regression sweep over `cfg.seeds`. A seed stopped by the divergence
/// guard gets status `diverged` and empty numbers.
pub fn sine_demo(cfg: &SineDemoConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.out.clone();
    let mut written = Vec::new();
    let mut summary = format!("{SINE_HEADER}\n");
    for &seed in &cfg.seeds {
        let exp = SineExperiment {
            task: SineTask { seed, ..cfg.task },
            pretrain_epochs: cfg.pretrain_epochs,
            pretrain_lr: cfg.pretrain_lr,
            meta: cfg.meta,
        };
        match run_sine_experiment(&exp) {
            Ok(r) => {
                let _ = writeln!(
                    summary,
                    "{seed},ok,{},{},{},{},{}",
                    r.baseline_mse,
                    r.pretrained_mse,
                    r.meta_mse,
                    r.distance_initial,
                    r.distance_final
                );
                let plot_path = dir.join(format!("plot_seed{seed}.csv"));
                if let Some(parent) = plot_path.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
                }
                r.write_plot_csv(&plot_path)
                    .map_err(|e| CliError::Report(e.to_string()))?;
                written.push(plot_path);
                write_file(
                    &dir.join(format!("convergence_seed{seed}.csv")),
                    &convergence_report(&r.state),
                    &mut written,
                )?;
                if cfg.svg {
                    write_file(
                        &dir.join(format!("svg/sine_seed{seed}.svg")),
                        &sine_plot(&r, seed)?.render(),
                        &mut written,
                    )?;
                }
            }
            Err(e @ metaug::Error::Divergence { .. }) => {
                log::warn!("sine seed {seed}: {e}");
                let _ = writeln!(summary, "{seed},diverged,,,,,");
            }
            Err(source) => {
                return Err(CliError::Dataset {
                    dataset: format!("sine seed {seed}"),
                    stage: "sine_experiment",
                    source,
                })
            }
        }
    }
    write_file(&dir.join("summary.csv"), &summary, &mut written)?;
    Ok(written)
}
