//! Report files written under the output directory.
//!
//! | file | header |
//! |------|--------|
//! | `metrics.csv` | [`METRICS_HEADER`], one row per dataset, seed, fold and method |
//! | `summary.csv` | [`SUMMARY_HEADER`], fold/seed means per dataset and method |
//! | `ap_table.csv` | `dataset,<method>...`, mean AP, one row per dataset |
//! | `pr/<method>.csv` | [`CURVE_HEADER`] |
//! | `convergence.csv` | `dataset,seed,fold,` + meta-loop diagnostics |
//! | `grid.csv` | [`GRID_HEADER`] |
//! | `svg/<dataset>_pr.svg`, `svg/<dataset>_convergence.svg` | plots of the first seed and fold |
//!
//! Floats are written in shortest round-trip form, so the same inputs give
//! byte-identical files and [`read_outputs`] followed by [`emit_reports`]
//! reproduces them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use metaug::meta::{EpochRecord, CONVERGENCE_HEADER};
use metaug::metrics::{Confusion, MetricReport, PrPoint};

use crate::error::{CliError, Result};
use crate::pipeline::FoldOutcome;
use crate::svg::{LinePlot, Series};

pub const METRICS_HEADER: &str =
    "dataset,seed,fold,method,ir,auc_pr,p_at_0.75,p_at_0.5,p_at_0.25,f1,mcc,kappa,accuracy,tp,fp,tn,fn";
pub const SUMMARY_HEADER: &str =
    "dataset,ir,method,runs,auc_pr,p_at_0.75,p_at_0.5,p_at_0.25,f1,mcc,kappa,accuracy";
pub const CURVE_HEADER: &str = "dataset,seed,fold,threshold,recall,precision";
pub const GRID_HEADER: &str = "dataset,seed,fold,hidden,lr,valid_ap,selected";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub dataset: String,
    pub seed: u64,
    pub fold: usize,
    pub method: String,
    pub ir: f64,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub fold: usize,
    pub points: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub dataset: String,
    pub seed: u64,
    pub fold: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub dataset: String,
    pub seed: u64,
    pub fold: usize,
    pub hidden: String,
    pub lr: f64,
    pub valid_ap: f64,
    pub selected: bool,
}

/// Everything the report files are rendered from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    pub metrics: Vec<MetricRow>,
    pub curves: Vec<CurveRow>,
    pub convergence: Vec<ConvergenceRun>,
    pub grid: Vec<GridRow>,
}

impl Outputs {
    pub fn from_outcomes(outcomes: &[FoldOutcome]) -> Self {
        let mut out = Outputs::default();
        for o in outcomes {
            for m in &o.methods {
                out.metrics.push(MetricRow {
                    dataset: o.dataset.clone(),
                    seed: o.seed,
                    fold: o.fold,
                    method: m.method.to_string(),
                    ir: o.ir,
                    report: m.metrics,
                });
                out.curves.push(CurveRow {
                    dataset: o.dataset.clone(),
                    method: m.method.to_string(),
                    seed: o.seed,
                    fold: o.fold,
                    points: m.curve.points.clone(),
                });
                if let Some(state) = &m.meta {
                    out.convergence.push(ConvergenceRun {
                        dataset: o.dataset.clone(),
                        seed: o.seed,
                        fold: o.fold,
                        history: state.history.clone(),
                    });
                }
            }
            for (c, score) in &o.selection.scores {
                out.grid.push(GridRow {
                    dataset: o.dataset.clone(),
                    seed: o.seed,
                    fold: o.fold,
                    hidden: c.label(),
                    lr: c.lr,
                    valid_ap: *score,
                    selected: *c == o.selection.best,
                });
            }
        }
        out
    }

    /// Datasets and methods in order of first appearance.
    fn orders(&self) -> (Vec<String>, Vec<String>) {
        let mut datasets: Vec<String> = Vec::new();
        let mut methods: Vec<String> = Vec::new();
        for r in &self.metrics {
            if !datasets.contains(&r.dataset) {
                datasets.push(r.dataset.clone());
            }
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
        }
        (datasets, methods)
    }

    /// Mean report over all seeds and folds of one dataset and method.
    pub fn mean(&self, dataset: &str, method: &str) -> Option<(usize, MeanReport)> {
        let rows: Vec<&MetricRow> = self
            .metrics
            .iter()
            .filter(|r| r.dataset == dataset && r.method == method)
            .collect();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let avg =
            |f: &dyn Fn(&MetricReport) -> f64| rows.iter().map(|r| f(&r.report)).sum::<f64>() / n;
        Some((
            rows.len(),
            MeanReport {
                ir: rows[0].ir,
                auc_pr: avg(&|r| r.auc_pr),
                precision_at: [
                    avg(&|r| r.precision_at[0]),
                    avg(&|r| r.precision_at[1]),
                    avg(&|r| r.precision_at[2]),
                ],
                f1: avg(&|r| r.f1),
                mcc: avg(&|r| r.mcc),
                kappa: avg(&|r| r.kappa),
                accuracy: avg(&|r| r.accuracy),
            },
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanReport {
    pub ir: f64,
    pub auc_pr: f64,
    pub precision_at: [f64; 3],
    pub f1: f64,
    pub mcc: f64,
    pub kappa: f64,
    pub accuracy: f64,
}

pub fn metrics_csv(out: &Outputs) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for r in &out.metrics {
        let m = &r.report;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.seed,
            r.fold,
            r.method,
            r.ir,
            m.auc_pr,
            m.precision_at[0],
            m.precision_at[1],
            m.precision_at[2],
            m.f1,
            m.mcc,
            m.kappa,
            m.accuracy,
            m.counts.tp,
            m.counts.fp,
            m.counts.tn,
            m.counts.fn_
        );
    }
    s
}

pub fn summary_csv(out: &Outputs) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    let (datasets, methods) = out.orders();
    for d in &datasets {
        for m in &methods {
            if let Some((n, r)) = out.mean(d, m) {
                let _ = writeln!(
                    s,
                    "{d},{},{m},{n},{},{},{},{},{},{},{},{}",
                    r.ir,
                    r.auc_pr,
                    r.precision_at[0],
                    r.precision_at[1],
                    r.precision_at[2],
                    r.f1,
                    r.mcc,
                    r.kappa,
                    r.accuracy
                );
            }
        }
    }
    s
}

/// Mean AP per dataset (rows) and method (columns). Missing cells are empty.
pub fn ap_table_csv(out: &Outputs) -> String {
    let (datasets, methods) = out.orders();
    let mut s = String::from("dataset");
    for m in &methods {
        s.push(',');
        s.push_str(m);
    }
    s.push('\n');
    for d in &datasets {
        s.push_str(d);
        for m in &methods {
            s.push(',');
            if let Some((_, r)) = out.mean(d, m) {
                let _ = write!(s, "{}", r.auc_pr);
            }
        }
        s.push('\n');
    }
    s
}

fn curve_csv(out: &Outputs, method: &str) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for c in out.curves.iter().filter(|c| c.method == method) {
        for p in &c.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                c.dataset, c.seed, c.fold, p.threshold, p.recall, p.precision
            );
        }
    }
    s
}

fn convergence_csv(out: &Outputs) -> String {
    let mut s = format!("dataset,seed,fold,{CONVERGENCE_HEADER}\n");
    for c in &out.convergence {
        for r in &c.history {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                c.dataset,
                c.seed,
                c.fold,
                r.epoch,
                r.valid_loss,
                r.meta_valid_loss,
                r.synthetic_loss,
                r.train_loss,
                r.z_displacement
            );
        }
    }
    s
}

fn grid_csv(out: &Outputs) -> String {
    let mut s = format!("{GRID_HEADER}\n");
    for g in &out.grid {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            g.dataset, g.seed, g.fold, g.hidden, g.lr, g.valid_ap, g.selected
        );
    }
    s
}

/// File-name friendly form of a dataset or method name.
fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn pr_plot(out: &Outputs, dataset: &str) -> Option<LinePlot> {
    let first = out.curves.iter().find(|c| c.dataset == dataset)?;
    let series = out
        .curves
        .iter()
        .filter(|c| c.dataset == dataset && c.seed == first.seed && c.fold == first.fold)
        .map(|c| {
            Series::line(
                c.method.clone(),
                c.points.iter().map(|p| (p.recall, p.precision)).collect(),
            )
        })
        .collect();
    Some(LinePlot {
        title: format!(
            "{dataset}: precision-recall (seed {}, fold {})",
            first.seed, first.fold
        ),
        x_label: "recall".into(),
        y_label: "precision".into(),
        series,
        x_range: Some((0.0, 1.0)),
        y_range: Some((0.0, 1.0)),
    })
}

pub fn convergence_plot(out: &Outputs, dataset: &str) -> Option<LinePlot> {
    let run = out.convergence.iter().find(|c| c.dataset == dataset)?;
    let pick =
        |f: fn(&EpochRecord) -> f64| run.history.iter().map(|r| (r.epoch as f64, f(r))).collect();
    Some(LinePlot {
        title: format!(
            "{dataset}: meta-training losses (seed {}, fold {})",
            run.seed, run.fold
        ),
        x_label: "epoch".into(),
        y_label: "loss".into(),
        series: vec![
            Series::line("valid", pick(|r| r.valid_loss)),
            Series::line("adapted on valid", pick(|r| r.meta_valid_loss)),
            Series::line("synthetic", pick(|r| r.synthetic_loss)),
            Series::line("train", pick(|r| r.train_loss)),
        ],
        ..Default::default()
    })
}

fn write(dir: &Path, rel: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes every report file into `dir` and returns the paths written.
pub fn emit_reports(out: &Outputs, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    write(dir, "metrics.csv", &metrics_csv(out), &mut written)?;
    write(dir, "summary.csv", &summary_csv(out), &mut written)?;
    write(dir, "ap_table.csv", &ap_table_csv(out), &mut written)?;
    let (datasets, methods) = out.orders();
    for m in &methods {
        write(
            dir,
            &format!("pr/{}.csv", slug(m)),
            &curve_csv(out, m),
            &mut written,
        )?;
    }
    if !out.convergence.is_empty() {
        write(dir, "convergence.csv", &convergence_csv(out), &mut written)?;
    }
    if !out.grid.is_empty() {
        write(dir, "grid.csv", &grid_csv(out), &mut written)?;
    }
    if svg {
        for d in &datasets {
            if let Some(p) = pr_plot(out, d) {
                write(
                    dir,
                    &format!("svg/{}_pr.svg", slug(d)),
                    &p.render(),
                    &mut written,
                )?;
            }
            if let Some(p) = convergence_plot(out, d) {
                write(
                    dir,
                    &format!("svg/{}_convergence.svg", slug(d)),
                    &p.render(),
                    &mut written,
                )?;
            }
        }
    }
    Ok(written)
}

fn read_table(path: &Path, header: &str) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        h => {
            return Err(CliError::Report(format!(
                "{}: expected header '{header}', found '{}'",
                path.display(),
                h.unwrap_or("")
            )))
        }
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .map(|(i, l)| {
            let cells: Vec<String> = l.split(',').map(str::to_string).collect();
            if cells.len() != width {
                return Err(CliError::Report(format!(
                    "{}:{}: expected {width} fields",
                    path.display(),
                    i + 2
                )));
            }
            Ok(cells)
        })
        .collect()
}

fn num<T: std::str::FromStr>(path: &Path, cell: &str) -> Result<T> {
    cell.parse()
        .map_err(|_| CliError::Report(format!("{}: cannot parse '{cell}'", path.display())))
}

/// Reads back the files written by [`emit_reports`].
pub fn read_outputs(dir: &Path) -> Result<Outputs> {
    let mut out = Outputs::default();
    let path = dir.join("metrics.csv");
    for c in read_table(&path, METRICS_HEADER)? {
        let f = |i: usize| num::<f64>(&path, &c[i]);
        let u = |i: usize| num::<u64>(&path, &c[i]);
        out.metrics.push(MetricRow {
            dataset: c[0].clone(),
            seed: u(1)?,
            fold: num(&path, &c[2])?,
            method: c[3].clone(),
            ir: f(4)?,
            report: MetricReport {
                auc_pr: f(5)?,
                precision_at: [f(6)?, f(7)?, f(8)?],
                f1: f(9)?,
                mcc: f(10)?,
                kappa: f(11)?,
                accuracy: f(12)?,
                counts: Confusion {
                    tp: u(13)?,
                    fp: u(14)?,
                    tn: u(15)?,
                    fn_: u(16)?,
                },
            },
        });
    }
    let (_, methods) = out.orders();
    for m in &methods {
        let path = dir.join(format!("pr/{}.csv", slug(m)));
        let mut current: Option<CurveRow> = None;
        for c in read_table(&path, CURVE_HEADER)? {
            let (seed, fold): (u64, usize) = (num(&path, &c[1])?, num(&path, &c[2])?);
            let point = PrPoint {
                threshold: num(&path, &c[3])?,
                recall: num(&path, &c[4])?,
                precision: num(&path, &c[5])?,
            };
            match &mut current {
                Some(cur) if cur.dataset == c[0] && cur.seed == seed && cur.fold == fold => {
                    cur.points.push(point)
                }
                _ => {
                    out.curves.extend(current.take());
                    current = Some(CurveRow {
                        dataset: c[0].clone(),
                        method: m.clone(),
                        seed,
                        fold,
                        points: vec![point],
                    });
                }
            }
        }
        out.curves.extend(current);
    }
    // Curves were written per method; restore the per-fold interleaving of
    // `from_outcomes`.
    let key = |d: &str, s: u64, f: usize, m: &str| {
        out.metrics
            .iter()
            .position(|r| r.dataset == d && r.seed == s && r.fold == f && r.method == m)
            .unwrap_or(usize::MAX)
    };
    let mut keyed: Vec<(usize, CurveRow)> = out
        .curves
        .drain(..)
        .map(|c| (key(&c.dataset, c.seed, c.fold, &c.method), c))
        .collect();
    keyed.sort_by_key(|(k, _)| *k);
    out.curves = keyed.into_iter().map(|(_, c)| c).collect();

    let path = dir.join("convergence.csv");
    if path.exists() {
        let mut runs: BTreeMap<usize, ConvergenceRun> = BTreeMap::new();
        let mut order = Vec::new();
        for c in read_table(&path, &format!("dataset,seed,fold,{CONVERGENCE_HEADER}"))? {
            let (seed, fold): (u64, usize) = (num(&path, &c[1])?, num(&path, &c[2])?);
            let rec = EpochRecord {
                epoch: num(&path, &c[3])?,
                valid_loss: num(&path, &c[4])?,
                meta_valid_loss: num(&path, &c[5])?,
                synthetic_loss: num(&path, &c[6])?,
                train_loss: num(&path, &c[7])?,
                z_displacement: num(&path, &c[8])?,
            };
            let idx = match order
                .iter()
                .position(|(d, s, f): &(String, u64, usize)| *d == c[0] && *s == seed && *f == fold)
            {
                Some(i) => i,
                None => {
                    order.push((c[0].clone(), seed, fold));
                    order.len() - 1
                }
            };
            runs.entry(idx)
                .or_insert_with(|| ConvergenceRun {
                    dataset: c[0].clone(),
                    seed,
                    fold,
                    history: Vec::new(),
                })
                .history
                .push(rec);
        }
        out.convergence = runs.into_values().collect();
    }

    let path = dir.join("grid.csv");
    if path.exists() {
        for c in read_table(&path, GRID_HEADER)? {
            out.grid.push(GridRow {
                dataset: c[0].clone(),
                seed: num(&path, &c[1])?,
                fold: num(&path, &c[2])?,
                hidden: c[3].clone(),
                lr: num(&path, &c[4])?,
                valid_ap: num(&path, &c[5])?,
                selected: num(&path, &c[6])?,
            });
        }
    }
    Ok(out)
}
