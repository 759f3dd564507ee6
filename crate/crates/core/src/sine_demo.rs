//! Imbalanced regression on a sine wave with free synthetic points.
//!
//! A small regressor sees only a handful of training points. Synthetic
//! `(x, y)` pairs start uniformly in a box and are moved by the meta loop;
//! their targets are themselves variables, so the inner loss regresses on
//! each point's current `y`.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::meta::{meta_train, MetaConfig, MetaState};
use crate::model::{
    self, evaluate_loss, LossKind, MlpArchitecture, OptimizerKind, ParamSet, TrainConfig,
};
use crate::resampling::SyntheticSet;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SineTask {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub k1: usize,
    pub k2: usize,
    pub domain: (f64, f64),
    pub n_synth: usize,
    pub synth_span: (f64, f64),
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for SineTask {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            frequency: std::f64::consts::FRAC_PI_2,
            phase: 0.0,
            k1: 5,
            k2: 5,
            domain: (-5.0, 5.0),
            n_synth: 20,
            synth_span: (-1.0, 1.0),
            grid_points: 200,
            seed: 0,
        }
    }
}

impl SineTask {
    pub fn target(&self, x: f64) -> f64 {
        self.amplitude * (self.frequency * x + self.phase).sin()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 == 0 || self.k2 == 0 {
            return Err(Error::InvalidArgument(
                "k1 and k2 must be at least 1".into(),
            ));
        }
        if !(self.domain.0 < self.domain.1) || !(self.synth_span.0 < self.synth_span.1) {
            return Err(Error::InvalidArgument(
                "empty domain or synthetic span".into(),
            ));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least 2 points".into(),
            ));
        }
        Ok(())
    }
}

/// Generated data; every tensor is a column (n x 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SineData {
    pub train_x: Tensor,
    pub train_y: Tensor,
    pub valid_x: Tensor,
    pub valid_y: Tensor,
    pub synth_x: Tensor,
    pub synth_y: Tensor,
    pub grid_x: Tensor,
    pub grid_y: Tensor,
}

pub fn generate_sine_task(task: &SineTask) -> Result<SineData> {
    task.validate()?;
    let sample = |label: &str, n: usize| {
        let mut rng = seed::rng(seed::derive(task.seed, &["sine", label]));
        let x: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(task.domain.0..task.domain.1))
            .collect();
        let y = x.iter().map(|&v| task.target(v)).collect();
        (Tensor::column(x), Tensor::column(y))
    };
    let (train_x, train_y) = sample("train", task.k1);
    let (valid_x, valid_y) = sample("valid", task.k2);
    let mut rng = seed::rng(seed::derive(task.seed, &["sine", "synth"]));
    let (lo, hi) = task.synth_span;
    let mut sx = Vec::with_capacity(task.n_synth);
    let mut sy = Vec::with_capacity(task.n_synth);
    for _ in 0..task.n_synth {
        sx.push(rng.gen_range(lo..hi));
        sy.push(rng.gen_range(lo..hi));
    }
    let n = task.grid_points;
    let step = (task.domain.1 - task.domain.0) / (n - 1) as f64;
    let gx: Vec<f64> = (0..n).map(|i| task.domain.0 + step * i as f64).collect();
    let gy = gx.iter().map(|&v| task.target(v)).collect();
    Ok(SineData {
        train_x,
        train_y,
        valid_x,
        valid_y,
        synth_x: Tensor::column(sx),
        synth_y: Tensor::column(sy),
        grid_x: Tensor::column(gx),
        grid_y: Tensor::column(gy),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SineExperiment {
    pub task: SineTask,
    /// Full-batch Adam epochs for both the baseline and the pretrained model.
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub meta: MetaConfig,
}

impl Default for SineExperiment {
    fn default() -> Self {
        Self {
            task: SineTask::default(),
            pretrain_epochs: 1000,
            pretrain_lr: 1e-2,
            meta: MetaConfig {
                epochs: 50,
                ..MetaConfig::sine()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineReport {
    pub baseline_mse: f64,
    pub pretrained_mse: f64,
    pub meta_mse: f64,
    pub distance_initial: f64,
    pub distance_final: f64,
    pub data: SineData,
    pub baseline: ParamSet,
    pub pretrained: ParamSet,
    pub state: MetaState,
}

/// Shortest Euclidean distance from `(x, y)` to the curve of `task.target`.
pub fn distance_to_curve(task: &SineTask, x: f64, y: f64) -> f64 {
    let d = |t: f64| ((t - x).powi(2) + (task.target(t) - y).powi(2)).sqrt();
    // The vertical distance bounds the answer, so the nearest curve point lies
    // within that horizontal radius.
    let radius = (task.target(x) - y).abs();
    if radius == 0.0 {
        return 0.0;
    }
    let steps = 400;
    let mut best_t = x;
    let mut best = radius;
    for i in 0..=steps {
        let t = x - radius + 2.0 * radius * i as f64 / steps as f64;
        let v = d(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    // Golden-section refinement around the best grid point.
    let h = 2.0 * radius / steps as f64;
    let (mut a, mut b) = (best_t - h, best_t + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if d(c) < d(e) {
            b = e;
        } else {
            a = c;
        }
    }
    best.min(d(0.5 * (a + b)))
}

pub fn mean_distance_to_curve(task: &SineTask, x: &Tensor, y: &Tensor) -> f64 {
    if x.numel() == 0 {
        return 0.0;
    }
    let total: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(&a, &b)| distance_to_curve(task, a, b))
        .sum();
    total / x.numel() as f64
}

/// Baseline on train plus valid; pretraining on train followed by the meta
/// loop with free synthetic points. All three are scored on the grid.
pub fn run_sine_experiment(cfg: &SineExperiment) -> Result<SineReport> {
    let task = &cfg.task;
    let data = generate_sine_task(task)?;
    let arch = MlpArchitecture::sine_regressor();
    let init = ParamSet::init(&arch, seed::derive(task.seed, &["sine", "init"]))?;
    let fit = |x: &Tensor, y: &Tensor, label: &str| -> Result<ParamSet> {
        let tc = TrainConfig {
            batch_size: x.rows(),
            epochs: cfg.pretrain_epochs,
            seed: seed::derive(task.seed, &["sine", label]),
        };
        Ok(model::train(
            &init,
            x,
            y,
            LossKind::Mse,
            OptimizerKind::adam(cfg.pretrain_lr),
            &tc,
            None,
        )?
        .params)
    };
    let both_x = Tensor::vstack(&[&data.train_x, &data.valid_x])?;
    let both_y = Tensor::vstack(&[&data.train_y, &data.valid_y])?;
    let baseline = fit(&both_x, &both_y, "baseline")?;
    let pretrained = fit(&data.train_x, &data.train_y, "pretrain")?;

    let synthetic = SyntheticSet::regression(data.synth_x.clone(), data.synth_y.clone())?;
    let meta_cfg = MetaConfig {
        loss: LossKind::Mse,
        seed: seed::derive(task.seed, &["sine", "meta"]),
        ..cfg.meta
    };
    let classes = vec![0u8; task.k2];
    let state = meta_train(
        &data.train_x,
        &data.train_y,
        &data.valid_x,
        &data.valid_y,
        &classes,
        &pretrained,
        synthetic,
        &meta_cfg,
    )?;
    let grid_mse = |p: &ParamSet| evaluate_loss(p, &data.grid_x, &data.grid_y, LossKind::Mse);
    Ok(SineReport {
        baseline_mse: grid_mse(&baseline)?,
        pretrained_mse: grid_mse(&pretrained)?,
        meta_mse: grid_mse(&state.theta)?,
        distance_initial: mean_distance_to_curve(task, &data.synth_x, &data.synth_y),
        distance_final: mean_distance_to_curve(task, &state.synthetic.z, &state.synthetic.labels),
        data,
        baseline,
        pretrained,
        state,
    })
}

pub const PLOT_HEADER: &str = "x,y,role";

impl SineReport {
    /// Rows `x,y,role` for the data points, the synthetic points before and
    /// after, the true curve and the three model curves on the grid.
    pub fn plot_csv(&self) -> Result<String> {
        let mut out = format!("{PLOT_HEADER}\n");
        let mut emit = |xs: &Tensor, ys: &[f64], role: &str| {
            for (x, y) in xs.data().iter().zip(ys) {
                let _ = writeln!(out, "{x},{y},{role}");
            }
        };
        let d = &self.data;
        emit(&d.train_x, d.train_y.data(), "train");
        emit(&d.valid_x, d.valid_y.data(), "valid");
        emit(&d.synth_x, d.synth_y.data(), "synth_init");
        emit(
            &self.state.synthetic.z,
            self.state.synthetic.labels.data(),
            "synth_final",
        );
        emit(&d.grid_x, d.grid_y.data(), "true_curve");
        emit(
            &d.grid_x,
            &self.baseline.predict(&d.grid_x)?,
            "baseline_curve",
        );
        emit(
            &d.grid_x,
            &self.pretrained.predict(&d.grid_x)?,
            "pretrained_curve",
        );
        emit(
            &d.grid_x,
            &self.state.theta.predict(&d.grid_x)?,
            "model_curve",
        );
        Ok(out)
    }

    pub fn write_plot_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.plot_csv()?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_task_shapes_and_ranges() {
        let d = generate_sine_task(&SineTask::default()).unwrap();
        assert_eq!(d.train_x.rows(), 5);
        assert_eq!(d.valid_x.rows(), 5);
        assert_eq!(d.synth_x.rows(), 20);
        assert_eq!(d.grid_x.rows(), 200);
        for v in d.train_x.data().iter().chain(d.valid_x.data()) {
            assert!((-5.0..=5.0).contains(v));
        }
        for v in d.synth_x.data().iter().chain(d.synth_y.data()) {
            assert!((-1.0..=1.0).contains(v));
        }
        assert_eq!(d.grid_x.data()[0], -5.0);
        assert_eq!(d.grid_x.data()[199], 5.0);
        let t = SineTask::default();
        for (x, y) in d.grid_x.data().iter().zip(d.grid_y.data()) {
            assert_eq!(*y, (std::f64::consts::FRAC_PI_2 * x).sin());
            assert_eq!(t.target(*x), *y);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate_sine_task(&SineTask::default()).unwrap();
        let b = generate_sine_task(&SineTask::default()).unwrap();
        let c = generate_sine_task(&SineTask {
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train_x, c.train_x);
    }

    #[test]
    fn distance_to_curve_cases() {
        let t = SineTask::default();
        assert_eq!(distance_to_curve(&t, 1.0, 1.0), 0.0);
        // At the crest the nearest point is straight below.
        assert!((distance_to_curve(&t, 1.0, 1.5) - 0.5).abs() < 1e-9);
        // Off-crest the answer is shorter than the vertical gap.
        let d = distance_to_curve(&t, 0.0, 0.5);
        assert!(d < 0.5 && d > 0.25, "{d}");
        // Symmetric: sin is odd.
        assert!((distance_to_curve(&t, 0.3, 0.7) - distance_to_curve(&t, -0.3, -0.7)).abs() < 1e-9);
    }

    #[test]
    fn invalid_tasks() {
        assert!(generate_sine_task(&SineTask {
            k1: 0,
            ..Default::default()
        })
        .is_err());
        assert!(generate_sine_task(&SineTask {
            grid_points: 1,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn no_synthetic_points_is_plain_fine_tuning() {
        let cfg = SineExperiment {
            task: SineTask {
                n_synth: 0,
                ..Default::default()
            },
            pretrain_epochs: 50,
            meta: MetaConfig {
                epochs: 5,
                ..MetaConfig::sine()
            },
            ..Default::default()
        };
        let r = run_sine_experiment(&cfg).unwrap();
        assert!(r.state.synthetic.is_empty());
        assert_eq!(r.state.history.len(), 5);
        assert!(r.meta_mse.is_finite());
    }
}
