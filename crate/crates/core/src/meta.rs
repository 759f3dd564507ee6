//! Meta-learning of synthetic minority points.
//!
//! Each iteration adapts the classifier by one (or a few) plain gradient steps
//! on a batch that contains synthetic points `Z`, evaluates the adapted
//! classifier on a validation batch, and moves `Z` down the gradient of that
//! validation loss. The gradient flows through the adaptation step, so it is
//! a second-order quantity; the graph builds it from the retained first-order
//! gradient nodes. The adapted parameters are kept as the new parameters.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::{evaluate_loss, forward, LossKind, MlpArchitecture, ParamSet};
use crate::resampling::SyntheticSet;
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaConfig {
    /// Step size of the inner adaptation.
    pub eta1: f64,
    /// Step size of the synthetic-point update.
    pub eta2: f64,
    pub inner_steps: usize,
    /// Confidence bound used to pick the initial synthetic points.
    pub c: f64,
    pub epochs: usize,
    pub train_batch: usize,
    pub valid_batch: usize,
    pub synth_batch: usize,
    /// Inner batch is real batch plus synthetic batch; otherwise synthetic only.
    pub include_real_in_inner: bool,
    pub loss: LossKind,
    /// Abort once the validation loss exceeds this multiple of its value after
    /// the first epoch.
    pub divergence_factor: f64,
    /// Keep a copy of `Z` after every epoch.
    pub record_trajectory: bool,
    pub seed: u64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            eta1: 1e-2,
            eta2: 10.0,
            inner_steps: 1,
            c: 1.0,
            epochs: 20,
            train_batch: 128,
            valid_batch: 128,
            synth_batch: 128,
            include_real_in_inner: true,
            loss: LossKind::Bce,
            divergence_factor: 10.0,
            record_trajectory: false,
            seed: 0,
        }
    }
}

impl MetaConfig {
    /// Step sizes used for the sine regression.
    pub fn sine() -> Self {
        Self {
            eta1: 0.1,
            eta2: 1.0,
            loss: LossKind::Mse,
            train_batch: 5,
            valid_batch: 5,
            synth_batch: 20,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.eta1 >= 0.0 && self.eta1.is_finite())
            || !(self.eta2 >= 0.0 && self.eta2.is_finite())
        {
            return bad(format!(
                "step sizes must be finite and >= 0, got {} and {}",
                self.eta1, self.eta2
            ));
        }
        if self.inner_steps == 0 {
            return bad("inner_steps must be at least 1".into());
        }
        if self.train_batch == 0 || self.valid_batch == 0 || self.synth_batch == 0 {
            return bad("batch sizes must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.c) {
            return bad(format!(
                "confidence bound must be in [0, 1], got {}",
                self.c
            ));
        }
        if !(self.divergence_factor > 1.0) {
            return bad(format!(
                "divergence factor must exceed 1, got {}",
                self.divergence_factor
            ));
        }
        Ok(())
    }
}

/// Per-epoch diagnostics, all evaluated with the parameters at epoch end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Full validation-set loss of the adapted classifier.
    pub valid_loss: f64,
    /// Mean of the per-iteration validation batch losses driving the Z update.
    pub meta_valid_loss: f64,
    /// Loss of the classifier on the whole synthetic set.
    pub synthetic_loss: f64,
    /// Full training-set loss.
    pub train_loss: f64,
    /// Frobenius norm of the change in Z over the epoch.
    pub z_displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaState {
    pub theta: ParamSet,
    pub synthetic: SyntheticSet,
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
    /// Z after every epoch, starting with the initial Z, when recorded.
    #[serde(default)]
    pub trajectory: Vec<Tensor>,
}

impl MetaState {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One iteration's row indices into train, synthetic and validation sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iteration {
    pub train: Vec<usize>,
    pub synth: Vec<usize>,
    pub valid: Vec<usize>,
}

/// Validation chunks that each keep the class ratio: the shuffled members of
/// each class are dealt round-robin over `ceil(n / batch)` chunks.
fn stratified_chunks(y: &[u8], batch: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let q = y.len().div_ceil(batch).max(1);
    let mut chunks = vec![Vec::new(); q];
    let mut offset = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(rng);
        for m in members {
            chunks[offset % q].push(m);
            offset += 1;
        }
    }
    chunks
}

fn shuffled_chunks(n: usize, batch: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch).map(<[usize]>::to_vec).collect()
}

/// Batch schedule of one epoch. The longer of the train and synthetic chunk
/// lists sets the number of iterations; shorter lists cycle.
pub fn epoch_schedule(
    config: &MetaConfig,
    n_train: usize,
    n_synth: usize,
    y_valid: &[u8],
    rng: &mut Rng,
) -> Vec<Iteration> {
    let train = shuffled_chunks(n_train, config.train_batch, rng);
    let synth = shuffled_chunks(n_synth, config.synth_batch, rng);
    let valid = stratified_chunks(y_valid, config.valid_batch, rng);
    let iterations = train.len().max(synth.len());
    (0..iterations)
        .map(|t| Iteration {
            train: train
                .get(t % train.len().max(1))
                .cloned()
                .unwrap_or_default(),
            synth: synth
                .get(t % synth.len().max(1))
                .cloned()
                .unwrap_or_default(),
            valid: valid[t % valid.len()].clone(),
        })
        .collect()
}

/// Applies `steps` gradient steps `theta <- theta - eta1 * grad L(x, y; theta)`
/// inside the graph, keeping the gradient nodes so the result stays
/// differentiable with respect to anything `x` and `y` depend on. Returns the
/// adapted parameter nodes and the first inner loss value.
#[allow(clippy::too_many_arguments)]
pub fn adapt_step(
    graph: &mut Graph,
    arch: &MlpArchitecture,
    theta: &[Var],
    x: Var,
    y: Var,
    loss: LossKind,
    eta1: f64,
    steps: usize,
) -> Result<(Vec<Var>, f64)> {
    let mut current = theta.to_vec();
    let mut first = f64::NAN;
    for s in 0..steps {
        let out = forward(graph, arch, &current, x)?;
        let l = loss.apply(graph, out, y)?;
        let value = graph.value(l).item();
        if !value.is_finite() {
            return Err(Error::NonFinite { op: "inner loss" });
        }
        if s == 0 {
            first = value;
        }
        let grads = graph.grad(l, &current)?;
        let mut next = Vec::with_capacity(current.len());
        for (p, g) in current.iter().zip(grads) {
            let step = graph.scale(g, -eta1)?;
            next.push(graph.add(*p, step)?);
        }
        current = next;
    }
    Ok((current, first))
}

/// Result of [`meta_gradient`].
#[derive(Debug, Clone)]
pub struct MetaStep {
    pub z_grad: Tensor,
    /// Gradient for the synthetic labels, when they are free.
    pub label_grad: Option<Tensor>,
    pub adapted: ParamSet,
    pub inner_loss: f64,
    pub valid_loss: f64,
}

/// Gradient of the validation loss of the adapted classifier with respect to
/// the synthetic rows `z` (and their labels if `free_labels`). `x1`/`y1` is
/// the real part of the inner batch and may have zero rows.
#[allow(clippy::too_many_arguments)]
pub fn meta_gradient(
    theta: &ParamSet,
    x1: &Tensor,
    y1: &Tensor,
    z: &Tensor,
    z_labels: &Tensor,
    free_labels: bool,
    x2: &Tensor,
    y2: &Tensor,
    config: &MetaConfig,
) -> Result<MetaStep> {
    let mut g = Graph::new();
    let params = theta.bind(&mut g);
    let zv = g.leaf(z.clone());
    let zl = if free_labels {
        g.leaf(z_labels.clone())
    } else {
        g.constant(z_labels.clone())
    };
    let (x_in, y_in) = if x1.rows() > 0 {
        let xv = g.constant(x1.clone());
        let yv = g.constant(y1.clone());
        (g.concat_rows(&[xv, zv])?, g.concat_rows(&[yv, zl])?)
    } else {
        (zv, zl)
    };
    let (adapted, inner_loss) = adapt_step(
        &mut g,
        &theta.arch,
        &params,
        x_in,
        y_in,
        config.loss,
        config.eta1,
        config.inner_steps,
    )?;
    let xv2 = g.constant(x2.clone());
    let yv2 = g.constant(y2.clone());
    let out = forward(&mut g, &theta.arch, &adapted, xv2)?;
    let lv = config.loss.apply(&mut g, out, yv2)?;
    let valid_loss = g.value(lv).item();

    let mut new_theta = theta.clone();
    new_theta.set_tensors(adapted.iter().map(|&v| g.value(v).clone()).collect())?;

    let wrt: Vec<Var> = if free_labels { vec![zv, zl] } else { vec![zv] };
    let mut grads = g.backward(lv, &wrt, false)?.into_iter();
    let z_grad = grads.next().expect("z gradient");
    if !z_grad.is_finite() {
        return Err(Error::NonFinite {
            op: "meta-gradient",
        });
    }
    let label_grad = grads.next();
    Ok(MetaStep {
        z_grad,
        label_grad,
        adapted: new_theta,
        inner_loss,
        valid_loss,
    })
}

/// `Z <- Z - eta2 * grad`.
pub fn synthetic_update(z: &mut Tensor, grad: &Tensor, eta2: f64) -> Result<()> {
    if z.shape() != grad.shape() {
        return Err(Error::shape(
            "synthetic_update",
            format!("{:?} vs {:?}", z.shape(), grad.shape()),
        ));
    }
    for (v, g) in z.data_mut().iter_mut().zip(grad.data()) {
        *v -= eta2 * g;
    }
    Ok(())
}

fn scatter_rows(dst: &mut Tensor, idx: &[usize], src: &Tensor) {
    for (k, &i) in idx.iter().enumerate() {
        dst.row_mut(i).copy_from_slice(src.row(k));
    }
}

/// Runs the meta loop from `theta0` and the initial synthetic set.
///
/// `x_train`/`y_train` and `x_valid`/`y_valid` are feature rows and n x 1
/// targets; `valid_classes` gives the class of each validation row for
/// stratified batching (all zeros for regression).
#[allow(clippy::too_many_arguments)]
pub fn meta_train(
    x_train: &Tensor,
    y_train: &Tensor,
    x_valid: &Tensor,
    y_valid: &Tensor,
    valid_classes: &[u8],
    theta0: &ParamSet,
    synthetic: SyntheticSet,
    config: &MetaConfig,
) -> Result<MetaState> {
    config.validate()?;
    if x_train.rows() == 0 || x_valid.rows() == 0 {
        return Err(Error::Dataset(
            "meta training needs non-empty train and validation sets".into(),
        ));
    }
    if valid_classes.len() != x_valid.rows() {
        return Err(Error::shape(
            "meta_train",
            "validation classes do not match validation rows",
        ));
    }
    let mut state = MetaState {
        theta: theta0.clone(),
        trajectory: if config.record_trajectory {
            vec![synthetic.z.clone()]
        } else {
            Vec::new()
        },
        synthetic,
        epoch: 0,
        history: Vec::with_capacity(config.epochs),
    };
    // Reference for the divergence guard: the first recorded validation loss.
    let mut limit = f64::INFINITY;
    let mut rng = seed::rng(config.seed);
    let empty_x = Tensor::zeros(&[0, x_train.cols()]);
    let empty_y = Tensor::zeros(&[0, 1]);

    for epoch in 0..config.epochs {
        let z_start = state.synthetic.z.clone();
        let schedule = epoch_schedule(
            config,
            x_train.rows(),
            state.synthetic.len(),
            valid_classes,
            &mut rng,
        );
        let mut meta_valid = 0.0;
        for (it, batch) in schedule.iter().enumerate() {
            let wrap = |source| Error::Training {
                epoch,
                batch: it,
                source: Box::new(source),
            };
            let (x1, y1) = if config.include_real_in_inner || state.synthetic.is_empty() {
                (
                    x_train.select_rows(&batch.train),
                    y_train.select_rows(&batch.train),
                )
            } else {
                (empty_x.clone(), empty_y.clone())
            };
            let (x2, y2) = (
                x_valid.select_rows(&batch.valid),
                y_valid.select_rows(&batch.valid),
            );
            let zb = state.synthetic.z.select_rows(&batch.synth);
            let lb = state.synthetic.labels.select_rows(&batch.synth);
            let step = if batch.synth.is_empty() {
                plain_step(&state.theta, &x1, &y1, &x2, &y2, config).map_err(wrap)?
            } else {
                meta_gradient(
                    &state.theta,
                    &x1,
                    &y1,
                    &zb,
                    &lb,
                    state.synthetic.free_labels,
                    &x2,
                    &y2,
                    config,
                )
                .map_err(wrap)?
            };
            if !batch.synth.is_empty() {
                let mut zb = zb;
                synthetic_update(&mut zb, &step.z_grad, config.eta2).map_err(wrap)?;
                scatter_rows(&mut state.synthetic.z, &batch.synth, &zb);
                if let Some(lg) = &step.label_grad {
                    let mut lb = lb;
                    synthetic_update(&mut lb, lg, config.eta2).map_err(wrap)?;
                    scatter_rows(&mut state.synthetic.labels, &batch.synth, &lb);
                }
            }
            state.theta = step.adapted;
            meta_valid += step.valid_loss;
        }

        let valid_loss = evaluate_loss(&state.theta, x_valid, y_valid, config.loss)?;
        let train_loss = evaluate_loss(&state.theta, x_train, y_train, config.loss)?;
        let synthetic_loss = if state.synthetic.is_empty() {
            0.0
        } else {
            evaluate_loss(
                &state.theta,
                &state.synthetic.z,
                &state.synthetic.labels,
                config.loss,
            )?
        };
        let diff: f64 = state
            .synthetic
            .z
            .data()
            .iter()
            .zip(z_start.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        state.history.push(EpochRecord {
            epoch,
            valid_loss,
            meta_valid_loss: meta_valid / schedule.len().max(1) as f64,
            synthetic_loss,
            train_loss,
            z_displacement: diff.sqrt(),
        });
        state.epoch = epoch + 1;
        if config.record_trajectory {
            state.trajectory.push(state.synthetic.z.clone());
        }
        if epoch == 0 {
            limit = config.divergence_factor * valid_loss.max(f64::MIN_POSITIVE);
        }
        if !valid_loss.is_finite() || valid_loss > limit {
            return Err(Error::Divergence {
                epoch,
                loss: valid_loss,
                limit,
            });
        }
        log::debug!("meta epoch {epoch}: valid {valid_loss:.5} train {train_loss:.5}");
    }
    Ok(state)
}

/// Adaptation without synthetic rows: a plain gradient step on the real batch.
fn plain_step(
    theta: &ParamSet,
    x1: &Tensor,
    y1: &Tensor,
    x2: &Tensor,
    y2: &Tensor,
    config: &MetaConfig,
) -> Result<MetaStep> {
    let mut g = Graph::new();
    let params = theta.bind(&mut g);
    let xv = g.constant(x1.clone());
    let yv = g.constant(y1.clone());
    let (adapted, inner_loss) = adapt_step(
        &mut g,
        &theta.arch,
        &params,
        xv,
        yv,
        config.loss,
        config.eta1,
        config.inner_steps,
    )?;
    let xv2 = g.constant(x2.clone());
    let yv2 = g.constant(y2.clone());
    let out = forward(&mut g, &theta.arch, &adapted, xv2)?;
    let lv = config.loss.apply(&mut g, out, yv2)?;
    let mut new_theta = theta.clone();
    new_theta.set_tensors(adapted.iter().map(|&v| g.value(v).clone()).collect())?;
    Ok(MetaStep {
        z_grad: Tensor::zeros(&[0, x1.cols()]),
        label_grad: None,
        adapted: new_theta,
        inner_loss,
        valid_loss: g.value(lv).item(),
    })
}

pub const CONVERGENCE_HEADER: &str =
    "epoch,valid_loss,meta_valid_loss,synthetic_loss,train_loss,z_displacement";

/// Per-epoch diagnostics as CSV.
pub fn convergence_report(state: &MetaState) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in &state.history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch,
            r.valid_loss,
            r.meta_valid_loss,
            r.synthetic_loss,
            r.train_loss,
            r.z_displacement
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Head};

    #[test]
    fn scalar_quadratic_adaptation_closed_form() {
        // L = (theta z)^2 / 2 on a 1x1 linear layer: theta' = theta - eta1 z^2 theta
        let (theta, z, eta1) = (0.7, 1.3, 0.05);
        let mut g = Graph::new();
        let t = g.leaf(Tensor::matrix(1, 1, vec![theta]));
        let zv = g.leaf(Tensor::matrix(1, 1, vec![z]));
        let p = g.matmul(zv, t).unwrap();
        let sq = g.powf(p, 2.0).unwrap();
        let l = g.scale(sq, 0.5).unwrap();
        let gt = g.grad(l, &[t]).unwrap()[0];
        let step = g.scale(gt, -eta1).unwrap();
        let adapted = g.add(t, step).unwrap();
        let expected = theta - eta1 * z * z * theta;
        assert!((g.value(adapted).item() - expected).abs() < 1e-15);

        // L_valid = theta'^2 / 2 gives dL/dz = theta' * (-2 eta1 z theta)
        let sqv = g.powf(adapted, 2.0).unwrap();
        let lv = g.scale(sqv, 0.5).unwrap();
        let dz = g.backward(lv, &[zv], false).unwrap()[0].item();
        let closed = expected * (-2.0 * eta1 * z * theta);
        assert!((dz - closed).abs() < 1e-15, "{dz} vs {closed}");
    }

    fn tiny() -> (ParamSet, Tensor, Tensor, Tensor, Tensor) {
        let arch = MlpArchitecture::new(2, vec![4], Activation::Tanh, Head::Sigmoid).unwrap();
        let p = ParamSet::init(&arch, 3).unwrap();
        let x = Tensor::matrix(4, 2, vec![0.1, 0.2, -0.3, 0.5, 0.9, -0.1, 0.0, 0.4]);
        let y = Tensor::column(vec![0.0, 1.0, 0.0, 1.0]);
        let xv = Tensor::matrix(2, 2, vec![0.3, 0.3, -0.2, 0.8]);
        let yv = Tensor::column(vec![1.0, 0.0]);
        (p, x, y, xv, yv)
    }

    #[test]
    fn zero_inner_step_keeps_theta() {
        let (p, x, y, xv, yv) = tiny();
        let cfg = MetaConfig {
            eta1: 0.0,
            ..Default::default()
        };
        let z = Tensor::matrix(1, 2, vec![0.5, 0.5]);
        let step = meta_gradient(
            &p,
            &x,
            &y,
            &z,
            &Tensor::column(vec![1.0]),
            false,
            &xv,
            &yv,
            &cfg,
        )
        .unwrap();
        assert_eq!(step.adapted, p);
        // theta' does not depend on Z, so neither does the validation loss.
        assert!(step.z_grad.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_epochs_return_initial_state() {
        let (p, x, y, xv, yv) = tiny();
        let syn = SyntheticSet::minority(x.select_rows(&[1, 3]), vec![Some(1), Some(3)]).unwrap();
        let cfg = MetaConfig {
            epochs: 0,
            ..Default::default()
        };
        let st = meta_train(&x, &y, &xv, &yv, &[1, 0], &p, syn.clone(), &cfg).unwrap();
        assert_eq!(st.theta, p);
        assert_eq!(st.synthetic, syn);
        assert!(st.history.is_empty());
        assert_eq!(convergence_report(&st), format!("{CONVERGENCE_HEADER}\n"));
    }

    #[test]
    fn labels_and_row_count_are_preserved() {
        let (p, x, y, xv, yv) = tiny();
        let syn = SyntheticSet::minority(x.select_rows(&[1, 3]), vec![Some(1), Some(3)]).unwrap();
        let cfg = MetaConfig {
            epochs: 3,
            synth_batch: 1,
            train_batch: 2,
            valid_batch: 2,
            eta1: 0.1,
            eta2: 1.0,
            ..Default::default()
        };
        let st = meta_train(&x, &y, &xv, &yv, &[1, 0], &p, syn, &cfg).unwrap();
        assert_eq!(st.synthetic.len(), 2);
        assert!(st.synthetic.labels.data().iter().all(|&l| l == 1.0));
        assert_eq!(st.history.len(), 3);
        assert!(st
            .history
            .iter()
            .all(|r| r.valid_loss.is_finite() && r.train_loss.is_finite()));
        assert!(st.history[0].z_displacement > 0.0);
    }

    #[test]
    fn divergence_guard_trips() {
        // Training labels contradict the validation labels on the same inputs,
        // so every step makes the validation loss worse.
        let (p, _, _, xv, yv) = tiny();
        let flipped = yv.map(|v| 1.0 - v);
        let syn = SyntheticSet::minority(xv.select_rows(&[1]), vec![Some(1)]).unwrap();
        let cfg = MetaConfig {
            epochs: 200,
            eta1: 1.0,
            eta2: 0.0,
            divergence_factor: 1.5,
            ..Default::default()
        };
        let err = meta_train(&xv, &flipped, &xv, &yv, &[1, 0], &p, syn, &cfg).unwrap_err();
        assert!(
            matches!(err, Error::Divergence { epoch, .. } if epoch > 0),
            "{err}"
        );
    }

    #[test]
    fn checkpoint_round_trip() {
        let (p, x, y, xv, yv) = tiny();
        let syn = SyntheticSet::minority(x.select_rows(&[1, 3]), vec![Some(1), Some(3)]).unwrap();
        let cfg = MetaConfig {
            epochs: 2,
            eta1: 0.1,
            eta2: 1.0,
            record_trajectory: true,
            ..Default::default()
        };
        let st = meta_train(&x, &y, &xv, &yv, &[1, 0], &p, syn, &cfg).unwrap();
        assert_eq!(st.trajectory.len(), 3);
        let dir =
            tempfile::tempdir_in(concat!(env!("CARGO_MANIFEST_DIR"), "/../../target")).unwrap();
        let path = dir.path().join("ckpt.json");
        st.save(&path).unwrap();
        assert_eq!(MetaState::load(&path).unwrap(), st);
    }

    #[test]
    fn schedule_covers_every_synthetic_row() {
        let cfg = MetaConfig {
            train_batch: 4,
            synth_batch: 3,
            valid_batch: 4,
            ..Default::default()
        };
        let mut rng = seed::rng(1);
        let yv = [0, 0, 0, 0, 0, 0, 1, 1];
        let s = epoch_schedule(&cfg, 20, 7, &yv, &mut rng);
        assert_eq!(s.len(), 5);
        let mut synth: Vec<usize> = s.iter().take(3).flat_map(|i| i.synth.clone()).collect();
        synth.sort_unstable();
        assert_eq!(synth, (0..7).collect::<Vec<_>>());
        for it in &s {
            assert_eq!(it.valid.iter().filter(|&&i| yv[i] == 1).count(), 1);
        }
    }
}
