use rand::seq::SliceRandom;

use super::{forward, LossKind, OptimizerKind, OptimizerState, ParamSet};
use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// Produces the index batches of one epoch.
pub trait BatchSampler {
    fn epoch_batches(
        &mut self,
        epoch: usize,
        n: usize,
        batch_size: usize,
        rng: &mut Rng,
    ) -> Result<Vec<Vec<usize>>>;
}

/// A fresh permutation per epoch cut into consecutive batches; the last
/// short batch is kept.
#[derive(Debug, Default, Clone, Copy)]
pub struct ShuffledBatches;

impl BatchSampler for ShuffledBatches {
    fn epoch_batches(
        &mut self,
        _epoch: usize,
        n: usize,
        batch_size: usize,
        rng: &mut Rng,
    ) -> Result<Vec<Vec<usize>>> {
        Ok(shuffled_chunks(n, batch_size, rng))
    }
}

pub(crate) fn shuffled_chunks(n: usize, batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            epochs: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParamSet,
    /// Mean batch loss of every epoch.
    pub loss_history: Vec<f64>,
}

/// Mini-batch training of `params` on rows of `x` with targets `y` (n x 1).
///
/// Deterministic in `config.seed`. `sampler` defaults to [`ShuffledBatches`].
pub fn train(
    params: &ParamSet,
    x: &Tensor,
    y: &Tensor,
    loss: LossKind,
    optimizer: OptimizerKind,
    config: &TrainConfig,
    sampler: Option<&mut dyn BatchSampler>,
) -> Result<TrainOutcome> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Dataset("cannot train on an empty dataset".into()));
    }
    if y.rows() != n || y.cols() != 1 {
        return Err(Error::shape(
            "train",
            format!("x {:?} vs y {:?}", x.shape(), y.shape()),
        ));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".into(),
        ));
    }
    let mut default_sampler = ShuffledBatches;
    let sampler: &mut dyn BatchSampler = match sampler {
        Some(s) => s,
        None => &mut default_sampler,
    };

    let mut params = params.clone();
    let mut opt = OptimizerState::new(optimizer, &params);
    let mut rng = seed::rng(config.seed);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let batches = sampler
            .epoch_batches(epoch, n, config.batch_size, &mut rng)
            .map_err(|source| Error::Training {
                epoch,
                batch: 0,
                source: Box::new(source),
            })?;
        let mut total = 0.0;
        for (b, idx) in batches.iter().enumerate() {
            let wrap = |source| Error::Training {
                epoch,
                batch: b,
                source: Box::new(source),
            };
            let (value, grads) =
                batch_gradient(&params, &x.select_rows(idx), &y.select_rows(idx), loss)
                    .map_err(wrap)?;
            if !value.is_finite() {
                return Err(wrap(Error::NonFinite { op: "loss" }));
            }
            opt.step(&mut params, &grads).map_err(wrap)?;
            total += value;
        }
        history.push(if batches.is_empty() {
            0.0
        } else {
            total / batches.len() as f64
        });
    }
    Ok(TrainOutcome {
        params,
        loss_history: history,
    })
}

/// Loss value and parameter gradients of one batch.
pub(crate) fn batch_gradient(
    params: &ParamSet,
    xb: &Tensor,
    yb: &Tensor,
    loss: LossKind,
) -> Result<(f64, Vec<Tensor>)> {
    let mut g = Graph::new();
    let vars = params.bind(&mut g);
    let xv = g.constant(xb.clone());
    let yv = g.constant(yb.clone());
    let out = forward(&mut g, &params.arch, &vars, xv)?;
    let l = loss.apply(&mut g, out, yv)?;
    let grads = g.backward(l, &vars, false)?;
    Ok((g.value(l).item(), grads))
}

/// Mean loss of `params` on a whole dataset.
pub fn evaluate_loss(params: &ParamSet, x: &Tensor, y: &Tensor, loss: LossKind) -> Result<f64> {
    let mut g = Graph::new();
    let vars: Vec<_> = params
        .tensors()
        .into_iter()
        .map(|t| g.constant(t.clone()))
        .collect();
    let xv = g.constant(x.clone());
    let yv = g.constant(y.clone());
    let out = forward(&mut g, &params.arch, &vars, xv)?;
    let l = loss.apply(&mut g, out, yv)?;
    Ok(g.value(l).item())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Head, MlpArchitecture};
    use rand::Rng as _;

    fn blobs(n: usize, seed: u64) -> (Tensor, Tensor) {
        let mut rng = seed::rng(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = (i % 2) as f64;
            let centre = if label == 1.0 { 2.0 } else { -2.0 };
            x.push(centre + rng.gen_range(-1.0..1.0));
            x.push(centre + rng.gen_range(-1.0..1.0));
            y.push(label);
        }
        (Tensor::matrix(n, 2, x), Tensor::column(y))
    }

    fn arch() -> MlpArchitecture {
        MlpArchitecture::new(2, vec![8], Activation::Relu, Head::Sigmoid).unwrap()
    }

    #[test]
    fn zero_epochs_leaves_params_unchanged() {
        let (x, y) = blobs(20, 0);
        let p = ParamSet::init(&arch(), 1).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let out = train(
            &p,
            &x,
            &y,
            LossKind::Bce,
            OptimizerKind::adam_default(),
            &cfg,
            None,
        )
        .unwrap();
        assert_eq!(out.params, p);
        assert!(out.loss_history.is_empty());
    }

    #[test]
    fn separable_blobs_reach_full_accuracy() {
        let (x, y) = blobs(60, 2);
        let p = ParamSet::init(&arch(), 3).unwrap();
        let cfg = TrainConfig {
            batch_size: 16,
            epochs: 50,
            seed: 4,
        };
        let out = train(
            &p,
            &x,
            &y,
            LossKind::Bce,
            OptimizerKind::adam(1e-2),
            &cfg,
            None,
        )
        .unwrap();
        let probs = out.params.predict(&x).unwrap();
        let correct = probs
            .iter()
            .zip(y.data())
            .filter(|(p, y)| (**p >= 0.5) == (**y == 1.0))
            .count();
        assert_eq!(correct, 60);
        assert!(out.loss_history.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn fixed_seed_reproduces_history() {
        let (x, y) = blobs(30, 5);
        let p = ParamSet::init(&arch(), 6).unwrap();
        let cfg = TrainConfig {
            batch_size: 7,
            epochs: 5,
            seed: 8,
        };
        let a = train(
            &p,
            &x,
            &y,
            LossKind::Bce,
            OptimizerKind::adam_default(),
            &cfg,
            None,
        )
        .unwrap();
        let b = train(
            &p,
            &x,
            &y,
            LossKind::Bce,
            OptimizerKind::adam_default(),
            &cfg,
            None,
        )
        .unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn empty_dataset_and_zero_batch_are_errors() {
        let p = ParamSet::init(&arch(), 0).unwrap();
        let cfg = TrainConfig::default();
        let empty = Tensor::zeros(&[0, 2]);
        assert!(train(
            &p,
            &empty,
            &Tensor::zeros(&[0, 1]),
            LossKind::Bce,
            OptimizerKind::adam_default(),
            &cfg,
            None
        )
        .is_err());
        let (x, y) = blobs(4, 0);
        let cfg = TrainConfig {
            batch_size: 0,
            ..cfg
        };
        assert!(train(
            &p,
            &x,
            &y,
            LossKind::Bce,
            OptimizerKind::adam_default(),
            &cfg,
            None
        )
        .is_err());
    }

    #[test]
    fn non_finite_loss_reports_epoch_and_batch() {
        let (x, _) = blobs(4, 0);
        let y = Tensor::column(vec![f64::INFINITY; 4]);
        let p = ParamSet::init(&arch(), 0).unwrap();
        let cfg = TrainConfig {
            batch_size: 2,
            epochs: 1,
            seed: 0,
        };
        let err = train(
            &p,
            &x,
            &y,
            LossKind::Mse,
            OptimizerKind::adam_default(),
            &cfg,
            None,
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                Error::Training {
                    epoch: 0,
                    batch: 0,
                    ..
                }
            ),
            "{err}"
        );
    }
}
