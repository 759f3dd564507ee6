use metaug::autodiff::{Graph, Tensor};
use metaug::meta::{epoch_schedule, meta_gradient, meta_train, MetaConfig};
use metaug::model::{
    self, evaluate_loss, forward, Activation, BatchSampler, Head, LossKind, MlpArchitecture,
    OptimizerKind, ParamSet, TrainConfig,
};
use metaug::resampling::SyntheticSet;
use metaug::seed::{self, Rng};
use metaug::Result;
use rand::Rng as _;

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-1.5..1.5)).collect(),
    )
}

fn random_labels(rng: &mut Rng, n: usize) -> Tensor {
    Tensor::column((0..n).map(|_| f64::from(rng.gen_bool(0.5))).collect())
}

/// Validation loss after one explicit first-order gradient step, with no
/// graph retained between the two stages.
fn perturb_and_readapt(
    theta: &ParamSet,
    x_in: &Tensor,
    y_in: &Tensor,
    x2: &Tensor,
    y2: &Tensor,
    loss: LossKind,
    eta1: f64,
) -> Result<f64> {
    let mut g = Graph::new();
    let vars = theta.bind(&mut g);
    let xv = g.constant(x_in.clone());
    let yv = g.constant(y_in.clone());
    let out = forward(&mut g, &theta.arch, &vars, xv)?;
    let l = loss.apply(&mut g, out, yv)?;
    let grads = g.backward(l, &vars, false)?;
    let mut adapted = theta.clone();
    let stepped = theta
        .tensors()
        .into_iter()
        .zip(&grads)
        .map(|(p, gr)| p.zip_map(gr, |a, b| a - eta1 * b))
        .collect();
    adapted.set_tensors(stepped)?;
    evaluate_loss(&adapted, x2, y2, loss)
}

#[test]
fn meta_gradient_matches_finite_differences() {
    let mut worst: f64 = 0.0;
    for s in 0..25u64 {
        let mut rng = seed::rng(seed::derive(7, &["meta-fd", &s.to_string()]));
        let d = rng.gen_range(1..=4);
        let depth = rng.gen_range(1..=2);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.gen_range(2..=16)).collect();
        let act = if rng.gen_bool(0.5) {
            Activation::Tanh
        } else {
            Activation::Relu
        };
        let regression = s % 5 == 4;
        let (head, loss) = if regression {
            (Head::Linear, LossKind::Mse)
        } else {
            (Head::Sigmoid, LossKind::Bce)
        };
        let arch = MlpArchitecture::new(d, hidden, act, head).unwrap();
        let theta = ParamSet::init(&arch, s).unwrap();

        let m = rng.gen_range(1..=8);
        let n1 = rng.gen_range(0..=6);
        let n2 = rng.gen_range(1..=6);
        let z = random_matrix(&mut rng, m, d);
        let zl = if regression {
            random_matrix(&mut rng, m, 1)
        } else {
            Tensor::full(&[m, 1], 1.0)
        };
        let x1 = random_matrix(&mut rng, n1, d);
        let y1 = if regression {
            random_matrix(&mut rng, n1, 1)
        } else {
            random_labels(&mut rng, n1)
        };
        let x2 = random_matrix(&mut rng, n2, d);
        let y2 = if regression {
            random_matrix(&mut rng, n2, 1)
        } else {
            random_labels(&mut rng, n2)
        };
        let eta1 = 0.5;
        let cfg = MetaConfig {
            eta1,
            loss,
            ..Default::default()
        };

        let step = meta_gradient(&theta, &x1, &y1, &z, &zl, regression, &x2, &y2, &cfg).unwrap();
        let f = |zp: &Tensor, lp: &Tensor| {
            let x_in = Tensor::vstack(&[&x1, zp]).unwrap();
            let y_in = Tensor::vstack(&[&y1, lp]).unwrap();
            perturb_and_readapt(&theta, &x_in, &y_in, &x2, &y2, loss, eta1).unwrap()
        };
        let h = 1e-6;
        let mut numeric = vec![0.0; z.numel()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp.data_mut()[i] += h;
            zm.data_mut()[i] -= h;
            *slot = (f(&zp, &zl) - f(&zm, &zl)) / (2.0 * h);
        }
        let scale = numeric.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-8);
        let err = step
            .z_grad
            .data()
            .iter()
            .zip(&numeric)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let rel = err / scale;
        assert!(
            rel < 1e-3,
            "seed {s}: rel error {rel:e} (analytic {:?}, numeric {numeric:?})",
            step.z_grad.data()
        );
        worst = worst.max(rel);

        if regression {
            let lg = step.label_grad.expect("free labels get a gradient");
            for i in 0..m {
                let (mut lp, mut lm) = (zl.clone(), zl.clone());
                lp.data_mut()[i] += h;
                lm.data_mut()[i] -= h;
                let n = (f(&z, &lp) - f(&z, &lm)) / (2.0 * h);
                assert!(
                    (lg.data()[i] - n).abs() <= 1e-3 * n.abs().max(1e-6),
                    "seed {s}: label {i}"
                );
            }
        }
    }
    eprintln!("worst meta-gradient rel error {worst:e}");
}

/// Replays the meta schedule over `[train; Z]`: train rows first, then the
/// synthetic rows of the same iteration.
struct Replay {
    epochs: Vec<Vec<Vec<usize>>>,
}

impl BatchSampler for Replay {
    fn epoch_batches(
        &mut self,
        epoch: usize,
        _n: usize,
        _b: usize,
        _rng: &mut Rng,
    ) -> Result<Vec<Vec<usize>>> {
        Ok(self.epochs[epoch].clone())
    }
}

#[test]
fn frozen_synthetic_points_reduce_to_plain_training() {
    let mut rng = seed::rng(11);
    let d = 3;
    let arch = MlpArchitecture::new(d, vec![8, 4], Activation::Relu, Head::Sigmoid).unwrap();
    let theta0 = ParamSet::init(&arch, 5).unwrap();
    let (n_train, n_valid, m) = (37, 12, 9);
    let x = random_matrix(&mut rng, n_train, d);
    let y = random_labels(&mut rng, n_train);
    let xv = random_matrix(&mut rng, n_valid, d);
    let classes: Vec<u8> = (0..n_valid).map(|i| u8::from(i % 3 == 0)).collect();
    let yv = Tensor::column(classes.iter().map(|&c| f64::from(c)).collect());
    let z = random_matrix(&mut rng, m, d);
    let syn = SyntheticSet::minority(z.clone(), vec![None; m]).unwrap();
    let cfg = MetaConfig {
        eta1: 0.05,
        eta2: 0.0,
        epochs: 4,
        train_batch: 8,
        valid_batch: 5,
        synth_batch: 4,
        seed: 99,
        ..Default::default()
    };
    let state = meta_train(&x, &y, &xv, &yv, &classes, &theta0, syn, &cfg).unwrap();
    assert_eq!(state.synthetic.z, z);

    let mut srng = seed::rng(cfg.seed);
    let epochs = (0..cfg.epochs)
        .map(|_| {
            epoch_schedule(&cfg, n_train, m, &classes, &mut srng)
                .into_iter()
                .map(|it| {
                    it.train
                        .into_iter()
                        .chain(it.synth.into_iter().map(|j| n_train + j))
                        .collect()
                })
                .collect()
        })
        .collect();
    let combined_x = Tensor::vstack(&[&x, &z]).unwrap();
    let combined_y = Tensor::vstack(&[&y, &Tensor::full(&[m, 1], 1.0)]).unwrap();
    let mut replay = Replay { epochs };
    let plain = model::train(
        &theta0,
        &combined_x,
        &combined_y,
        LossKind::Bce,
        OptimizerKind::Sgd { lr: cfg.eta1 },
        &TrainConfig {
            batch_size: 1,
            epochs: cfg.epochs,
            seed: 0,
        },
        Some(&mut replay),
    )
    .unwrap();
    assert_eq!(
        plain.params, state.theta,
        "eta2 = 0 must match plain SGD bit for bit"
    );
}

#[test]
fn meta_train_is_deterministic() {
    let mut rng = seed::rng(2);
    let arch = MlpArchitecture::new(2, vec![6], Activation::Tanh, Head::Sigmoid).unwrap();
    let theta0 = ParamSet::init(&arch, 1).unwrap();
    let x = random_matrix(&mut rng, 20, 2);
    let y = random_labels(&mut rng, 20);
    let xv = random_matrix(&mut rng, 6, 2);
    let classes = [0, 1, 0, 1, 0, 0];
    let yv = Tensor::column(classes.iter().map(|&c| f64::from(c)).collect());
    let syn = SyntheticSet::minority(random_matrix(&mut rng, 5, 2), vec![None; 5]).unwrap();
    let cfg = MetaConfig {
        epochs: 3,
        eta2: 1.0,
        train_batch: 6,
        synth_batch: 2,
        valid_batch: 3,
        ..Default::default()
    };
    let a = meta_train(&x, &y, &xv, &yv, &classes, &theta0, syn.clone(), &cfg).unwrap();
    let b = meta_train(&x, &y, &xv, &yv, &classes, &theta0, syn, &cfg).unwrap();
    assert_eq!(a, b);
}
