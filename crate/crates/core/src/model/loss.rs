use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

/// Probabilities are clamped to `[EPS, 1 - EPS]` before any logarithm.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossKind {
    Bce,
    Focal { gamma: f64, alpha: f64 },
    Mse,
}

impl LossKind {
    pub fn focal_default() -> Self {
        LossKind::Focal {
            gamma: 2.0,
            alpha: 0.5,
        }
    }

    pub fn apply(&self, graph: &mut Graph, outputs: Var, targets: Var) -> Result<Var> {
        match *self {
            LossKind::Bce => bce(graph, outputs, targets, None),
            LossKind::Focal { gamma, alpha } => focal(graph, outputs, targets, gamma, alpha),
            LossKind::Mse => mse(graph, outputs, targets),
        }
    }
}

fn check_lengths(graph: &Graph, op: &'static str, a: Var, b: Var) -> Result<()> {
    if graph.shape(a) != graph.shape(b) {
        return Err(Error::shape(
            op,
            format!(
                "outputs {:?} vs targets {:?}",
                graph.shape(a),
                graph.shape(b)
            ),
        ));
    }
    Ok(())
}

/// Binary cross-entropy `-[y ln p + (1 - y) ln(1 - p)]`, averaged. With
/// per-sample weights the weighted sum is divided by the weight sum.
pub fn bce(graph: &mut Graph, probs: Var, labels: Var, weights: Option<&Tensor>) -> Result<Var> {
    check_lengths(graph, "bce", probs, labels)?;
    let p = graph.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)?;
    let log_p = graph.log(p)?;
    let q = graph.one_minus(p)?;
    let log_q = graph.log(q)?;
    let not_y = graph.one_minus(labels)?;
    let pos = graph.mul(log_p, labels)?;
    let neg = graph.mul(log_q, not_y)?;
    let ll = graph.add(pos, neg)?;
    match weights {
        None => {
            let m = graph.mean(ll)?;
            graph.neg(m)
        }
        Some(w) => {
            if w.numel() != graph.value(ll).numel() {
                return Err(Error::shape(
                    "bce",
                    format!("{} weights for {:?}", w.numel(), graph.shape(ll)),
                ));
            }
            let total = w.sum();
            if !(total > 0.0) {
                return Err(Error::InvalidArgument(
                    "weights must have a positive sum".into(),
                ));
            }
            let wv = graph.constant(w.clone().reshape(graph.shape(ll).to_vec())?);
            let weighted = graph.mul(ll, wv)?;
            let s = graph.sum(weighted)?;
            graph.scale(s, -1.0 / total)
        }
    }
}

/// Focal loss `-alpha_t (1 - p_t)^gamma ln p_t`, averaged, where `p_t` and
/// `alpha_t` pick `p`/`alpha` for positives and `1 - p`/`1 - alpha` otherwise.
pub fn focal(graph: &mut Graph, probs: Var, labels: Var, gamma: f64, alpha: f64) -> Result<Var> {
    if gamma < 0.0 || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "focal loss needs gamma >= 0 and alpha in [0, 1], got {gamma}, {alpha}"
        )));
    }
    check_lengths(graph, "focal", probs, labels)?;
    let p = graph.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)?;
    // p_t = y p + (1 - y)(1 - p)
    let not_y = graph.one_minus(labels)?;
    let q = graph.one_minus(p)?;
    let a = graph.mul(labels, p)?;
    let b = graph.mul(not_y, q)?;
    let pt = graph.add(a, b)?;
    // alpha_t = (1 - alpha) + (2 alpha - 1) y
    let at = graph.scale(labels, 2.0 * alpha - 1.0)?;
    let at = graph.add_scalar(at, 1.0 - alpha)?;

    let log_pt = graph.log(pt)?;
    let one_minus_pt = graph.one_minus(pt)?;
    let modulator = graph.powf(one_minus_pt, gamma)?;
    let term = graph.mul(modulator, log_pt)?;
    let term = graph.mul(term, at)?;
    let m = graph.mean(term)?;
    graph.neg(m)
}

/// Mean squared error.
pub fn mse(graph: &mut Graph, preds: Var, targets: Var) -> Result<Var> {
    check_lengths(graph, "mse", preds, targets)?;
    let diff = graph.sub(preds, targets)?;
    let sq = graph.powf(diff, 2.0)?;
    graph.mean(sq)
}
