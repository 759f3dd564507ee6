use serde::{Deserialize, Serialize};

use super::ParamSet;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    /// Adam with lr 1e-3, betas (0.5, 0.999).
    pub fn adam_default() -> Self {
        Self::adam(1e-3)
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, params: &ParamSet) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd { .. } => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => {
                let zeros: Vec<Tensor> = params
                    .tensors()
                    .iter()
                    .map(|t| Tensor::zeros(t.shape()))
                    .collect();
                (zeros.clone(), zeros)
            }
        };
        Self {
            kind,
            m,
            v,
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<()> {
        let slots = params.tensors_mut();
        if slots.len() != grads.len() {
            return Err(Error::shape(
                "optimizer",
                format!("{} params vs {} grads", slots.len(), grads.len()),
            ));
        }
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd { lr } => {
                for (p, g) in slots.into_iter().zip(grads) {
                    // Written as p + g * (-lr) to match the adapted-parameter
                    // node built by the meta step bit for bit.
                    for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                        *pv += gv * -lr;
                    }
                }
            }
            OptimizerKind::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let t = self.step as i32;
                let bc1 = 1.0 - beta1.powi(t);
                let bc2 = 1.0 - beta2.powi(t);
                for (i, (p, g)) in slots.into_iter().zip(grads).enumerate() {
                    let m = self.m[i].data_mut();
                    let v = self.v[i].data_mut();
                    for (j, (pv, &gv)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                        m[j] = beta1 * m[j] + (1.0 - beta1) * gv;
                        v[j] = beta2 * v[j] + (1.0 - beta2) * gv * gv;
                        let m_hat = m[j] / bc1;
                        let v_hat = v[j] / bc2;
                        *pv -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
