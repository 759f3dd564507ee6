//! Exhaustive architecture / learning-rate search scored by validation AP.

use std::cmp::Ordering;

use metaug::model::{Activation, Head, MlpArchitecture};

use crate::config::{GridSpec, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub hidden: Vec<usize>,
    pub lr: f64,
}

impl Candidate {
    pub fn architecture(&self, input_dim: usize, activation: Activation) -> MlpArchitecture {
        MlpArchitecture {
            input_dim,
            hidden: self.hidden.clone(),
            activation,
            head: Head::Sigmoid,
        }
    }

    /// Parameter count of the classifier on `input_dim` features.
    pub fn size(&self, input_dim: usize) -> usize {
        self.architecture(input_dim, Activation::Relu)
            .parameter_count()
    }

    /// Hidden widths joined by `x`, e.g. `64x64`.
    pub fn label(&self) -> String {
        self.hidden
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("x")
    }
}

impl GridSpec {
    /// Every combination, layers outermost, then widths, then rates.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::with_capacity(self.layers.len() * self.widths.len() * self.lrs.len());
        for &n in &self.layers {
            for &w in &self.widths {
                for &lr in &self.lrs {
                    out.push(Candidate {
                        hidden: vec![w; n],
                        lr,
                    });
                }
            }
        }
        out
    }
}

impl ModelSpec {
    pub fn candidate(&self) -> Candidate {
        Candidate {
            hidden: self.hidden.clone(),
            lr: self.lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: Candidate,
    pub best_score: f64,
    /// Every candidate with its score, in evaluation order.
    pub scores: Vec<(Candidate, f64)>,
}

/// Scores every candidate and keeps the highest. Ties go to the smaller
/// model, then to the lower learning rate. A NaN score ranks below all
/// others.
///
/// # Panics
///
/// If `candidates` is empty.
pub fn grid_search(
    candidates: &[Candidate],
    input_dim: usize,
    mut score: impl FnMut(&Candidate) -> f64,
) -> GridResult {
    assert!(
        !candidates.is_empty(),
        "grid search needs at least one candidate"
    );
    let scores: Vec<(Candidate, f64)> = candidates
        .iter()
        .map(|c| {
            let s = score(c);
            (c.clone(), if s.is_nan() { f64::NEG_INFINITY } else { s })
        })
        .collect();
    let better = |a: &(Candidate, f64), b: &(Candidate, f64)| -> Ordering {
        a.1.total_cmp(&b.1)
            .then_with(|| b.0.size(input_dim).cmp(&a.0.size(input_dim)))
            .then_with(|| b.0.lr.total_cmp(&a.0.lr))
    };
    let mut best = &scores[0];
    for s in &scores[1..] {
        if better(s, best) == Ordering::Greater {
            best = s;
        }
    }
    GridResult {
        best: best.0.clone(),
        best_score: best.1,
        scores: scores.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(hidden: &[usize], lr: f64) -> Candidate {
        Candidate {
            hidden: hidden.to_vec(),
            lr,
        }
    }

    #[test]
    fn default_grid_has_36_candidates() {
        let g = GridSpec::default().candidates();
        assert_eq!(g.len(), 36);
        assert_eq!(g[0], c(&[16], 0.1));
        assert_eq!(g[35], c(&[128, 128, 128], 1e-3));
    }

    #[test]
    fn singleton_grid_returns_it() {
        let only = c(&[8], 0.01);
        let r = grid_search(std::slice::from_ref(&only), 3, |_| 0.3);
        assert_eq!(r.best, only);
        assert_eq!(r.best_score, 0.3);
    }

    #[test]
    fn ties_prefer_smaller_then_slower() {
        let cands = [
            c(&[32], 0.1),
            c(&[16, 16], 0.01),
            c(&[16], 0.1),
            c(&[16], 0.01),
        ];
        let r = grid_search(&cands, 4, |_| 0.9);
        assert_eq!(r.best, c(&[16], 0.01));
    }

    #[test]
    fn nan_never_wins() {
        let cands = [c(&[4], 0.1), c(&[8], 0.1)];
        let r = grid_search(&cands, 2, |k| if k.hidden[0] == 4 { f64::NAN } else { 0.1 });
        assert_eq!(r.best, c(&[8], 0.1));
        assert_eq!(r.scores[0].1, f64::NEG_INFINITY);
    }
}
