use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::BatchSampler;
use crate::seed::{self, Rng};

pub const SMOTE_DEFAULT_K: usize = 5;

fn split_classes(y: &[u8]) -> Result<(Vec<usize>, Vec<usize>)> {
    let (minority, majority): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| y[i] == 1);
    if minority.is_empty() || majority.is_empty() {
        return Err(Error::Dataset("both classes must be present".into()));
    }
    Ok((minority, majority))
}

/// All rows plus minority rows drawn with replacement until both classes
/// have equal counts. Positions into `y`, original rows first.
pub fn upsample_minority(y: &[u8], seed: u64) -> Result<Vec<usize>> {
    let (minority, majority) = split_classes(y)?;
    let mut out: Vec<usize> = (0..y.len()).collect();
    if majority.len() > minority.len() {
        let mut rng = seed::rng(seed);
        out.extend(
            (0..majority.len() - minority.len())
                .map(|_| minority[rng.gen_range(0..minority.len())]),
        );
    }
    Ok(out)
}

/// One epoch of class-balanced batches: the majority class is permuted and
/// cut into chunks of `batch_size / 2`; each chunk is paired with as many
/// minority rows, taken from a permutation that is redrawn whenever it runs
/// out. The last batch may be short but is still balanced.
pub fn balanced_batches(y: &[u8], batch_size: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 || batch_size % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "balanced batches need an even batch size, got {batch_size}"
        )));
    }
    let (minority, majority) = split_classes(y)?;
    let (big, small) = if majority.len() >= minority.len() {
        (majority, minority)
    } else {
        (minority, majority)
    };
    let half = batch_size / 2;
    let mut big = big;
    big.shuffle(rng);
    let mut pool: Vec<usize> = Vec::new();
    let mut batches = Vec::with_capacity(big.len().div_ceil(half));
    for chunk in big.chunks(half) {
        let mut batch = chunk.to_vec();
        for _ in 0..chunk.len() {
            if pool.is_empty() {
                pool = small.clone();
                pool.shuffle(rng);
                pool.reverse();
            }
            batch.push(pool.pop().expect("refilled"));
        }
        batches.push(batch);
    }
    Ok(batches)
}

/// [`BatchSampler`] producing [`balanced_batches`] over fixed labels.
#[derive(Debug, Clone)]
pub struct BalancedBatches {
    y: Vec<u8>,
}

impl BalancedBatches {
    pub fn new(y: &[u8]) -> Result<Self> {
        split_classes(y)?;
        Ok(Self { y: y.to_vec() })
    }
}

impl BatchSampler for BalancedBatches {
    fn epoch_batches(
        &mut self,
        _epoch: usize,
        n: usize,
        batch_size: usize,
        rng: &mut Rng,
    ) -> Result<Vec<Vec<usize>>> {
        if n != self.y.len() {
            return Err(Error::InvalidArgument(format!(
                "sampler built for {} rows, asked for {n}",
                self.y.len()
            )));
        }
        balanced_batches(&self.y, batch_size, rng)
    }
}

/// Provenance of one SMOTE sample: `row = base + lambda * (neighbor - base)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoteDraw {
    pub base: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    pub rows: Tensor,
    pub audit: Vec<SmoteDraw>,
}

/// `k` nearest other rows of every row (squared Euclidean, ties by index).
fn neighbours(x: &Tensor, k: usize) -> Vec<Vec<usize>> {
    let n = x.rows();
    (0..n)
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist = x
                        .row(i)
                        .iter()
                        .zip(x.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
                    (dist, j)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Synthetic minority oversampling: `n_new` interpolations between a random
/// minority row and one of its `k` nearest minority neighbours.
pub fn smote(minority: &Tensor, k: usize, n_new: usize, seed: u64) -> Result<SmoteOutput> {
    if k == 0 {
        return Err(Error::InvalidArgument("smote needs k >= 1".into()));
    }
    let n = minority.rows();
    if n < k + 1 {
        return Err(Error::Dataset(format!(
            "smote with k = {k} needs at least {} minority rows, got {n}",
            k + 1
        )));
    }
    let nn = neighbours(minority, k);
    let d = minority.cols();
    let mut rng = seed::rng(seed);
    let mut data = Vec::with_capacity(n_new * d);
    let mut audit = Vec::with_capacity(n_new);
    for _ in 0..n_new {
        let base = rng.gen_range(0..n);
        let neighbor = nn[base][rng.gen_range(0..k)];
        let lambda: f64 = rng.gen();
        let (a, b) = (minority.row(base), minority.row(neighbor));
        data.extend(a.iter().zip(b).map(|(x, y)| x + lambda * (y - x)));
        audit.push(SmoteDraw {
            base,
            neighbor,
            lambda,
        });
    }
    Ok(SmoteOutput {
        rows: Tensor::matrix(n_new, d, data),
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(neg: usize, pos: usize) -> Vec<u8> {
        let mut y = vec![0; neg];
        y.extend(vec![1; pos]);
        y
    }

    #[test]
    fn upsampling_equalises_counts() {
        let y = labels(50, 5);
        let idx = upsample_minority(&y, 1).unwrap();
        let pos = idx.iter().filter(|&&i| y[i] == 1).count();
        assert_eq!(pos, 50);
        assert_eq!(idx.len(), 100);
        assert_eq!(
            upsample_minority(&labels(4, 4), 1).unwrap(),
            (0..8).collect::<Vec<_>>()
        );
        assert!(upsample_minority(&labels(4, 0), 1).is_err());
    }

    #[test]
    fn balanced_batch_composition() {
        let y = labels(300, 20);
        let mut rng = seed::rng(3);
        let batches = balanced_batches(&y, 128, &mut rng).unwrap();
        for b in &batches {
            let pos = b.iter().filter(|&&i| y[i] == 1).count();
            assert_eq!(pos * 2, b.len());
        }
        assert_eq!(batches[0].len(), 128);
        let mut maj: Vec<usize> = batches
            .iter()
            .flatten()
            .copied()
            .filter(|&i| y[i] == 0)
            .collect();
        maj.sort_unstable();
        assert_eq!(maj, (0..300).collect::<Vec<_>>());

        let batches = balanced_batches(&labels(3, 1), 2, &mut rng).unwrap();
        assert!(batches
            .iter()
            .all(|b| b.len() == 2 && b.iter().filter(|&&i| i == 3).count() == 1));
        assert!(balanced_batches(&y, 7, &mut rng).is_err());
    }

    #[test]
    fn two_minority_points_stay_on_their_segment() {
        let x = Tensor::matrix(2, 2, vec![0.0, 0.0, 2.0, 1.0]);
        let out = smote(&x, 1, 50, 9).unwrap();
        for r in 0..50 {
            let p = out.rows.row(r);
            assert!((p[1] - 0.5 * p[0]).abs() < 1e-12);
            assert!((0.0..=2.0).contains(&p[0]));
        }
    }

    #[test]
    fn smote_doubling_and_errors() {
        let x = Tensor::matrix(6, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(smote(&x, 5, 6, 0).unwrap().rows.rows(), 6);
        assert!(smote(&x, 6, 6, 0).is_err());
        assert!(smote(&x, 0, 6, 0).is_err());
    }

    #[test]
    fn neighbour_ties_prefer_lower_index() {
        let x = Tensor::matrix(4, 1, vec![0.0, 1.0, -1.0, 1.0]);
        let nn = neighbours(&x, 2);
        assert_eq!(nn[0], vec![1, 2]);
        assert_eq!(nn[1], vec![3, 0]);
    }

    proptest! {
        #[test]
        fn smote_audit_reconstructs_every_row(
            pts in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 4..12),
            k in 1usize..4, seed in any::<u64>()
        ) {
            let n = pts.len();
            let x = Tensor::from_rows(&pts).unwrap();
            let out = smote(&x, k, 20, seed).unwrap();
            let nn = neighbours(&x, k);
            for (r, draw) in out.audit.iter().enumerate() {
                prop_assert!(draw.base < n && nn[draw.base].contains(&draw.neighbor));
                prop_assert!((0.0..1.0).contains(&draw.lambda));
                let (a, b) = (x.row(draw.base), x.row(draw.neighbor));
                // distance from the generated point to the segment [a, b]
                let ab: Vec<f64> = a.iter().zip(b).map(|(a, b)| b - a).collect();
                let ap: Vec<f64> = a.iter().zip(out.rows.row(r)).map(|(a, p)| p - a).collect();
                let len2: f64 = ab.iter().map(|v| v * v).sum();
                let t = if len2 > 0.0 { (ab.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0) } else { 0.0 };
                let dist: f64 = ab.iter().zip(&ap).map(|(u, v)| (v - t * u).powi(2)).sum::<f64>().sqrt();
                prop_assert!(dist < 1e-10);
            }
        }

        #[test]
        fn balanced_majority_appears_once_per_epoch(neg in 1usize..200, pos in 1usize..50, half in 1usize..40, seed in any::<u64>()) {
            let y = labels(neg, pos);
            let mut rng = seed::rng(seed);
            let batches = balanced_batches(&y, 2 * half, &mut rng).unwrap();
            let big = if neg >= pos { 0 } else { 1 };
            let mut seen: Vec<usize> = batches.iter().flatten().copied().filter(|&i| y[i] == big).collect();
            seen.sort_unstable();
            let expected: Vec<usize> = (0..y.len()).filter(|&i| y[i] == big).collect();
            prop_assert_eq!(seen, expected);
            for b in &batches {
                prop_assert!(b.len() <= 2 * half);
                prop_assert_eq!(b.iter().filter(|&&i| y[i] == 1).count() * 2, b.len());
            }
        }
    }
}
