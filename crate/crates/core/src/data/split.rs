use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Row indices of one train / validation / test split. Every list is sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class counts for `fractions` by largest remainder, so part sizes sum
/// to `n` and each is within one of `f * n`.
fn allocate(n: usize, fractions: &[f64]) -> Vec<usize> {
    let total: f64 = fractions.iter().sum();
    let exact: Vec<f64> = fractions.iter().map(|f| f / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..fractions.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in by_remainder.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn classes(y: &[u8]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &l) in y.iter().enumerate() {
        out[usize::from(l != 0)].push(i);
    }
    out
}

/// Splits positions `0..y.len()` into `fractions.len()` parts preserving the
/// class ratio in each part.
pub fn stratified_partition(y: &[u8], fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "fractions must be positive, got {fractions:?}"
        )));
    }
    let parts = fractions.len();
    let mut out = vec![Vec::new(); parts];
    let mut rng = seed::rng(seed);
    for (label, mut members) in classes(y).into_iter().enumerate() {
        if members.len() < parts {
            return Err(Error::Dataset(format!(
                "class {label} has {} rows, fewer than the {parts} requested parts",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let mut start = 0;
        for (part, count) in allocate(members.len(), fractions).into_iter().enumerate() {
            out[part].extend_from_slice(&members[start..start + count]);
            start += count;
        }
    }
    for p in &mut out {
        p.sort_unstable();
    }
    Ok(out)
}

/// Stratified split. Two fractions mean (train, test); three mean
/// (train, valid, test).
pub fn stratified_split(y: &[u8], fractions: &[f64], seed: u64) -> Result<SplitIndices> {
    let mut parts = stratified_partition(y, fractions, seed)?;
    match parts.len() {
        2 => Ok(SplitIndices {
            test: parts.pop().unwrap_or_default(),
            train: parts.pop().unwrap_or_default(),
            valid: Vec::new(),
        }),
        3 => Ok(SplitIndices {
            test: parts.pop().unwrap_or_default(),
            valid: parts.pop().unwrap_or_default(),
            train: parts.pop().unwrap_or_default(),
        }),
        n => Err(Error::InvalidArgument(format!(
            "expected 2 or 3 fractions, got {n}"
        ))),
    }
}

/// Stratified k-fold assignment; returns the sorted positions of each fold.
///
/// The shuffled members of each class are dealt round-robin; the dealing
/// position carries over between classes so fold sizes differ by at most one.
pub fn stratified_kfold(y: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let mut folds = vec![Vec::new(); k];
    let mut rng = seed::rng(seed);
    let mut offset = 0;
    for (label, mut members) in classes(y).into_iter().enumerate() {
        if members.len() < k {
            return Err(Error::Dataset(format!(
                "class {label} has {} rows, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for m in members {
            folds[offset % k].push(m);
            offset += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// k-fold cross-validation splits: fold `i` is the test set and the rest is
/// split stratified into train and validation by `valid_fraction`.
pub fn cv_splits(y: &[u8], k: usize, valid_fraction: f64, seed: u64) -> Result<Vec<SplitIndices>> {
    if !(valid_fraction > 0.0 && valid_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction {valid_fraction} not in (0, 1)"
        )));
    }
    let folds = stratified_kfold(y, k, seed::derive(seed, &["kfold"]))?;
    let mut out = Vec::with_capacity(k);
    for (i, test) in folds.iter().enumerate() {
        let rest: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let mut rest_sorted = rest;
        rest_sorted.sort_unstable();
        let y_rest: Vec<u8> = rest_sorted.iter().map(|&r| y[r]).collect();
        let parts = stratified_partition(
            &y_rest,
            &[1.0 - valid_fraction, valid_fraction],
            seed::derive(seed, &["valid", &i.to_string()]),
        )?;
        out.push(SplitIndices {
            train: parts[0].iter().map(|&p| rest_sorted[p]).collect(),
            valid: parts[1].iter().map(|&p| rest_sorted[p]).collect(),
            test: test.clone(),
        });
    }
    Ok(out)
}
