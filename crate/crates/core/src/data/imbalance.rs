use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Majority count divided by minority count.
pub fn imbalance_ratio(y: &[u8]) -> f64 {
    let pos = y.iter().filter(|&&l| l == 1).count();
    (y.len() - pos) as f64 / pos as f64
}

/// Outcome of [`induce_imbalance`], as positions into the input labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Induced {
    /// All majority rows plus the kept minority rows, sorted.
    pub retained: Vec<usize>,
    /// Minority rows removed, sorted. Used as the "potential" pool.
    pub withheld: Vec<usize>,
}

/// Drops minority rows at random until majority / minority reaches
/// `target_ir`; keeps `ceil(majority / target_ir)` minority rows.
pub fn induce_imbalance(y: &[u8], target_ir: f64, seed: u64) -> Result<Induced> {
    if !(target_ir >= 1.0) || !target_ir.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "target imbalance ratio must be >= 1, got {target_ir}"
        )));
    }
    let (mut minority, majority): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| y[i] == 1);
    if minority.is_empty() {
        return Err(Error::Dataset("no minority rows".into()));
    }
    // 1e-9 absorbs float noise when majority / target is an integer.
    let keep = ((majority.len() as f64 / target_ir) - 1e-9).ceil().max(1.0) as usize;
    if keep > minority.len() {
        if (majority.len() as f64 / minority.len() as f64) < target_ir - 1e-9 {
            log::warn!(
                "target ratio {target_ir} needs {keep} minority rows, only {} available; keeping all",
                minority.len()
            );
        }
        return Ok(Induced {
            retained: (0..y.len()).collect(),
            withheld: Vec::new(),
        });
    }
    minority.shuffle(&mut seed::rng(seed));
    let mut withheld = minority.split_off(keep);
    let mut retained = majority;
    retained.extend(minority);
    retained.sort_unstable();
    withheld.sort_unstable();
    Ok(Induced { retained, withheld })
}

/// Random subset of the majority class with as many rows as the minority,
/// together with all minority rows. Sorted positions.
pub fn balance_by_downsampling(y: &[u8], seed: u64) -> Result<Vec<usize>> {
    let (minority, mut majority): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| y[i] == 1);
    if minority.is_empty() || majority.len() < minority.len() {
        return Err(Error::Dataset(
            "cannot downsample: class 1 must be the minority".into(),
        ));
    }
    majority.shuffle(&mut seed::rng(seed));
    majority.truncate(minority.len());
    let mut out = minority;
    out.extend(majority);
    out.sort_unstable();
    Ok(out)
}
