use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::ParamSet;

/// Synthetic points optimised by the meta loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSet {
    /// m x d points in preprocessed feature space.
    pub z: Tensor,
    /// m x 1 targets. All ones for classification.
    pub labels: Tensor,
    /// Training row each point was copied from, if any.
    pub origin: Vec<Option<usize>>,
    /// Whether the meta update also moves `labels` (regression).
    pub free_labels: bool,
}

impl SyntheticSet {
    /// Minority points with fixed label 1.
    pub fn minority(z: Tensor, origin: Vec<Option<usize>>) -> Result<Self> {
        if origin.len() != z.rows() {
            return Err(Error::shape(
                "synthetic",
                format!("{} origins for {} rows", origin.len(), z.rows()),
            ));
        }
        let m = z.rows();
        Ok(Self {
            z,
            labels: Tensor::full(&[m, 1], 1.0),
            origin,
            free_labels: false,
        })
    }

    /// Free (x, y) pairs for regression.
    pub fn regression(z: Tensor, labels: Tensor) -> Result<Self> {
        if labels.shape() != [z.rows(), 1] {
            return Err(Error::shape(
                "synthetic",
                format!("labels {:?} for {} rows", labels.shape(), z.rows()),
            ));
        }
        let m = z.rows();
        Ok(Self {
            z,
            labels,
            origin: vec![None; m],
            free_labels: true,
        })
    }

    pub fn len(&self) -> usize {
        self.z.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.rows() == 0
    }

    /// CSV with columns `z0..z{d-1},label,origin` (origin empty when none).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let d = self.z.cols();
        for j in 0..d {
            out.push_str(&format!("z{j},"));
        }
        out.push_str("label,origin\n");
        for r in 0..self.len() {
            for v in self.z.row(r) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{},", self.labels.data()[r]));
            if let Some(o) = self.origin[r] {
                out.push_str(&o.to_string());
            }
            out.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Copies of the minority rows of `x` whose predicted minority probability
/// under `classifier` is at most `c`.
pub fn init_synthetic(x: &Tensor, y: &[u8], classifier: &ParamSet, c: f64) -> Result<SyntheticSet> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidArgument(format!(
            "confidence bound must be in [0, 1], got {c}"
        )));
    }
    if x.rows() != y.len() {
        return Err(Error::shape(
            "init_synthetic",
            format!("{} rows vs {} labels", x.rows(), y.len()),
        ));
    }
    let minority: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let scores = classifier.predict(&x.select_rows(&minority))?;
    let chosen: Vec<usize> = minority
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s <= c)
        .map(|(&i, _)| i)
        .collect();
    if chosen.is_empty() {
        return Err(Error::Dataset(format!(
            "no minority row has confidence <= {c}; use a larger confidence bound"
        )));
    }
    SyntheticSet::minority(
        x.select_rows(&chosen),
        chosen.into_iter().map(Some).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Head, MlpArchitecture};

    /// One hidden unit with weight 1 and unit output weight: predictions are
    /// sigmoid(relu(x)), increasing in x.
    fn identity_classifier() -> ParamSet {
        let arch = MlpArchitecture::new(1, vec![1], Activation::Relu, Head::Sigmoid).unwrap();
        let mut p = ParamSet::zeros(&arch).unwrap();
        let mut t = p.tensors().into_iter().cloned().collect::<Vec<_>>();
        t[0] = Tensor::matrix(1, 1, vec![1.0]);
        t[2] = Tensor::matrix(1, 1, vec![1.0]);
        p.set_tensors(t).unwrap();
        p
    }

    fn fixture() -> (Tensor, Vec<u8>) {
        // minority rows at x = -1, 2, -3, 4 (scores 0.5, 0.88, 0.5, 0.98)
        let x = Tensor::column(vec![0.0, -1.0, 2.0, 5.0, -3.0, 4.0]);
        (x, vec![0, 1, 1, 0, 1, 1])
    }

    #[test]
    fn full_confidence_copies_all_minority_rows() {
        let (x, y) = fixture();
        let s = init_synthetic(&x, &y, &identity_classifier(), 1.0).unwrap();
        assert_eq!(s.origin, vec![Some(1), Some(2), Some(4), Some(5)]);
        assert_eq!(s.z.data(), &[-1.0, 2.0, -3.0, 4.0]);
        assert!(s.labels.data().iter().all(|&l| l == 1.0));
    }

    #[test]
    fn half_bound_selects_low_scoring_half() {
        let (x, y) = fixture();
        let s = init_synthetic(&x, &y, &identity_classifier(), 0.5).unwrap();
        assert_eq!(s.origin, vec![Some(1), Some(4)]);
    }

    #[test]
    fn zero_bound_is_an_error() {
        let (x, y) = fixture();
        assert!(matches!(
            init_synthetic(&x, &y, &identity_classifier(), 0.0),
            Err(Error::Dataset(_))
        ));
        assert!(init_synthetic(&x, &y, &identity_classifier(), 1.5).is_err());
    }

    #[test]
    fn csv_export() {
        let (x, y) = fixture();
        let s = init_synthetic(&x, &y, &identity_classifier(), 0.5).unwrap();
        let dir =
            tempfile::tempdir_in(concat!(env!("CARGO_MANIFEST_DIR"), "/../../target")).unwrap();
        let path = dir.path().join("z.csv");
        s.write_csv(&path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "z0,label,origin\n-1,1,1\n-3,1,4\n"
        );
    }
}
