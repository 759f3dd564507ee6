use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::raw::{ColumnKind, Field, RawDataset};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Encoding of one raw column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeaturePlan {
    /// z-score with statistics fitted on the training rows.
    Continuous { column: usize, mean: f64, std: f64 },
    /// One indicator per value, in value-set order.
    OneHot { column: usize, values: Vec<String> },
}

impl FeaturePlan {
    fn width(&self) -> usize {
        match self {
            FeaturePlan::Continuous { .. } => 1,
            FeaturePlan::OneHot { values, .. } => values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// encoded_width x k, columns are unit principal directions.
    pub basis: Tensor,
    pub explained_variance: Vec<f64>,
}

/// Fitted preprocessing, re-applicable to any rows of the same schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub features: Vec<FeaturePlan>,
    pub pca: Option<Pca>,
}

#[derive(Debug, Clone)]
pub struct ProcessedDataset {
    pub name: String,
    /// All rows of the raw dataset, transformed.
    pub x: Tensor,
    pub y: Vec<u8>,
    pub transform: Transform,
    pub warnings: Vec<String>,
}

impl ProcessedDataset {
    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Feature rows and an n x 1 label column for `idx`.
    pub fn select(&self, idx: &[usize]) -> (Tensor, Tensor) {
        let y = Tensor::column(idx.iter().map(|&i| f64::from(self.y[i])).collect());
        (self.x.select_rows(idx), y)
    }
}

impl Transform {
    pub fn encoded_width(&self) -> usize {
        self.features.iter().map(FeaturePlan::width).sum()
    }

    pub fn output_width(&self) -> usize {
        self.pca
            .as_ref()
            .map_or_else(|| self.encoded_width(), |p| p.basis.cols())
    }

    /// Fits encoders on `fit_on` and, when `pca_dim` is given, a projection.
    pub fn fit(
        raw: &RawDataset,
        fit_on: &[usize],
        pca_dim: Option<usize>,
    ) -> Result<(Transform, Vec<String>)> {
        if fit_on.is_empty() {
            return Err(Error::Dataset(
                "cannot fit preprocessing on zero rows".into(),
            ));
        }
        let mut warnings = Vec::new();
        let mut features = Vec::with_capacity(raw.columns.len());
        for (c, col) in raw.columns.iter().enumerate() {
            match &col.kind {
                ColumnKind::Continuous => {
                    let vals: Vec<f64> = fit_on
                        .iter()
                        .map(|&i| numeric(&raw.rows[i][c]))
                        .collect::<Result<_>>()?;
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    let mut std = var.sqrt();
                    if !(std > 1e-12) {
                        warnings.push(format!(
                            "column '{}' has zero variance on the fit rows",
                            col.name
                        ));
                        std = 1.0;
                    }
                    features.push(FeaturePlan::Continuous {
                        column: c,
                        mean,
                        std,
                    });
                }
                ColumnKind::Categorical(declared) => {
                    let values = match declared {
                        Some(v) => v.clone(),
                        None => {
                            let mut seen: Vec<String> = Vec::new();
                            for &i in fit_on {
                                let t = category(&raw.rows[i][c])?;
                                if !seen.iter().any(|s| s == t) {
                                    seen.push(t.to_string());
                                }
                            }
                            seen.sort();
                            seen
                        }
                    };
                    features.push(FeaturePlan::OneHot { column: c, values });
                }
            }
        }
        let mut transform = Transform {
            features,
            pca: None,
        };
        if let Some(k) = pca_dim {
            let width = transform.encoded_width();
            if k == 0 || k > width {
                return Err(Error::InvalidArgument(format!(
                    "pca dimension {k} must be in 1..={width}"
                )));
            }
            let (encoded, w) = transform.encode(raw, fit_on);
            warnings.extend(w);
            transform.pca = Some(fit_pca(&encoded, k));
        }
        Ok((transform, warnings))
    }

    /// Encoded, pre-projection rows.
    fn encode(&self, raw: &RawDataset, rows: &[usize]) -> (Tensor, Vec<String>) {
        let width = self.encoded_width();
        let mut out = Tensor::zeros(&[rows.len(), width]);
        let mut warnings = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let dst = out.row_mut(r);
            let mut offset = 0;
            for plan in &self.features {
                match plan {
                    FeaturePlan::Continuous { column, mean, std } => {
                        if let Field::Num(v) = raw.rows[i][*column] {
                            dst[offset] = (v - mean) / std;
                        }
                    }
                    FeaturePlan::OneHot { column, values } => {
                        if let Field::Cat(t) = &raw.rows[i][*column] {
                            match values.iter().position(|v| v == t) {
                                Some(p) => dst[offset + p] = 1.0,
                                None => warnings.push(format!("row {i}: unseen category '{t}'")),
                            }
                        }
                    }
                }
                offset += plan.width();
            }
        }
        (out, warnings)
    }

    /// Transforms `rows` of `raw`. Each row is computed independently, so
    /// any row gets the same bits regardless of which rows accompany it.
    pub fn apply(&self, raw: &RawDataset, rows: &[usize]) -> (Tensor, Vec<String>) {
        let (encoded, warnings) = self.encode(raw, rows);
        match &self.pca {
            None => (encoded, warnings),
            Some(pca) => (project(&encoded, pca), warnings),
        }
    }
}

fn numeric(f: &Field) -> Result<f64> {
    match f {
        Field::Num(v) => Ok(*v),
        Field::Cat(t) => Err(Error::Dataset(format!("expected a number, found '{t}'"))),
    }
}

fn category(f: &Field) -> Result<&str> {
    match f {
        Field::Cat(t) => Ok(t),
        Field::Num(v) => Err(Error::Dataset(format!("expected a category, found {v}"))),
    }
}

fn fit_pca(x: &Tensor, k: usize) -> Pca {
    let (n, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for r in 0..n {
        let row = x.row(r);
        for a in 0..d {
            let da = row[a] - mean[a];
            if da == 0.0 {
                continue;
            }
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut basis = Tensor::zeros(&[d, k]);
    let mut explained = Vec::with_capacity(k);
    for (j, &c) in order.iter().take(k).enumerate() {
        let col = eig.eigenvectors.column(c);
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = (0..d)
            .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            basis.data_mut()[i * k + j] = sign * col[i];
        }
        explained.push(eig.eigenvalues[c].max(0.0));
    }
    Pca {
        mean,
        basis,
        explained_variance: explained,
    }
}

fn project(x: &Tensor, pca: &Pca) -> Tensor {
    let (n, d) = (x.rows(), x.cols());
    let mut centred = x.clone();
    for r in 0..n {
        for (v, m) in centred.row_mut(r).iter_mut().zip(&pca.mean) {
            *v -= m;
        }
    }
    debug_assert_eq!(d, pca.basis.rows());
    centred
        .matmul(&pca.basis)
        .expect("pca basis matches encoded width")
}

/// Fits on `fit_on` and transforms every row of `raw`.
pub fn preprocess(
    raw: &RawDataset,
    fit_on: &[usize],
    pca_dim: Option<usize>,
) -> Result<ProcessedDataset> {
    let (transform, mut warnings) = Transform::fit(raw, fit_on, pca_dim)?;
    let all: Vec<usize> = (0..raw.len()).collect();
    let (x, w) = transform.apply(raw, &all);
    warnings.extend(w);
    for w in &warnings {
        log::warn!("{}: {w}", raw.name);
    }
    Ok(ProcessedDataset {
        name: raw.name.clone(),
        x,
        y: raw.labels.clone(),
        transform,
        warnings,
    })
}
