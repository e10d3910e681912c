//! Principal component analysis of 4-component moment descriptors.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues above this negative threshold are clamped to zero.
const EIGEN_CLAMP: f64 = -1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: [f64; 4],
    /// Rows are principal axes, ordered by descending eigenvalue. Entry
    /// `components[k][c]` is the loading of descriptor component `c` on axis `k`.
    pub components: [[f64; 4]; 4],
    pub eigenvalues: [f64; 4],
}

impl PcaModel {
    /// Fits on the sample covariance (divisor `n - 1`).
    ///
    /// Inputs are sorted before any reduction, so the result does not depend
    /// on the order of `vectors`.
    pub fn fit(vectors: &[[f64; 4]]) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "PCA needs at least 2 vectors, got {}",
                vectors.len()
            )));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("PCA input contains non-finite values".into()));
        }
        let mut sorted = vectors.to_vec();
        sorted.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });

        let n = sorted.len() as f64;
        let mut mean = [0.0; 4];
        for v in &sorted {
            for c in 0..4 {
                mean[c] += v[c];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut cov = Matrix4::<f64>::zeros();
        for v in &sorted {
            let d = Vector4::from_fn(|c, _| v[c] - mean[c]);
            cov += d * d.transpose();
        }
        cov /= n - 1.0;

        let eig = cov.symmetric_eigen();
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut components = [[0.0; 4]; 4];
        let mut eigenvalues = [0.0; 4];
        for (k, &col) in order.iter().enumerate() {
            let lambda = eig.eigenvalues[col];
            eigenvalues[k] = if lambda < EIGEN_CLAMP { lambda } else { lambda.max(0.0) };
            let axis = eig.eigenvectors.column(col);
            let norm = axis.norm();
            components[k] = fix_sign([0, 1, 2, 3].map(|c| axis[c] / norm));
        }
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn explained_variance_ratio(&self) -> [f64; 4] {
        let total: f64 = self.eigenvalues.iter().sum();
        if total > 0.0 {
            self.eigenvalues.map(|l| l / total)
        } else {
            [0.0; 4]
        }
    }

    /// Scores of `v` on all four axes.
    pub fn project(&self, v: [f64; 4]) -> [f64; 4] {
        let d = [0, 1, 2, 3].map(|c| v[c] - self.mean[c]);
        self.components.map(|row| row.iter().zip(&d).map(|(a, b)| a * b).sum())
    }

    pub fn reconstruct(&self, scores: [f64; 4]) -> [f64; 4] {
        let mut v = self.mean;
        for (row, s) in self.components.iter().zip(scores) {
            for c in 0..4 {
                v[c] += row[c] * s;
            }
        }
        v
    }
}

/// `PcaModel::fit`.
pub fn fit_pca(vectors: &[[f64; 4]]) -> Result<PcaModel> {
    PcaModel::fit(vectors)
}

/// Flips `axis` so its largest-magnitude entry is positive; ties go to the
/// lowest index.
pub fn fix_sign(axis: [f64; 4]) -> [f64; 4] {
    let mut best = 0;
    for c in 1..4 {
        if axis[c].abs() > axis[best].abs() {
            best = c;
        }
    }
    if axis[best] < 0.0 {
        axis.map(|x| -x)
    } else {
        axis
    }
}
