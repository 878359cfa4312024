//! Principal component analysis of equal-length vectors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    mean: Vec<f64>,
    /// `k` unit-norm principal axes, strongest first.
    components: Vec<Vec<f64>>,
    singular_values: Vec<f64>,
}

impl Pca {
    /// Fits at most `n_components` axes (capped by the number of samples and
    /// the dimension). Each axis is signed so its largest-magnitude entry is
    /// positive.
    pub fn fit(samples: &[Vec<f64>], n_components: usize) -> Result<Self> {
        let n = samples.len();
        let d = samples.first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(Error::invalid("PCA needs at least one non-empty sample"));
        }
        if samples.iter().any(|s| s.len() != d) {
            return Err(Error::invalid("PCA samples must share a length"));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("PCA samples must be finite"));
        }
        let mut mean = vec![0.0; d];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered = DMatrix::from_fn(n, d, |i, j| samples[i][j] - mean[j]);
        let svd = centered.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| Error::NonFinite {
            context: "PCA decomposition".into(),
        })?;

        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
        let k = n_components.min(order.len());
        let mut components = Vec::with_capacity(k);
        let mut singular_values = Vec::with_capacity(k);
        for &r in &order[..k] {
            let mut axis: Vec<f64> = v_t.row(r).iter().copied().collect();
            let pivot = axis.iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if pivot < 0.0 {
                axis.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(axis);
            singular_values.push(svd.singular_values[r]);
        }
        Ok(Pca {
            mean,
            components,
            singular_values,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::Shape {
                op: "pca_transform",
                shapes: vec![vec![x.len()], vec![self.mean.len()]],
            });
        }
        Ok(self
            .components
            .iter()
            .map(|axis| axis.iter().zip(x).zip(&self.mean).map(|((a, v), m)| a * (v - m)).sum())
            .collect())
    }

    pub fn inverse_transform(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.components.len() {
            return Err(Error::Shape {
                op: "pca_inverse",
                shapes: vec![vec![coeffs.len()], vec![self.components.len()]],
            });
        }
        let mut out = self.mean.clone();
        for (c, axis) in coeffs.iter().zip(&self.components) {
            for (o, a) in out.iter_mut().zip(axis) {
                *o += c * a;
            }
        }
        Ok(out)
    }
}
