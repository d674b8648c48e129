use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-feature mean and population standard deviation of a fitted z-score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Normalization<T> {
    pub mean: Vec<T>,
    pub std_dev: Vec<T>,
}

impl<T: Scalar> Normalization<T> {
    /// Fits on the rows of `values`.
    pub fn fit(values: &Array2<T>) -> Self {
        let n = T::of_usize(values.nrows().max(1));
        let mut mean = Vec::with_capacity(values.ncols());
        let mut std_dev = Vec::with_capacity(values.ncols());
        for col in values.axis_iter(Axis(1)) {
            let m = col.iter().copied().sum::<T>() / n;
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n;
            mean.push(m);
            std_dev.push(var.sqrt());
        }
        Normalization { mean, std_dev }
    }

    /// Whether feature `j` is constant on the fitting data; such features map to zero.
    pub fn is_constant(&self, j: usize) -> bool {
        let scale = self.mean[j].abs().max(T::one());
        self.std_dev[j] <= scale * T::epsilon() * T::of(16.0)
    }

    pub fn apply_matrix(&self, values: &Array2<T>) -> Result<Array2<T>> {
        if values.ncols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "normalization fitted on {} features, got {}",
                self.mean.len(),
                values.ncols()
            )));
        }
        let mut out = values.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            if self.is_constant(j) {
                col.fill(T::zero());
            } else {
                let (m, s) = (self.mean[j], self.std_dev[j]);
                col.mapv_inplace(|v| (v - m) / s);
            }
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &[T]) -> Result<Array1<T>> {
        if row.len() != self.mean.len() {
            return Err(Error::Shape(format!(
                "normalization fitted on {} features, got {}",
                self.mean.len(),
                row.len()
            )));
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.is_constant(j) {
                    T::zero()
                } else {
                    (v - self.mean[j]) / self.std_dev[j]
                }
            })
            .collect())
    }

    pub fn apply(&self, d: &Dataset<T>) -> Result<Dataset<T>> {
        Ok(d.with_values(self.apply_matrix(d.values())?))
    }
}

/// Standardizes every feature to zero mean and unit population variance.
/// Constant features become all-zero columns.
pub fn zscore_normalize<T: Scalar>(d: &Dataset<T>) -> (Dataset<T>, Normalization<T>) {
    let norm = Normalization::fit(d.values());
    let out = norm
        .apply(d)
        .expect("normalization fitted on the same dataset");
    (out, norm)
}
