//! Principal-component baseline: project onto the fewest leading components
//! that retain a requested share of the variance.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Normalization};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_VARIANCE: f64 = 0.95;

/// A fitted projection. Inputs are centered by `mean_vector`, divided by
/// `scale_vector` (all ones when fitted without standardization), then
/// multiplied by `component_matrix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PcaProjection<T> {
    pub feature_names: Vec<String>,
    pub mean_vector: Vec<T>,
    pub scale_vector: Vec<T>,
    pub standardized: bool,
    /// `n_features x retained_k`, orthonormal columns.
    pub component_matrix: Array2<T>,
    /// Variance share of each retained component, non-increasing.
    pub explained_ratio: Vec<T>,
    pub retained_k: usize,
    pub variance_threshold: T,
    /// Every eigenvalue of the covariance matrix, descending.
    pub eigenvalues: Vec<T>,
}

/// Standardizes each feature, then fits.
pub fn pca_fit<T: Scalar>(d: &Dataset<T>, variance_threshold: T) -> Result<PcaProjection<T>> {
    pca_fit_with(d, variance_threshold, true)
}

pub fn pca_fit_with<T: Scalar>(d: &Dataset<T>, variance_threshold: T, standardize: bool) -> Result<PcaProjection<T>> {
    if !(variance_threshold > T::zero() && variance_threshold <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "variance threshold must lie in (0, 1], got {variance_threshold}"
        )));
    }
    let n = d.n_samples();
    if n < 2 {
        return Err(Error::Shape(format!("PCA needs at least 2 samples, got {n}")));
    }
    let p = d.n_features();
    let norm = Normalization::fit(d.values());
    let scale: Vec<T> = (0..p)
        .map(|j| {
            if standardize && !norm.is_constant(j) {
                norm.std_dev[j]
            } else {
                T::one()
            }
        })
        .collect();
    let mut x = d.values().clone();
    for ((_, j), v) in x.indexed_iter_mut() {
        *v = (*v - norm.mean[j]) / scale[j];
    }
    let cov = x.t().dot(&x).mapv(|v| v / T::of_usize(n - 1));
    let (values, vectors) = symmetric_eigen(cov);
    let eigenvalues: Vec<T> = values.iter().map(|&v| v.max(T::zero())).collect();
    let total: T = eigenvalues.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateData);
    }

    let slack = T::epsilon() * T::of(64.0);
    let mut cum = T::zero();
    let mut k = 0;
    for &v in &eigenvalues {
        cum += v / total;
        k += 1;
        if cum + slack >= variance_threshold {
            break;
        }
    }

    let mut components = vectors.slice(ndarray::s![.., ..k]).to_owned();
    for mut col in components.columns_mut() {
        let mut lead = T::zero();
        for &v in col.iter() {
            if v.abs() > lead.abs() {
                lead = v;
            }
        }
        if lead < T::zero() {
            col.mapv_inplace(|v| -v);
        }
    }
    Ok(PcaProjection {
        feature_names: d.feature_names().to_vec(),
        mean_vector: norm.mean,
        scale_vector: scale,
        standardized: standardize,
        component_matrix: components,
        explained_ratio: eigenvalues[..k].iter().map(|&v| v / total).collect(),
        retained_k: k,
        variance_threshold,
        eigenvalues,
    })
}

impl<T: Scalar> PcaProjection<T> {
    pub fn cumulative_ratio(&self) -> T {
        self.explained_ratio.iter().copied().sum()
    }

    pub fn component_names(&self) -> Vec<String> {
        (1..=self.retained_k).map(|i| format!("PC{i}")).collect()
    }

    fn centered(&self, x: &Array2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.mean_vector.len() {
            return Err(Error::Shape(format!(
                "projection fitted on {} features, got {}",
                self.mean_vector.len(),
                x.ncols()
            )));
        }
        let mut c = x.clone();
        for ((_, j), v) in c.indexed_iter_mut() {
            *v = (*v - self.mean_vector[j]) / self.scale_vector[j];
        }
        Ok(c)
    }

    /// Component scores of each row.
    pub fn project(&self, x: &Array2<T>) -> Result<Array2<T>> {
        Ok(self.centered(x)?.dot(&self.component_matrix))
    }

    pub fn project_row(&self, row: &[T]) -> Result<Array1<T>> {
        let x = Array2::from_shape_vec((1, row.len()), row.to_vec()).expect("one row");
        Ok(self.project(&x)?.index_axis(Axis(0), 0).to_owned())
    }

    /// Maps scores back to the input space.
    pub fn reconstruct(&self, scores: &Array2<T>) -> Array2<T> {
        let mut x = scores.dot(&self.component_matrix.t());
        for ((_, j), v) in x.indexed_iter_mut() {
            *v = *v * self.scale_vector[j] + self.mean_vector[j];
        }
        x
    }
}

/// Replaces every feature with the retained component scores `PC1..PCk`.
pub fn pca_transform<T: Scalar>(p: &PcaProjection<T>, d: &Dataset<T>) -> Result<Dataset<T>> {
    if d.feature_names() != p.feature_names.as_slice() {
        return Err(Error::Shape("dataset features differ from the fitted projection".into()));
    }
    let scores = p.project(d.values())?;
    Dataset::new_unchecked_classes(scores, d.labels().to_vec(), p.component_names())
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues in descending order and the matching eigenvectors as columns.
pub(crate) fn symmetric_eigen<T: Scalar>(mut a: Array2<T>) -> (Vec<T>, Array2<T>) {
    let n = a.nrows();
    let mut v = Array2::<T>::eye(n);
    let two = T::of(2.0);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        let diag: T = (0..n).map(|i| a[[i, i]] * a[[i, i]]).sum();
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| T::total_cmp_scalar(&a[[j, j]], &a[[i, i]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = v.select(Axis(1), &order);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Class;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn dataset(values: Array2<f64>) -> Dataset<f64> {
        let n = values.nrows();
        let labels = (0..n)
            .map(|i| if i % 2 == 0 { Class::Stable } else { Class::Unstable })
            .collect();
        let names = (0..values.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new(values, labels, names).unwrap()
    }

    fn gaussian(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn eigen_of_known_matrix() {
        let a: Array2<f64> = ndarray::array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(a.clone());
        assert!((vals[0] - 3.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        let back = vecs.dot(&Array2::from_diag(&Array1::from(vals))).dot(&vecs.t());
        assert!((back - a).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn line_in_3d_is_rank_one() {
        let t = gaussian(40, 1, 3);
        let x = Array2::from_shape_fn((40, 3), |(i, j)| t[[i, 0]] * [1.0, -2.0, 0.5][j] + j as f64);
        let p = pca_fit(&dataset(x), 0.95).unwrap();
        assert_eq!(p.retained_k, 1);
        assert!((p.explained_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_needs_both() {
        let p = pca_fit(&dataset(gaussian(500, 2, 11)), 0.95).unwrap();
        assert_eq!(p.retained_k, 2);
    }

    #[test]
    fn full_threshold_keeps_rank() {
        let p = pca_fit(&dataset(gaussian(30, 5, 2)), 1.0).unwrap();
        assert_eq!(p.retained_k, 5);
        let p = pca_fit(&dataset(gaussian(4, 6, 2)), 1.0).unwrap();
        assert_eq!(p.retained_k, 3);
    }

    #[test]
    fn transform_properties() {
        let mut x = gaussian(60, 4, 5);
        for i in 0..60 {
            x[[i, 1]] = x[[i, 0]] * 0.9 + x[[i, 1]] * 0.1;
        }
        let d = dataset(x);
        let p = pca_fit(&d, 0.9).unwrap();
        let t = pca_transform(&p, &d).unwrap();
        assert_eq!(t.feature_names()[0], "PC1");
        assert_eq!(t.n_features(), p.retained_k);
        for m in t.values().mean_axis(Axis(0)).unwrap() {
            assert!(m.abs() < 1e-9);
        }
        let row = p.project_row(d.values().row(7).as_slice().unwrap()).unwrap();
        for k in 0..p.retained_k {
            assert!((row[k] - t.values()[[7, k]]).abs() < 1e-12);
        }
        let g = p.component_matrix.t().dot(&p.component_matrix);
        assert!((g - Array2::<f64>::eye(p.retained_k)).iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn sign_convention() {
        let p = pca_fit(&dataset(gaussian(50, 3, 8)), 1.0).unwrap();
        for col in p.component_matrix.columns() {
            let lead = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn errors() {
        let d = dataset(Array2::from_elem((6, 2), 1.5));
        assert!(matches!(pca_fit(&d, 0.95), Err(Error::DegenerateData)));
        let d = dataset(gaussian(10, 2, 1));
        assert!(pca_fit(&d, 0.0).is_err());
        assert!(pca_fit(&d, 1.5).is_err());
        let p = pca_fit(&d, 0.95).unwrap();
        let other = dataset(gaussian(10, 3, 1));
        assert!(pca_transform(&p, &other).is_err());
    }

    #[test]
    fn f32_fit() {
        let x = gaussian(40, 3, 4).mapv(|v| v as f32);
        let labels = (0..40).map(|i| if i % 2 == 0 { Class::Stable } else { Class::Unstable }).collect();
        let d = Dataset::new(x, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let p = pca_fit(&d, 0.95f32).unwrap();
        assert!(p.cumulative_ratio() >= 0.95 - 1e-5);
    }
}
