//! Sample matrices with binary stability labels, plus the preprocessing that
//! feeds the estimators: CSV ingestion, z-scoring, quantile binning, fold
//! assignment and synthetic data.

mod catalog;
mod csv_io;
mod discretize;
mod folds;
mod normalize;
mod synthetic;

pub use catalog::{tz_catalog, CatalogEntry, FeatureCatalog, Snapshot};
pub use csv_io::{load_csv, load_csv_with, write_csv, LabelValues};
pub use discretize::{discretize_equal_frequency, BinConfig, DiscretizedDataset, DEFAULT_BINS};
pub use folds::{stratified_kfold, FoldAssignment};
pub use normalize::{zscore_normalize, Normalization};
pub use synthetic::{generate_synthetic, RedundantSpec, SyntheticRecipe};

use std::collections::HashSet;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary target class. Stable systems are class 0, unstable ones class 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Stable,
    Unstable,
}

impl Class {
    pub fn index(self) -> usize {
        match self {
            Class::Stable => 0,
            Class::Unstable => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Class> {
        match i {
            0 => Some(Class::Stable),
            1 => Some(Class::Unstable),
            _ => None,
        }
    }

    /// `-1` for stable, `+1` for unstable.
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Class::Stable => -T::one(),
            Class::Unstable => T::one(),
        }
    }

    pub fn from_score<T: Scalar>(score: T) -> Class {
        if score >= T::zero() {
            Class::Unstable
        } else {
            Class::Stable
        }
    }
}

/// Per-class sample counts, indexed by [`Class::index`].
pub fn class_counts(labels: &[Class]) -> [usize; 2] {
    let mut counts = [0usize; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Real-valued samples with binary labels and unique feature names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    values: Array2<T>,
    labels: Vec<Class>,
    feature_names: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset, enforcing every invariant: finite values, unique
    /// names, two classes with at least two samples each.
    pub fn new(values: Array2<T>, labels: Vec<Class>, feature_names: Vec<String>) -> Result<Self> {
        let d = Self::new_unchecked_classes(values, labels, feature_names)?;
        let counts = class_counts(&d.labels);
        if counts[0] == 0 || counts[1] == 0 {
            return Err(Error::SingleClass);
        }
        for (class, &count) in [Class::Stable, Class::Unstable].iter().zip(&counts) {
            if count < 2 {
                return Err(Error::ClassTooSmall {
                    class: class_name(*class),
                    count,
                    needed: 2,
                });
            }
        }
        Ok(d)
    }

    /// Like [`Dataset::new`] but without the class-balance checks; used for
    /// held-out partitions that may legitimately hold few samples.
    pub(crate) fn new_unchecked_classes(
        values: Array2<T>,
        labels: Vec<Class>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if values.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        if values.ncols() != feature_names.len() {
            return Err(Error::Shape(format!(
                "{} columns but {} feature names",
                values.ncols(),
                feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                row,
                column: feature_names[col].clone(),
            });
        }
        Ok(Dataset {
            values,
            labels,
            feature_names,
        })
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, T> {
        self.values.column(j)
    }

    pub fn class_counts(&self) -> [usize; 2] {
        class_counts(&self.labels)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Resolves feature names to column indices, preserving the given order.
    pub fn resolve_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.feature_index(n.as_ref())
                    .ok_or_else(|| Error::UnknownFeature {
                        name: n.as_ref().to_string(),
                        valid: self.feature_names.join(","),
                    })
            })
            .collect()
    }

    /// Restricts the dataset to the listed columns, in the listed order.
    pub fn select_features(&self, subset: &[usize]) -> Result<Self> {
        if let Some(&bad) = subset.iter().find(|&&j| j >= self.n_features()) {
            return Err(Error::Shape(format!(
                "feature index {bad} out of range for {} features",
                self.n_features()
            )));
        }
        Ok(Dataset {
            values: self.values.select(Axis(1), subset),
            labels: self.labels.clone(),
            feature_names: subset.iter().map(|&j| self.feature_names[j].clone()).collect(),
        })
    }

    /// Restricts the dataset to the listed rows. Class-balance invariants are
    /// not re-checked, so the result may be a small validation partition.
    pub fn select_samples(&self, rows: &[usize]) -> Self {
        Dataset {
            values: self.values.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Replaces the value matrix, keeping labels and names.
    pub(crate) fn with_values(&self, values: Array2<T>) -> Self {
        debug_assert_eq!(values.dim(), self.values.dim());
        Dataset {
            values,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same schema (names in the same order).
    pub fn same_schema(&self, other: &Self) -> bool {
        self.feature_names == other.feature_names
    }

    /// Converts to another scalar precision.
    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            values: self.values.mapv(|v| U::of(v.as_f64())),
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

pub(crate) fn class_name(class: Class) -> &'static str {
    match class {
        Class::Stable => "stable",
        Class::Unstable => "unstable",
    }
}

/// Stratified random train/test split; `test_fraction` of each class goes to
/// the test partition (rounded to nearest).
pub fn train_test_split<T: Scalar>(
    d: &Dataset<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Class::Stable, Class::Unstable] {
        let mut idx: Vec<usize> = (0..d.n_samples()).filter(|&i| d.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    let train = d.select_samples(&train);
    let test = d.select_samples(&test);
    // the training half must still satisfy the full invariants
    let train = Dataset::new(train.values, train.labels, train.feature_names)
        .map_err(|e| e.context("training partition"))?;
    Ok((train, test))
}
