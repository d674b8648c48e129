use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{class_name, Class, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fold index of every sample for stratified k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of_sample: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_sample.len())
            .filter(|&i| self.fold_of_sample[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_sample.len())
            .filter(|&i| self.fold_of_sample[i] != fold)
            .collect()
    }

    pub fn n_samples(&self) -> usize {
        self.fold_of_sample.len()
    }
}

/// Shuffles each class with a seeded ChaCha8 stream, lays the classes end to
/// end and deals samples to folds round-robin. Dealing continues across the
/// class boundary, which keeps both per-class and total fold sizes within one.
pub fn stratified_kfold<T: Scalar>(d: &Dataset<T>, k: usize, seed: u64) -> Result<FoldAssignment> {
    stratified_kfold_labels(d.labels(), k, seed)
}

pub(crate) fn stratified_kfold_labels(labels: &[Class], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dealt = Vec::with_capacity(labels.len());
    for class in [Class::Stable, Class::Unstable] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::ClassTooSmall {
                class: class_name(class),
                count: idx.len(),
                needed: k,
            });
        }
        idx.shuffle(&mut rng);
        dealt.extend(idx);
    }
    let mut fold_of_sample = vec![0; labels.len()];
    for (pos, i) in dealt.into_iter().enumerate() {
        fold_of_sample[i] = pos % k;
    }
    Ok(FoldAssignment {
        fold_of_sample,
        k,
        seed,
    })
}
