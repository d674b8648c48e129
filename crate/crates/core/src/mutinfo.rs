//! Plug-in entropy and mutual-information estimates on discrete data, in bits.
//!
//! The per-cell terms of a joint table are summed in ascending value order,
//! which makes `I(a; b)` and `I(b; a)` bit-identical and lets the dense fast
//! path used for the MI matrix reproduce the generic functions exactly.

use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{BinConfig, Class, DiscretizedDataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn frequencies<D: Copy + Ord>(xs: &[D]) -> BTreeMap<D, usize> {
    let mut m = BTreeMap::new();
    for &x in xs {
        *m.entry(x).or_insert(0) += 1;
    }
    m
}

fn entropy_of_counts<T: Scalar>(counts: impl Iterator<Item = usize>, n: usize) -> T {
    let n = T::of_usize(n);
    let mut h = T::zero();
    for c in counts.filter(|&c| c > 0) {
        let p = T::of_usize(c) / n;
        h -= p * p.log2();
    }
    h
}

/// Shannon entropy `-sum p log2 p` of the empirical distribution.
pub fn entropy<T: Scalar, D: Copy + Ord>(column: &[D]) -> Result<T> {
    if column.is_empty() {
        return Err(Error::Empty("entropy of an empty sequence"));
    }
    Ok(entropy_of_counts(frequencies(column).into_values(), column.len()))
}

/// `sum p(x,y) log2 [p(x,y) / (p(x) p(y))]` over the observed joint table.
/// Empty cells contribute nothing.
pub fn mutual_information<T: Scalar, A: Copy + Ord, B: Copy + Ord>(a: &[A], b: &[B]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "sequences of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty("mutual information of empty sequences"));
    }
    let fa = frequencies(a);
    let fb = frequencies(b);
    let joint = frequencies(&a.iter().copied().zip(b.iter().copied()).collect::<Vec<_>>());
    let n = a.len();
    Ok(mi_from_joint(
        joint.into_iter().map(|((x, y), c)| (fa[&x], fb[&y], c)),
        n,
    ))
}

fn mi_from_joint<T: Scalar>(cells: impl Iterator<Item = (usize, usize, usize)>, n: usize) -> T {
    let nt = T::of_usize(n);
    let mut terms: Vec<T> = cells
        .map(|(ca, cb, cab)| {
            let p = T::of_usize(cab) / nt;
            let ratio = T::of_usize(cab) * nt / (T::of_usize(ca) * T::of_usize(cb));
            p * ratio.log2()
        })
        .collect();
    // summing in value order makes the result independent of argument order
    terms.sort_by(T::total_cmp_scalar);
    terms.into_iter().fold(T::zero(), |acc, t| acc + t)
}

/// Dense-table MI for compact codes `0..ka` and `0..kb`.
fn mi_codes<T: Scalar>(a: &[u32], ka: usize, b: &[u32], kb: usize) -> T {
    let n = a.len();
    let mut joint = vec![0usize; ka * kb];
    let mut ma = vec![0usize; ka];
    let mut mb = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x as usize * kb + y as usize] += 1;
        ma[x as usize] += 1;
        mb[y as usize] += 1;
    }
    let cells = (0..ka).flat_map(|x| (0..kb).map(move |y| (x, y)));
    mi_from_joint(
        cells
            .map(|(x, y)| (ma[x], mb[y], joint[x * kb + y]))
            .filter(|&(_, _, c)| c > 0),
        n,
    )
}

fn check_labels<T>(dd: &DiscretizedDataset<T>, labels: &[Class]) -> Result<()>
where
    T: Scalar,
{
    if dd.n_samples() != labels.len() {
        return Err(Error::Shape(format!(
            "{} samples but {} labels",
            dd.n_samples(),
            labels.len()
        )));
    }
    Ok(())
}

fn label_codes(labels: &[Class]) -> (Vec<u32>, usize) {
    // compact: a single-class label vector gets code 0 only
    let present: Vec<Class> = frequencies(labels).into_keys().collect();
    let codes = labels
        .iter()
        .map(|l| present.binary_search(l).unwrap() as u32)
        .collect();
    (codes, present.len())
}

/// `I(x_i; c)` for every feature.
pub fn class_relevance_vector<T: Scalar>(dd: &DiscretizedDataset<T>, labels: &[Class]) -> Result<Vec<T>> {
    check_labels(dd, labels)?;
    let (codes, k) = label_codes(labels);
    let counts = dd.bin_count_per_feature();
    Ok((0..dd.n_features())
        .into_par_iter()
        .map(|j| mi_codes(&dd.feature_bins(j), counts[j], &codes, k))
        .collect())
}

/// Cached pairwise feature-feature and feature-class mutual information.
#[derive(Debug, Clone, PartialEq)]
pub struct MiMatrix<T> {
    pairwise: Array2<T>,
    class_relevance: Vec<T>,
    bin_config: Option<BinConfig>,
}

impl<T: Scalar> MiMatrix<T> {
    /// Assembles a matrix from precomputed values; `pairwise` must be square,
    /// exactly symmetric and match the relevance length.
    pub fn from_parts(pairwise: Array2<T>, class_relevance: Vec<T>) -> Result<Self> {
        let n = class_relevance.len();
        if pairwise.dim() != (n, n) {
            return Err(Error::Shape(format!(
                "pairwise matrix {:?} for {n} features",
                pairwise.dim()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if pairwise[[i, j]] != pairwise[[j, i]] {
                    return Err(Error::Shape(format!("pairwise matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        if pairwise.iter().chain(&class_relevance).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite mutual information".into()));
        }
        Ok(MiMatrix {
            pairwise,
            class_relevance,
            bin_config: None,
        })
    }

    pub fn n_features(&self) -> usize {
        self.class_relevance.len()
    }

    pub fn pairwise(&self) -> &Array2<T> {
        &self.pairwise
    }

    /// `I(x_i; x_j)`.
    pub fn pair(&self, i: usize, j: usize) -> T {
        self.pairwise[[i, j]]
    }

    pub fn class_relevance(&self) -> &[T] {
        &self.class_relevance
    }

    pub fn bin_config(&self) -> Option<&BinConfig> {
        self.bin_config.as_ref()
    }

    /// Audit form with negative round-off clamped to zero.
    pub fn report(&self, feature_names: &[String]) -> Result<MiReport<T>> {
        if feature_names.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "{} names for {} features",
                feature_names.len(),
                self.n_features()
            )));
        }
        let clamp = |v: T| v.max(T::zero());
        Ok(MiReport {
            feature_names: feature_names.to_vec(),
            pairwise: self
                .pairwise
                .rows()
                .into_iter()
                .map(|r| r.iter().copied().map(clamp).collect())
                .collect(),
            class_relevance: self.class_relevance.iter().copied().map(clamp).collect(),
            bin_config: self.bin_config.clone(),
        })
    }
}

/// JSON dump of an [`MiMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MiReport<T> {
    pub feature_names: Vec<String>,
    pub pairwise: Vec<Vec<T>>,
    pub class_relevance: Vec<T>,
    pub bin_config: Option<BinConfig>,
}

/// Builds the full matrix once; downstream rankings for every weight reuse it.
/// Only the upper triangle is computed and then mirrored.
pub fn pairwise_mi_matrix<T: Scalar>(dd: &DiscretizedDataset<T>, labels: &[Class]) -> Result<MiMatrix<T>> {
    check_labels(dd, labels)?;
    let n = dd.n_features();
    let counts = dd.bin_count_per_feature();
    let columns: Vec<Vec<u32>> = (0..n).map(|j| dd.feature_bins(j)).collect();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| mi_codes(&columns[i], counts[i], &columns[j], counts[j]))
                .collect()
        })
        .collect();
    let mut pairwise = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            pairwise[[i, i + off]] = v;
            pairwise[[i + off, i]] = v;
        }
    }
    Ok(MiMatrix {
        pairwise,
        class_relevance: class_relevance_vector(dd, labels)?,
        bin_config: Some(dd.bin_config()),
    })
}
