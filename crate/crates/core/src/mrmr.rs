//! Relevance, redundancy and the weighted max-relevance/min-redundancy
//! criterion, with the greedy incremental search that turns one weight into a
//! chain of nested candidate subsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mutinfo::MiMatrix;
use crate::scalar::Scalar;

/// Weight `alpha` trading relevance (`alpha`) against redundancy (`1 - alpha`).
/// `alpha = 0.5` is the unweighted criterion scaled by one half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MrmrConfig<T> {
    alpha: T,
}

impl<T: Scalar> MrmrConfig<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(MrmrConfig { alpha })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
}

/// One weight's ranking. Prefix `m` of `order` is the candidate subset `S_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RankingResult<T> {
    pub alpha: T,
    pub order: Vec<usize>,
    /// Winning step objective at each step.
    pub step_scores: Vec<T>,
    /// `D(S_m)` for every prefix.
    pub relevance_curve: Vec<T>,
    /// `R(S_m)` for every prefix.
    pub redundancy_curve: Vec<T>,
}

impl<T: Scalar> RankingResult<T> {
    /// The first `m` features, i.e. candidate subset `S_m`.
    pub fn prefix(&self, m: usize) -> &[usize] {
        &self.order[..m]
    }

    pub fn to_named(&self, feature_names: &[String]) -> NamedRanking<T> {
        NamedRanking {
            alpha: self.alpha,
            order: self.order.iter().map(|&i| feature_names[i].clone()).collect(),
            step_scores: self.step_scores.clone(),
            relevance_curve: self.relevance_curve.clone(),
            redundancy_curve: self.redundancy_curve.clone(),
        }
    }
}

/// Ranking with feature names in place of indices, as written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NamedRanking<T> {
    pub alpha: T,
    pub order: Vec<String>,
    pub step_scores: Vec<T>,
    pub relevance_curve: Vec<T>,
    pub redundancy_curve: Vec<T>,
}

fn check_subset<T: Scalar>(subset: &[usize], mi: &MiMatrix<T>) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::Empty("feature subset"));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= mi.n_features()) {
        return Err(Error::Shape(format!(
            "feature index {bad} out of range for {} features",
            mi.n_features()
        )));
    }
    Ok(())
}

/// Mean feature-class information `D = (1/|S|) sum I(x_i; c)`.
pub fn relevance<T: Scalar>(subset: &[usize], mi: &MiMatrix<T>) -> Result<T> {
    check_subset(subset, mi)?;
    let sum: T = subset.iter().map(|&i| mi.class_relevance()[i]).sum();
    Ok(sum / T::of_usize(subset.len()))
}

/// `R = (1/|S|^2) sum_{i,j in S} I(x_i; x_j)` over all ordered pairs,
/// diagonal included.
pub fn redundancy<T: Scalar>(subset: &[usize], mi: &MiMatrix<T>) -> Result<T> {
    check_subset(subset, mi)?;
    let mut sum = T::zero();
    for &i in subset {
        for &j in subset {
            sum += mi.pair(i, j);
        }
    }
    let n = T::of_usize(subset.len());
    Ok(sum / (n * n))
}

/// `alpha * D - (1 - alpha) * R`.
pub fn weighted_phi<T: Scalar>(d_value: T, r_value: T, cfg: &MrmrConfig<T>) -> T {
    cfg.alpha * d_value - (T::one() - cfg.alpha) * r_value
}

/// Greedy forward ranking of every feature.
///
/// The first pick is the most class-relevant feature regardless of weight.
/// Step `m >= 2` adds the remaining feature maximizing
/// `alpha * I(x_j; c) - (1 - alpha) * mean_{i in S_{m-1}} I(x_j; x_i)`.
/// Ties go to the lowest feature index.
pub fn incremental_rank<T: Scalar>(mi: &MiMatrix<T>, cfg: &MrmrConfig<T>) -> Result<RankingResult<T>> {
    let n = mi.n_features();
    if n == 0 {
        return Err(Error::Empty("mutual-information matrix"));
    }
    let alpha = cfg.alpha;
    let beta = T::one() - alpha;
    let rel = mi.class_relevance();

    let mut order = Vec::with_capacity(n);
    let mut step_scores = Vec::with_capacity(n);
    let mut remaining = vec![true; n];
    // running sum of I(x_j; x_i) over the selected x_i, per candidate j
    let mut acc = vec![T::zero(); n];

    for m in 1..=n {
        let mut best: Option<(usize, T)> = None;
        for j in (0..n).filter(|&j| remaining[j]) {
            let score = if m == 1 {
                rel[j]
            } else {
                alpha * rel[j] - beta * (acc[j] / T::of_usize(m - 1))
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let (pick, score) = best.expect("a feature remains at every step");
        remaining[pick] = false;
        order.push(pick);
        step_scores.push(if m == 1 { alpha * rel[pick] } else { score });
        for j in (0..n).filter(|&j| remaining[j]) {
            acc[j] += mi.pair(j, pick);
        }
    }

    let (relevance_curve, redundancy_curve) = prefix_curves(&order, mi);
    Ok(RankingResult {
        alpha,
        order,
        step_scores,
        relevance_curve,
        redundancy_curve,
    })
}

/// `D(S_m)` and `R(S_m)` for every prefix, accumulated incrementally.
fn prefix_curves<T: Scalar>(order: &[usize], mi: &MiMatrix<T>) -> (Vec<T>, Vec<T>) {
    let mut rel_sum = T::zero();
    let mut red_sum = T::zero();
    let mut d = Vec::with_capacity(order.len());
    let mut r = Vec::with_capacity(order.len());
    for (k, &f) in order.iter().enumerate() {
        rel_sum += mi.class_relevance()[f];
        // new cells: (f, f) plus (f, prev) and (prev, f) for each earlier pick
        red_sum += mi.pair(f, f);
        for &prev in &order[..k] {
            red_sum += mi.pair(f, prev) + mi.pair(prev, f);
        }
        let m = T::of_usize(k + 1);
        d.push(rel_sum / m);
        r.push(red_sum / (m * m));
    }
    (d, r)
}
