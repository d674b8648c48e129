//! Accuracy, Cohen's kappa, ROC-AUC and the composite index
//! `eta = (accuracy + kappa + auc) / 3`.
//!
//! `Unstable` is the positive class throughout.

use serde::{Deserialize, Serialize, Serializer};

use crate::dataset::{class_counts, Class};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{a} predictions for {b} labels")));
    }
    if a == 0 {
        return Err(Error::Empty("prediction vector"));
    }
    Ok(())
}

/// Fraction of predictions equal to their label.
pub fn accuracy<T: Scalar>(predictions: &[Class], labels: &[Class]) -> Result<T> {
    check_lengths(predictions.len(), labels.len())?;
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(T::of_usize(hits) / T::of_usize(labels.len()))
}

/// 2x2 confusion table with `Unstable` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predictions: &[Class], labels: &[Class]) -> Result<Self> {
        check_lengths(predictions.len(), labels.len())?;
        let mut c = Confusion::default();
        for (&p, &l) in predictions.iter().zip(labels) {
            match (p, l) {
                (Class::Unstable, Class::Unstable) => c.tp += 1,
                (Class::Stable, Class::Stable) => c.tn += 1,
                (Class::Unstable, Class::Stable) => c.fp += 1,
                (Class::Stable, Class::Unstable) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `(p_o - p_e) / (1 - p_e)`, with `p_e` from the marginal products.
    /// Defined as 0 when `p_e = 1`.
    pub fn kappa<T: Scalar>(&self) -> Result<T> {
        let n = self.total();
        if n == 0 {
            return Err(Error::Empty("confusion table"));
        }
        let (pred_pos, pred_neg) = (self.tp + self.fp, self.tn + self.fn_);
        let (act_pos, act_neg) = (self.tp + self.fn_, self.tn + self.fp);
        let n2 = (n as u128) * (n as u128);
        let chance = (pred_pos as u128) * (act_pos as u128) + (pred_neg as u128) * (act_neg as u128);
        if chance == n2 {
            return Ok(T::zero());
        }
        // (p_o - p_e) / (1 - p_e) with both scaled by n^2
        let num = ((self.tp + self.tn) as u128 * n as u128) as i128 - chance as i128;
        Ok(T::of(num as f64) / T::of((n2 - chance) as f64))
    }
}

/// Cohen's kappa for binary labels.
pub fn kappa<T: Scalar>(predictions: &[Class], labels: &[Class]) -> Result<T> {
    Confusion::from_predictions(predictions, labels)?.kappa()
}

/// Area under the ROC curve from continuous scores (higher means unstable),
/// as the Mann-Whitney statistic with midranks for ties.
pub fn roc_auc<T: Scalar>(scores: &[T], labels: &[Class]) -> Result<T> {
    check_lengths(scores.len(), labels.len())?;
    let [n_neg, n_pos] = class_counts(labels);
    if n_neg == 0 || n_pos == 0 {
        return Err(Error::SingleClass.context("ROC-AUC needs both classes"));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("score {i} is not finite")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| T::total_cmp_scalar(&scores[a], &scores[b]));

    // twice the positive rank sum; a tie block over sorted positions
    // [i, j) shares the midrank (i + 1 + j) / 2
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let positives = order[i..j].iter().filter(|&&t| labels[t] == Class::Unstable).count();
        rank_sum2 += (positives as u128) * ((i + 1 + j) as u128);
        i = j;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    // U = R - p(p+1)/2, doubled to stay integral
    let u2 = rank_sum2 - p * (p + 1);
    Ok(T::of(u2 as f64) / T::of((2 * p * q) as f64))
}

/// `(a_test + kappa + auc) / 3`.
pub fn eta<T: Scalar>(a_test: T, kappa: T, auc: T) -> T {
    (a_test + kappa + auc) / T::of(3.0)
}

fn four_decimals<T: Scalar, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((v.as_f64() * 1e4).round() / 1e4)
}

/// Test-set quality of one final model. Serialized at 4 decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MetricsBundle<T> {
    #[serde(serialize_with = "four_decimals")]
    pub a_test: T,
    #[serde(serialize_with = "four_decimals")]
    pub kappa: T,
    #[serde(serialize_with = "four_decimals")]
    pub auc: T,
    #[serde(serialize_with = "four_decimals")]
    pub eta: T,
}

impl<T: Scalar> MetricsBundle<T> {
    pub fn from_parts(a_test: T, kappa: T, auc: T) -> Self {
        MetricsBundle {
            a_test,
            kappa,
            auc,
            eta: eta(a_test, kappa, auc),
        }
    }

    /// Hard predictions come from the sign of `scores`.
    pub fn from_scores(scores: &[T], labels: &[Class]) -> Result<Self> {
        let predictions: Vec<Class> = scores.iter().map(|&s| Class::from_score(s)).collect();
        Ok(Self::from_parts(
            accuracy(&predictions, labels)?,
            kappa(&predictions, labels)?,
            roc_auc(scores, labels)?,
        ))
    }
}
