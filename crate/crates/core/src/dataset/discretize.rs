use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Class, Dataset};
use crate::error::{Error, Result};
use crate::scalar::{cmp_total, Scalar};

pub const DEFAULT_BINS: usize = 10;

/// Integer bin codes per sample and feature, produced by quantile binning.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedDataset<T> {
    bins: Array2<u32>,
    bin_count_per_feature: Vec<usize>,
    source_edges: Vec<Vec<T>>,
    labels: Vec<Class>,
    requested_bins: usize,
}

/// Record of how a [`DiscretizedDataset`] was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinConfig {
    pub method: String,
    pub requested_bins: usize,
    pub bin_count_per_feature: Vec<usize>,
}

impl<T: Scalar> DiscretizedDataset<T> {
    /// Builds directly from integer codes; each column is compacted so the
    /// codes are `0..distinct`. Useful for already-discrete data.
    pub fn from_codes(codes: Array2<u32>, labels: Vec<Class>) -> Result<Self> {
        if codes.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                codes.nrows(),
                labels.len()
            )));
        }
        let mut bins = codes;
        let mut counts = Vec::with_capacity(bins.ncols());
        for mut col in bins.columns_mut() {
            let mut distinct: Vec<u32> = col.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            col.mapv_inplace(|v| distinct.binary_search(&v).unwrap() as u32);
            counts.push(distinct.len());
        }
        let n_features = counts.len();
        let requested = counts.iter().copied().max().unwrap_or(0);
        Ok(DiscretizedDataset {
            bins,
            bin_count_per_feature: counts,
            source_edges: vec![Vec::new(); n_features],
            labels,
            requested_bins: requested,
        })
    }

    pub fn bins(&self) -> &Array2<u32> {
        &self.bins
    }

    pub fn feature_bins(&self, j: usize) -> Vec<u32> {
        self.bins.column(j).to_vec()
    }

    pub fn bin_count_per_feature(&self) -> &[usize] {
        &self.bin_count_per_feature
    }

    pub fn source_edges(&self) -> &[Vec<T>] {
        &self.source_edges
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.bins.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.bins.ncols()
    }

    pub fn bin_config(&self) -> BinConfig {
        BinConfig {
            method: "equal-frequency".into(),
            requested_bins: self.requested_bins,
            bin_count_per_feature: self.bin_count_per_feature.clone(),
        }
    }
}

/// Equal-frequency binning of every feature.
///
/// Cut points are only ever placed between distinct values, so tied values
/// share a bin. Each feature gets exactly `min(requested_bins, distinct)`
/// bins; among the admissible cut positions the ones closest to the ideal
/// quantile ranks are chosen.
pub fn discretize_equal_frequency<T: Scalar>(
    d: &Dataset<T>,
    requested_bins: usize,
) -> Result<DiscretizedDataset<T>> {
    if requested_bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "requested bins must be at least 2, got {requested_bins}"
        )));
    }
    let n = d.n_samples();
    let mut bins = Array2::<u32>::zeros((n, d.n_features()));
    let mut counts = Vec::with_capacity(d.n_features());
    let mut edges = Vec::with_capacity(d.n_features());
    for j in 0..d.n_features() {
        let (codes, k, cuts) = bin_column(&d.column(j).to_vec(), requested_bins);
        for (i, c) in codes.into_iter().enumerate() {
            bins[[i, j]] = c;
        }
        counts.push(k);
        edges.push(cuts);
    }
    Ok(DiscretizedDataset {
        bins,
        bin_count_per_feature: counts,
        source_edges: edges,
        labels: d.labels().to_vec(),
        requested_bins,
    })
}

fn bin_column<T: Scalar>(values: &[T], requested: usize) -> (Vec<u32>, usize, Vec<T>) {
    let n = values.len();
    let mut sorted: Vec<T> = values.to_vec();
    sorted.sort_by(cmp_total);

    // distinct values with cumulative counts
    let mut distinct: Vec<T> = Vec::new();
    let mut cum: Vec<usize> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if distinct.last().is_some_and(|&last| last == v) {
            *cum.last_mut().unwrap() = i + 1;
        } else {
            distinct.push(v);
            cum.push(i + 1);
        }
    }
    let n_distinct = distinct.len();
    let k = requested.min(n_distinct);

    // gap g sits between distinct[g] and distinct[g+1]; cum[g] samples lie below it
    let gaps = n_distinct.saturating_sub(1);
    let n_cuts = k - 1;
    let chosen = if n_cuts == gaps {
        (0..gaps).collect()
    } else {
        choose_cuts(&cum[..gaps], n_cuts, n as f64 / requested as f64)
    };
    let cuts: Vec<T> = chosen
        .iter()
        .map(|&g| distinct[g] + (distinct[g + 1] - distinct[g]) / T::of(2.0))
        .collect();

    // bin of distinct value index v = number of chosen gaps strictly below it
    let mut code_of_distinct = vec![0u32; n_distinct];
    let mut next = 0usize;
    for (v, code) in code_of_distinct.iter_mut().enumerate() {
        while next < chosen.len() && chosen[next] < v {
            next += 1;
        }
        *code = next as u32;
    }
    let codes = values
        .iter()
        .map(|v| {
            let idx = distinct
                .binary_search_by(|probe| cmp_total(probe, v))
                .expect("value present in its own column");
            code_of_distinct[idx]
        })
        .collect();
    (codes, k, cuts)
}

/// Picks `n_cuts` increasing gap indices minimizing the total distance between
/// each cut's cumulative count and its ideal rank `c * step`. Ties go to the
/// earlier gap.
fn choose_cuts(cum: &[usize], n_cuts: usize, step: f64) -> Vec<usize> {
    let gaps = cum.len();
    debug_assert!(n_cuts >= 1 && n_cuts < gaps);
    let cost = |c: usize, g: usize| (cum[g] as f64 - (c + 1) as f64 * step).abs();
    // best[c][g]: minimal cost with cut c placed at gap g
    let mut best = vec![vec![f64::INFINITY; gaps]; n_cuts];
    let mut from = vec![vec![usize::MAX; gaps]; n_cuts];
    for g in 0..gaps {
        best[0][g] = cost(0, g);
    }
    for c in 1..n_cuts {
        let mut run_min = f64::INFINITY;
        let mut run_arg = usize::MAX;
        for g in c..gaps {
            let prev = best[c - 1][g - 1];
            if prev < run_min {
                run_min = prev;
                run_arg = g - 1;
            }
            best[c][g] = run_min + cost(c, g);
            from[c][g] = run_arg;
        }
    }
    let last = n_cuts - 1;
    let mut g = (last..gaps)
        .min_by(|&a, &b| best[last][a].total_cmp(&best[last][b]).then(a.cmp(&b)))
        .unwrap();
    let mut out = vec![0; n_cuts];
    for c in (0..n_cuts).rev() {
        out[c] = g;
        if c > 0 {
            g = from[c][g];
        }
    }
    out
}
