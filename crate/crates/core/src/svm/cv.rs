use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{gram_distances, squared_distances, KernelRows};
use super::{smo, SvmConfig};
use crate::dataset::{class_counts, Class, Dataset, FoldAssignment, Normalization};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cross-validated score `J(S)` of one feature subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SubsetEvaluation<T> {
    pub subset: Vec<usize>,
    /// Validation accuracy of every scored fold.
    pub fold_accuracies: Vec<T>,
    /// Mean of `fold_accuracies`.
    pub j_score: T,
    pub chosen_config: SvmConfig<T>,
    /// Folds whose training part held a single class and were not scored.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_folds: Vec<usize>,
    /// Folds where every selected feature was constant on the training part;
    /// these predict the training majority class.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_folds: Vec<usize>,
}

/// Candidate `(C, gamma)` values plus the solver settings used for every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridSpec<T> {
    pub c_values: Vec<T>,
    pub gamma_values: Vec<T>,
    pub tolerance: T,
    pub max_passes: usize,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(c_values: Vec<T>, gamma_values: Vec<T>) -> Self {
        GridSpec {
            c_values,
            gamma_values,
            tolerance: T::of(SvmConfig::<T>::DEFAULT_TOLERANCE),
            max_passes: SvmConfig::<T>::DEFAULT_MAX_PASSES,
        }
    }

    /// A one-cell grid.
    pub fn fixed(c: T, gamma: T) -> Self {
        Self::new(vec![c], vec![gamma])
    }

    /// Powers of two `2^lo, 2^(lo+step), ..., 2^hi`.
    pub fn powers_of_two(lo: i32, hi: i32, step: usize) -> Vec<T> {
        (lo..=hi).step_by(step).map(|e| T::of(2f64.powi(e))).collect()
    }

    /// Cells sorted by `C` then `gamma`, ascending, duplicates removed.
    pub fn cells(&self) -> Result<Vec<SvmConfig<T>>> {
        if self.c_values.is_empty() || self.gamma_values.is_empty() {
            return Err(Error::Empty("parameter grid"));
        }
        let sorted = |v: &[T]| {
            let mut v = v.to_vec();
            v.sort_by(T::total_cmp_scalar);
            v.dedup();
            v
        };
        let mut cells = Vec::new();
        for &c in &sorted(&self.c_values) {
            for &g in &sorted(&self.gamma_values) {
                let mut cfg = SvmConfig::new(c, g)?.with_tolerance(self.tolerance)?;
                cfg.max_passes = self.max_passes;
                cfg.validate()?;
                cells.push(cfg);
            }
        }
        Ok(cells)
    }
}

/// `C` in `2^-5, 2^-3, ..., 2^15`; `gamma` in `2^-15, 2^-13, ..., 2^3`.
pub fn full_grid<T: Scalar>() -> GridSpec<T> {
    GridSpec::new(
        GridSpec::powers_of_two(-5, 15, 2),
        GridSpec::powers_of_two(-15, 3, 2),
    )
}

/// Reduced grid for scoring many candidate subsets.
pub fn coarse_grid<T: Scalar>() -> GridSpec<T> {
    GridSpec::new(
        GridSpec::powers_of_two(-1, 7, 4),
        GridSpec::powers_of_two(-7, 1, 4),
    )
}

/// Majority class; ties go to stable.
pub(crate) fn majority_class(labels: &[Class]) -> Class {
    let [s, u] = class_counts(labels);
    if u > s {
        Class::Unstable
    } else {
        Class::Stable
    }
}

/// Per-fold data for one subset, normalized with training-part statistics
/// only, with squared distances cached for reuse across the grid.
pub(crate) struct PreparedFold<T> {
    y_train: Vec<T>,
    val_labels: Vec<Class>,
    dist_train: Array2<T>,
    dist_val: Array2<T>,
    single_class: bool,
    degenerate: bool,
    majority: Class,
}

pub(crate) struct PreparedFolds<T> {
    subset: Vec<usize>,
    folds: Vec<PreparedFold<T>>,
}

impl<T: Scalar> PreparedFolds<T> {
    pub fn new(d: &Dataset<T>, subset: &[usize], folds: &FoldAssignment) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::Empty("feature subset"));
        }
        if folds.n_samples() != d.n_samples() {
            return Err(Error::Shape(format!(
                "fold assignment covers {} samples, dataset has {}",
                folds.n_samples(),
                d.n_samples()
            )));
        }
        let restricted = d.select_features(subset)?;
        let prepared = (0..folds.k)
            .map(|f| prepare_fold(&restricted, &folds.train_indices(f), &folds.validation_indices(f)))
            .collect();
        Ok(PreparedFolds {
            subset: subset.to_vec(),
            folds: prepared,
        })
    }

    pub fn evaluate(&self, cfg: &SvmConfig<T>) -> Result<SubsetEvaluation<T>> {
        Ok(self.evaluate_same_gamma(std::slice::from_ref(cfg))?.remove(0))
    }

    /// Scores several cells sharing one `gamma`; each fold's kernel matrix
    /// is built once and reused for every `C`.
    fn evaluate_same_gamma(&self, cfgs: &[SvmConfig<T>]) -> Result<Vec<SubsetEvaluation<T>>> {
        let mut accuracies = vec![Vec::with_capacity(self.folds.len()); cfgs.len()];
        let mut skipped = Vec::new();
        let mut degenerate = Vec::new();
        let accuracy = |pred: &[Class], labels: &[Class]| {
            let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
            T::of_usize(hits) / T::of_usize(labels.len())
        };
        for (f, fold) in self.folds.iter().enumerate() {
            if fold.val_labels.is_empty() || fold.single_class {
                skipped.push(f);
                continue;
            }
            if fold.degenerate {
                degenerate.push(f);
                let a = accuracy(&vec![fold.majority; fold.val_labels.len()], &fold.val_labels);
                accuracies.iter_mut().for_each(|acc| acc.push(a));
                continue;
            }
            let gamma = cfgs[0].gamma;
            let kernel = KernelRows::from_distances(&fold.dist_train, gamma);
            let k_val = fold.dist_val.mapv(|d| (-gamma * d).exp());
            for (cfg, acc) in cfgs.iter().zip(accuracies.iter_mut()) {
                debug_assert!(cfg.gamma == gamma);
                let sol = smo::solve(&kernel, &fold.y_train, cfg.c_param, cfg.tolerance, cfg.max_passes);
                acc.push(accuracy(&fold.predict(&sol, &k_val), &fold.val_labels));
            }
        }
        cfgs.iter()
            .zip(accuracies)
            .map(|(cfg, fold_accuracies)| {
                if fold_accuracies.is_empty() {
                    return Err(Error::SingleClass.context("every cross-validation fold was unscorable"));
                }
                let j_score = fold_accuracies.iter().copied().sum::<T>() / T::of_usize(fold_accuracies.len());
                Ok(SubsetEvaluation {
                    subset: self.subset.clone(),
                    fold_accuracies,
                    j_score,
                    chosen_config: *cfg,
                    skipped_folds: skipped.clone(),
                    degenerate_folds: degenerate.clone(),
                })
            })
            .collect()
    }
}

fn prepare_fold<T: Scalar>(d: &Dataset<T>, train: &[usize], val: &[usize]) -> PreparedFold<T> {
    let raw_train = d.values().select(Axis(0), train);
    let raw_val = d.values().select(Axis(0), val);
    let norm = Normalization::fit(&raw_train);
    let x_train = norm.apply_matrix(&raw_train).expect("same width");
    let x_val = norm.apply_matrix(&raw_val).expect("same width");
    let train_labels: Vec<Class> = train.iter().map(|&i| d.labels()[i]).collect();
    let counts = class_counts(&train_labels);
    PreparedFold {
        dist_train: gram_distances(x_train.view()),
        dist_val: squared_distances(x_val.view(), x_train.view()),
        y_train: train_labels.iter().map(|c| c.sign()).collect(),
        val_labels: val.iter().map(|&i| d.labels()[i]).collect(),
        single_class: counts[0] == 0 || counts[1] == 0,
        degenerate: (0..d.n_features()).all(|j| norm.is_constant(j)),
        majority: majority_class(&train_labels),
    }
}

impl<T: Scalar> PreparedFold<T> {
    fn predict(&self, sol: &smo::Solution<T>, k_val: &Array2<T>) -> Vec<Class> {
        let support: Vec<(usize, T)> = (0..self.y_train.len())
            .filter(|&i| sol.alpha[i] > T::zero())
            .map(|i| (i, sol.alpha[i] * self.y_train[i]))
            .collect();
        k_val
            .rows()
            .into_iter()
            .map(|k| {
                let mut s = -sol.rho;
                for &(i, coef) in &support {
                    s += coef * k[i];
                }
                Class::from_score(s)
            })
            .collect()
    }
}

/// Mean validation accuracy over the folds. Each fold z-scores with
/// statistics of its training part only, trains, and scores its validation part.
pub fn cross_validated_accuracy<T: Scalar>(
    d: &Dataset<T>,
    subset: &[usize],
    cfg: &SvmConfig<T>,
    folds: &FoldAssignment,
) -> Result<SubsetEvaluation<T>> {
    cfg.validate()?;
    PreparedFolds::new(d, subset, folds)?.evaluate(cfg)
}

/// Scores every grid cell on the same folds and keeps the best; ties go to
/// the smaller `C`, then the smaller `gamma`.
pub fn grid_search<T: Scalar>(
    d: &Dataset<T>,
    subset: &[usize],
    grid: &GridSpec<T>,
    folds: &FoldAssignment,
) -> Result<SubsetEvaluation<T>> {
    let cells = grid.cells()?;
    let prepared = PreparedFolds::new(d, subset, folds)?;
    evaluate_cells(&prepared, &cells)
}

pub(crate) fn evaluate_grid<T: Scalar>(prepared: &PreparedFolds<T>, grid: &GridSpec<T>) -> Result<SubsetEvaluation<T>> {
    evaluate_cells(prepared, &grid.cells()?)
}

fn evaluate_cells<T: Scalar>(prepared: &PreparedFolds<T>, cells: &[SvmConfig<T>]) -> Result<SubsetEvaluation<T>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        match groups.iter_mut().find(|g| cells[g[0]].gamma == c.gamma) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    let scored: Vec<Vec<SubsetEvaluation<T>>> = groups
        .par_iter()
        .map(|g| prepared.evaluate_same_gamma(&g.iter().map(|&i| cells[i]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let mut results: Vec<Option<SubsetEvaluation<T>>> = vec![None; cells.len()];
    for (g, evals) in groups.iter().zip(scored) {
        for (&i, e) in g.iter().zip(evals) {
            results[i] = Some(e);
        }
    }
    let mut best: Option<SubsetEvaluation<T>> = None;
    for r in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| r.j_score > b.j_score) {
            best = Some(r);
        }
    }
    Ok(best.expect("grid has at least one cell"))
}
