//! End-to-end selection: rank features for each weight, score every nested
//! prefix by cross-validated SVM accuracy, keep the best subset, and test
//! final models.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    discretize_equal_frequency, stratified_kfold, BinConfig, Dataset, FoldAssignment, Normalization,
    DEFAULT_BINS,
};
use crate::error::{Error, Result};
use crate::metrics::MetricsBundle;
use crate::mrmr::{incremental_rank, MrmrConfig, RankingResult};
use crate::mutinfo::{pairwise_mi_matrix, MiMatrix};
use crate::pca::{pca_fit, pca_transform, DEFAULT_VARIANCE};
use crate::scalar::Scalar;
use crate::svm::{self, coarse_grid, evaluate_grid, full_grid, GridSpec, PreparedFolds, SvmConfig};

/// `0, 0.25, 0.5, 0.75, 1`.
pub fn default_alphas<T: Scalar>() -> Vec<T> {
    (0..=4).map(|i| T::of(i as f64 * 0.25)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PipelineConfig<T> {
    pub bins: usize,
    pub folds: usize,
    pub seed: u64,
    /// Grid searched for every candidate prefix.
    pub scoring_grid: GridSpec<T>,
    /// Grid searched before fitting a final model.
    pub final_grid: GridSpec<T>,
    pub variance_threshold: T,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        PipelineConfig {
            bins: DEFAULT_BINS,
            folds: 5,
            seed: 42,
            scoring_grid: coarse_grid(),
            final_grid: full_grid(),
            variance_threshold: T::of(DEFAULT_VARIANCE),
        }
    }
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidParameter(format!("bins must be at least 2, got {}", self.bins)));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!("folds must be at least 2, got {}", self.folds)));
        }
        if !(self.variance_threshold > T::zero() && self.variance_threshold <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "variance threshold must lie in (0, 1], got {}",
                self.variance_threshold
            )));
        }
        self.scoring_grid.cells()?;
        self.final_grid.cells()?;
        Ok(())
    }
}

/// Everything learned for one weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AlphaResult<T> {
    pub alpha: T,
    pub ranking: RankingResult<T>,
    pub ranked_features: Vec<String>,
    /// `J(S_1), ..., J(S_N)`.
    pub curve: Vec<T>,
    /// Grid cell that produced each curve point.
    pub curve_configs: Vec<SvmConfig<T>>,
    pub best_score: T,
    pub best_size: usize,
    pub best_subset: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GlobalBest<T> {
    pub alpha: T,
    pub score: T,
    pub subset: Vec<String>,
    pub indices: Vec<usize>,
}

/// Test-set result for one feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FinalEvaluation<T> {
    pub name: String,
    pub features: Vec<String>,
    pub chosen_config: SvmConfig<T>,
    pub cv_score: T,
    pub metrics: MetricsBundle<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Provenance<T> {
    pub version: String,
    pub seed: u64,
    pub alphas: Vec<T>,
    pub bin_config: BinConfig,
    pub folds: usize,
    pub scoring_grid: GridSpec<T>,
    pub final_grid: GridSpec<T>,
    pub variance_threshold: T,
    pub n_train: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
    /// Caller-supplied settings, e.g. command-line flags.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SelectionReport<T> {
    pub feature_names: Vec<String>,
    pub alpha_results: Vec<AlphaResult<T>>,
    pub global_best: GlobalBest<T>,
    #[serde(default)]
    pub final_metrics: Vec<FinalEvaluation<T>>,
    pub provenance: Provenance<T>,
}

impl<T: Scalar> SelectionReport<T> {
    /// Candidates in the documented tie order: score descending, then size
    /// ascending, then alpha ascending. The first is the global best.
    pub fn candidates_in_tie_order(&self) -> Vec<&AlphaResult<T>> {
        let mut v: Vec<&AlphaResult<T>> = self.alpha_results.iter().collect();
        v.sort_by(|a, b| {
            T::total_cmp_scalar(&b.best_score, &a.best_score)
                .then(a.best_size.cmp(&b.best_size))
                .then(T::total_cmp_scalar(&a.alpha, &b.alpha))
        });
        v
    }
}

/// Position of the best curve point; ties go to the shorter prefix.
fn best_point<T: Scalar>(curve: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in curve.iter().enumerate() {
        if v > curve[best] {
            best = i;
        }
    }
    best
}

/// Ranks the features of `train` for every weight, scores every prefix
/// on one shared fold assignment, and picks the global best subset.
pub fn select_features<T: Scalar>(
    train: &Dataset<T>,
    alphas: &[T],
    config: &PipelineConfig<T>,
) -> Result<SelectionReport<T>> {
    config.validate()?;
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("at least one alpha is required".into()));
    }
    let cfgs = alphas.iter().map(|&a| MrmrConfig::new(a)).collect::<Result<Vec<_>>>()?;

    let dd = discretize_equal_frequency(train, config.bins)?;
    let mi = pairwise_mi_matrix(&dd, train.labels())?;
    let folds = stratified_kfold(train, config.folds, config.seed)?;

    let rankings = cfgs
        .iter()
        .map(|c| incremental_rank(&mi, c))
        .collect::<Result<Vec<_>>>()?;
    let scores = score_prefixes(train, &rankings, &config.scoring_grid, &folds)?;

    let names = train.feature_names();
    let n = train.n_features();
    let alpha_results: Vec<AlphaResult<T>> = rankings
        .into_iter()
        .map(|ranking| {
            let points: Vec<&svm::SubsetEvaluation<T>> =
                (1..=n).map(|m| &scores[&sorted_key(ranking.prefix(m))]).collect();
            let curve: Vec<T> = points.iter().map(|e| e.j_score).collect();
            let best = best_point(&curve);
            AlphaResult {
                alpha: ranking.alpha,
                ranked_features: ranking.order.iter().map(|&i| names[i].clone()).collect(),
                curve_configs: points.iter().map(|e| e.chosen_config).collect(),
                best_score: curve[best],
                best_size: best + 1,
                best_subset: ranking.prefix(best + 1).iter().map(|&i| names[i].clone()).collect(),
                curve,
                ranking,
            }
        })
        .collect();

    let mut report = SelectionReport {
        feature_names: names.to_vec(),
        global_best: GlobalBest {
            alpha: T::zero(),
            score: T::zero(),
            subset: Vec::new(),
            indices: Vec::new(),
        },
        alpha_results,
        final_metrics: Vec::new(),
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            alphas: alphas.to_vec(),
            bin_config: dd.bin_config(),
            folds: config.folds,
            scoring_grid: config.scoring_grid.clone(),
            final_grid: config.final_grid.clone(),
            variance_threshold: config.variance_threshold,
            n_train: train.n_samples(),
            n_test: None,
            flags: BTreeMap::new(),
            created_unix: None,
        },
    };
    let winner = report.candidates_in_tie_order()[0];
    report.global_best = GlobalBest {
        alpha: winner.alpha,
        score: winner.best_score,
        subset: winner.best_subset.clone(),
        indices: winner.ranking.prefix(winner.best_size).to_vec(),
    };
    Ok(report)
}

fn sorted_key(subset: &[usize]) -> Vec<usize> {
    let mut k = subset.to_vec();
    k.sort_unstable();
    k
}

/// Scores each distinct prefix once; prefixes with equal feature sets share
/// a score regardless of ranking order.
fn score_prefixes<T: Scalar>(
    train: &Dataset<T>,
    rankings: &[RankingResult<T>],
    grid: &GridSpec<T>,
    folds: &FoldAssignment,
) -> Result<HashMap<Vec<usize>, svm::SubsetEvaluation<T>>> {
    let mut keys: Vec<Vec<usize>> = rankings
        .iter()
        .flat_map(|r| (1..=r.order.len()).map(|m| sorted_key(r.prefix(m))))
        .collect();
    keys.sort();
    keys.dedup();
    let results = keys
        .par_iter()
        .map(|k| {
            PreparedFolds::new(train, k, folds)
                .and_then(|p| evaluate_grid(&p, grid))
                .map_err(|e| e.context(format!("scoring subset {k:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(keys.into_iter().zip(results).collect())
}

/// Full grid search on `train`, refit on all of `train`, score `test` once.
/// Normalization is fitted on `train` only.
pub fn evaluate_final<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    subset: &[usize],
    config: &PipelineConfig<T>,
) -> Result<FinalEvaluation<T>> {
    if !train.same_schema(test) {
        return Err(Error::Shape("train and test feature columns differ".into()));
    }
    let folds = stratified_kfold(train, config.folds, config.seed)?;
    let search = svm::grid_search(train, subset, &config.final_grid, &folds)?;
    let cfg = search.chosen_config;

    let tr = train.select_features(subset)?;
    let te = test.select_features(subset)?;
    let norm = Normalization::fit(tr.values());
    let x_train = norm.apply_matrix(tr.values())?;
    let x_test = norm.apply_matrix(te.values())?;
    let model = svm::train(x_train.view(), tr.labels(), &cfg)?;
    let scores = x_test
        .rows()
        .into_iter()
        .map(|r| svm::decision_function(&model, &r.to_vec()))
        .collect::<Result<Vec<T>>>()?;
    Ok(FinalEvaluation {
        name: String::new(),
        features: tr.feature_names().to_vec(),
        chosen_config: cfg,
        cv_score: search.j_score,
        metrics: MetricsBundle::from_scores(&scores, te.labels())?,
    })
}

/// Fills `report.final_metrics` for the selected subset, all features, and
/// the principal-component baseline.
pub fn evaluate_report<T: Scalar>(
    report: &mut SelectionReport<T>,
    train: &Dataset<T>,
    test: &Dataset<T>,
    config: &PipelineConfig<T>,
) -> Result<()> {
    let mut out = Vec::new();
    let mut selected = evaluate_final(train, test, &report.global_best.indices, config)
        .map_err(|e| e.context("final model on the selected subset"))?;
    selected.name = "selected".into();
    out.push(selected);

    let all: Vec<usize> = (0..train.n_features()).collect();
    let mut full = evaluate_final(train, test, &all, config).map_err(|e| e.context("final model on all features"))?;
    full.name = "full".into();
    out.push(full);

    let pca = pca_fit(train, config.variance_threshold)?;
    let (ptrain, ptest) = (pca_transform(&pca, train)?, pca_transform(&pca, test)?);
    let ptrain = Dataset::new(ptrain.values().clone(), ptrain.labels().to_vec(), ptrain.feature_names().to_vec())?;
    let comps: Vec<usize> = (0..pca.retained_k).collect();
    let mut baseline =
        evaluate_final(&ptrain, &ptest, &comps, config).map_err(|e| e.context("final model on PCA baseline"))?;
    baseline.name = "pca".into();
    out.push(baseline);

    report.final_metrics = out;
    report.provenance.n_test = Some(test.n_samples());
    Ok(())
}

/// One row of the long-format curve table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CurveRow<T> {
    pub alpha: T,
    pub subset_size: usize,
    pub j_score: T,
}

pub fn emit_curves<T: Scalar>(report: &SelectionReport<T>) -> Vec<CurveRow<T>> {
    report
        .alpha_results
        .iter()
        .flat_map(|r| {
            r.curve.iter().enumerate().map(move |(i, &j)| CurveRow {
                alpha: r.alpha,
                subset_size: i + 1,
                j_score: j,
            })
        })
        .collect()
}

/// Writes `alpha,subset_size,j_score` rows with 6 decimals.
pub fn write_curves_csv<T: Scalar>(rows: &[CurveRow<T>], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "alpha,subset_size,j_score")?;
    for r in rows {
        writeln!(w, "{:.6},{},{:.6}", r.alpha.as_f64(), r.subset_size, r.j_score.as_f64())?;
    }
    Ok(())
}

pub fn save_curves_csv<T: Scalar>(rows: &[CurveRow<T>], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    write_curves_csv(rows, &mut f).map_err(io)?;
    f.flush().map_err(io)
}

/// Mutual information of `d` after equal-frequency binning.
pub fn mi_matrix<T: Scalar>(d: &Dataset<T>, bins: usize) -> Result<MiMatrix<T>> {
    pairwise_mi_matrix(&discretize_equal_frequency(d, bins)?, d.labels())
}
