//! Soft-margin binary SVM with an RBF kernel, trained by SMO, plus
//! cross-validated subset scoring and `(C, gamma)` grid search.

mod cv;
mod kernel;
mod smo;

pub use cv::{
    coarse_grid, cross_validated_accuracy, full_grid, grid_search, GridSpec, SubsetEvaluation,
};
pub use kernel::rbf_kernel;
pub use smo::TrainingDiagnostics;

pub(crate) use cv::{evaluate_grid, PreparedFolds};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::{class_counts, Class};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use kernel::KernelRows;

/// Hyperparameters of one SVM fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SvmConfig<T> {
    pub c_param: T,
    pub gamma: T,
    /// Stopping threshold on the maximal KKT violation.
    pub tolerance: T,
    /// Iteration cap, in units of passes over the training set.
    pub max_passes: usize,
}

impl<T: Scalar> SvmConfig<T> {
    pub const DEFAULT_TOLERANCE: f64 = 1e-3;
    pub const DEFAULT_MAX_PASSES: usize = 2000;

    pub fn new(c_param: T, gamma: T) -> Result<Self> {
        let cfg = SvmConfig {
            c_param,
            gamma,
            tolerance: T::of(Self::DEFAULT_TOLERANCE),
            max_passes: Self::DEFAULT_MAX_PASSES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Result<Self> {
        self.tolerance = tolerance;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.c_param) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c_param)));
        }
        if !positive(self.gamma) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !positive(self.tolerance) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidParameter("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// A trained classifier. The decision value is
/// `sum_k coef_k K(sv_k, x) + bias`, positive meaning unstable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SvmModel<T> {
    pub support_vectors: Vec<Vec<T>>,
    /// `alpha_k * y_k` for each support vector.
    pub dual_coefficients: Vec<T>,
    pub bias: T,
    pub config: SvmConfig<T>,
    pub training_feature_subset: Vec<usize>,
    /// Dual variable of every training sample, support vector or not.
    pub training_alphas: Vec<T>,
    /// Training row index of each support vector.
    pub support_indices: Vec<usize>,
    pub diagnostics: TrainingDiagnostics<T>,
}

impl<T: Scalar> SvmModel<T> {
    pub fn n_features(&self) -> usize {
        self.training_feature_subset.len()
    }

    /// Records which dataset columns the model was trained on.
    pub fn with_feature_subset(mut self, subset: Vec<usize>) -> Result<Self> {
        if subset.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "model has {} inputs, subset lists {}",
                self.n_features(),
                subset.len()
            )));
        }
        self.training_feature_subset = subset;
        Ok(self)
    }

    pub fn predict(&self, x: &[T]) -> Result<Class> {
        decision_function(self, x).map(Class::from_score)
    }
}

fn signs<T: Scalar>(y: &[Class]) -> Vec<T> {
    y.iter().map(|c| c.sign()).collect()
}

/// Trains on the rows of `x` (already restricted to the wanted features).
///
/// Hitting the iteration cap is not an error: the model is returned with
/// `diagnostics.converged == false`.
pub fn train<T: Scalar>(x: ArrayView2<'_, T>, y: &[Class], cfg: &SvmConfig<T>) -> Result<SvmModel<T>> {
    cfg.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    let counts = class_counts(y);
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClass);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("training data contains non-finite values".into()));
    }
    let ys = signs::<T>(y);
    let kernel = KernelRows::from_data(x, cfg.gamma);
    let sol = smo::solve(&kernel, &ys, cfg.c_param, cfg.tolerance, cfg.max_passes);
    Ok(assemble(x, &ys, sol, *cfg))
}

fn assemble<T: Scalar>(x: ArrayView2<'_, T>, ys: &[T], sol: smo::Solution<T>, config: SvmConfig<T>) -> SvmModel<T> {
    let support_indices: Vec<usize> = (0..ys.len()).filter(|&i| sol.alpha[i] > T::zero()).collect();
    SvmModel {
        support_vectors: support_indices.iter().map(|&i| x.row(i).to_vec()).collect(),
        dual_coefficients: support_indices.iter().map(|&i| sol.alpha[i] * ys[i]).collect(),
        bias: -sol.rho,
        config,
        training_feature_subset: (0..x.ncols()).collect(),
        training_alphas: sol.alpha,
        support_indices,
        diagnostics: sol.diagnostics,
    }
}

/// Signed decision value of `x`.
pub fn decision_function<T: Scalar>(m: &SvmModel<T>, x: &[T]) -> Result<T> {
    if x.len() != m.n_features() {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            m.n_features(),
            x.len()
        )));
    }
    let mut s = m.bias;
    for (sv, &coef) in m.support_vectors.iter().zip(&m.dual_coefficients) {
        s += coef * (-m.config.gamma * kernel::squared_distance(sv, x)).exp();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};

    use Class::{Stable as S, Unstable as U};

    fn kkt_holds(m: &SvmModel<f64>, x: &Array2<f64>, y: &[Class], tol: f64) -> bool {
        let c = m.config.c_param;
        x.rows().into_iter().zip(y).zip(&m.training_alphas).all(|((row, &label), &a)| {
            let yf = label.sign::<f64>() * decision_function(m, row.as_slice().unwrap()).unwrap();
            if a <= 0.0 {
                yf >= 1.0 - tol
            } else if a >= c {
                yf <= 1.0 + tol
            } else {
                (yf - 1.0).abs() <= tol
            }
        })
    }

    fn dual_feasible(m: &SvmModel<f64>, y: &[Class]) -> bool {
        let c = m.config.c_param;
        let eq: f64 = m.training_alphas.iter().zip(y).map(|(&a, l)| a * l.sign::<f64>()).sum();
        m.training_alphas.iter().all(|&a| (0.0..=c).contains(&a)) && eq.abs() <= 1e-6
    }

    fn training_accuracy(m: &SvmModel<f64>, x: &Array2<f64>, y: &[Class]) -> f64 {
        let hits = x
            .rows()
            .into_iter()
            .zip(y)
            .filter(|(r, &l)| m.predict(r.as_slice().unwrap()).unwrap() == l)
            .count();
        hits as f64 / y.len() as f64
    }

    fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<Class>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::new();
        for i in 0..n {
            let c = if i % 2 == 0 { S } else { U };
            let centre = if c == S { -1.0 } else { 1.0 };
            x[[i, 0]] = centre + rng.random_range(-0.8..0.8);
            x[[i, 1]] = rng.random_range(-2.0..2.0);
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn linearly_separable_four_points() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [2.0, 0.0], [2.0, 1.0]];
        let y = [S, S, U, U];
        let m = train(x.view(), &y, &SvmConfig::new(10.0, 1.0).unwrap()).unwrap();
        assert_eq!(training_accuracy(&m, &x, &y), 1.0);
        assert!(dual_feasible(&m, &y));
        assert!(m.diagnostics.converged);
    }

    #[test]
    fn xor_with_rbf() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [S, S, U, U];
        let m = train(x.view(), &y, &SvmConfig::new(10.0, 1.0).unwrap()).unwrap();
        assert_eq!(training_accuracy(&m, &x, &y), 1.0);
        assert!(dual_feasible(&m, &y));
        assert!(kkt_holds(&m, &x, &y, 2e-3));
    }

    #[test]
    fn kkt_and_margin_vectors() {
        let (x, y) = blobs(120, 3);
        let cfg = SvmConfig::new(4.0, 0.5).unwrap().with_tolerance(1e-4).unwrap();
        let m = train(x.view(), &y, &cfg).unwrap();
        assert!(dual_feasible(&m, &y));
        assert!(kkt_holds(&m, &x, &y, 1e-3));
        let mut free = 0;
        for (k, &i) in m.support_indices.iter().enumerate() {
            let a = m.training_alphas[i];
            if a > 0.0 && a < cfg.c_param {
                free += 1;
                let score = decision_function(&m, &m.support_vectors[k]).unwrap();
                assert!((score - y[i].sign::<f64>()).abs() <= 1e-3);
            }
        }
        assert!(free > 0);
    }

    #[test]
    fn objective_never_decreases() {
        let (x, y) = blobs(200, 11);
        for (c, g) in [(0.5, 0.1), (64.0, 2.0), (1024.0, 0.5)] {
            let m = train(x.view(), &y, &SvmConfig::new(c, g).unwrap()).unwrap();
            let t = &m.diagnostics.objective_trace;
            assert!(t.len() >= 2);
            for w in t.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{c} {g}: {w:?}");
            }
            assert!(dual_feasible(&m, &y));
        }
    }

    #[test]
    fn held_out_signs() {
        let (x, y) = blobs(80, 5);
        let m = train(x.view(), &y, &SvmConfig::new(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(m.predict(&[-1.5, 0.0]).unwrap(), S);
        assert_eq!(m.predict(&[1.5, 0.3]).unwrap(), U);
    }

    #[test]
    fn far_away_score_is_bias() {
        let (x, y) = blobs(40, 8);
        let mut m = train(x.view(), &y, &SvmConfig::new(1.0, 1.0).unwrap()).unwrap();
        m.bias = 0.0;
        assert!(decision_function(&m, &[1e3, -1e3]).unwrap().abs() < 1e-12);
        assert!(decision_function(&m, &[1.0]).is_err());
    }

    #[test]
    fn permutation_invariant_predictions() {
        let (x, y) = blobs(60, 21);
        let cfg = SvmConfig::new(2.0, 0.7).unwrap().with_tolerance(1e-6).unwrap();
        let m = train(x.view(), &y, &cfg).unwrap();
        let perm: Vec<usize> = (0..60).rev().collect();
        let xp = x.select(ndarray::Axis(0), &perm);
        let yp: Vec<Class> = perm.iter().map(|&i| y[i]).collect();
        let mp = train(xp.view(), &yp, &cfg).unwrap();
        let probes = Array2::from_shape_fn((25, 2), |(i, j)| (i as f64 * 0.37 + j as f64 * 1.3).sin() * 2.0);
        for p in probes.rows() {
            let p = p.as_slice().unwrap();
            let (a, b) = (decision_function(&m, p).unwrap(), decision_function(&mp, p).unwrap());
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            train(x.view(), &[S, S], &SvmConfig::new(1.0, 1.0).unwrap()),
            Err(Error::SingleClass)
        ));
        assert!(train(x.view(), &[S], &SvmConfig::new(1.0, 1.0).unwrap()).is_err());
        assert!(SvmConfig::new(0.0, 1.0).is_err());
        assert!(SvmConfig::new(1.0, -1.0).is_err());
        assert!(SvmConfig::new(1.0, 1.0).unwrap().with_tolerance(0.0).is_err());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let (x, y) = blobs(100, 2);
        let mut cfg = SvmConfig::new(1000.0, 5.0).unwrap().with_tolerance(1e-9).unwrap();
        cfg.max_passes = 1;
        let m = train(x.view(), &y, &cfg).unwrap();
        assert!(!m.diagnostics.converged);
        assert_eq!(m.diagnostics.iterations, 100);
        assert!(dual_feasible(&m, &y));
    }

    #[test]
    fn single_precision() {
        let x = array![[0.0f32, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [S, S, U, U];
        let m = train(x.view(), &y, &SvmConfig::new(10.0f32, 1.0).unwrap()).unwrap();
        for (r, &l) in x.rows().into_iter().zip(&y) {
            assert_eq!(m.predict(r.as_slice().unwrap()).unwrap(), l);
        }
    }
}
