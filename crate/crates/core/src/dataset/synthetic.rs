use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Class, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An affine copy of one informative feature: `scale * x + offset + noise * e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundantSpec {
    pub source: usize,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub noise: f64,
}

fn one() -> f64 {
    1.0
}

/// Generator recipe. Columns are laid out as informative features, then the
/// redundant copies, then pure noise. The label is unstable when the sum of
/// the informative features plus `label_noise * e` is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRecipe {
    pub n_informative: usize,
    #[serde(default)]
    pub redundant: Vec<RedundantSpec>,
    #[serde(default)]
    pub n_noise: usize,
    #[serde(default)]
    pub label_noise: f64,
    /// Optional column names; defaults to `inf*`, `red*`, `noise*`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
}

impl SyntheticRecipe {
    pub fn n_features(&self) -> usize {
        self.n_informative + self.redundant.len() + self.n_noise
    }

    /// Two informative features, one exact copy of each, six noise features.
    pub fn redundancy_demo() -> Self {
        SyntheticRecipe {
            n_informative: 2,
            redundant: (0..2)
                .map(|source| RedundantSpec {
                    source,
                    scale: 1.0,
                    offset: 0.0,
                    noise: 0.0,
                })
                .collect(),
            n_noise: 6,
            label_noise: 0.1,
            feature_names: None,
        }
    }

    /// 33 columns named `Tz1`..`Tz33`: five informative, eight noisy affine
    /// copies of them and twenty noise features.
    pub fn tz_default() -> Self {
        let scales = [2.0, -0.5, 10.0, 1.5, 0.8, -3.0, 50.0, 0.2];
        SyntheticRecipe {
            n_informative: 5,
            redundant: scales
                .iter()
                .enumerate()
                .map(|(i, &scale)| RedundantSpec {
                    source: i % 5,
                    scale,
                    offset: i as f64,
                    noise: 0.15 * scale.abs(),
                })
                .collect(),
            n_noise: 20,
            label_noise: 0.3,
            feature_names: Some((1..=33).map(|i| format!("Tz{i}")).collect()),
        }
    }

    fn names(&self) -> Vec<String> {
        if let Some(names) = &self.feature_names {
            return names.clone();
        }
        let mut names: Vec<String> = (1..=self.n_informative).map(|i| format!("inf{i}")).collect();
        names.extend((1..=self.redundant.len()).map(|i| format!("red{i}")));
        names.extend((1..=self.n_noise).map(|i| format!("noise{i}")));
        names
    }

    fn validate(&self) -> Result<()> {
        if self.n_informative == 0 {
            return Err(Error::InvalidParameter(
                "recipe needs at least one informative feature".into(),
            ));
        }
        if let Some(r) = self.redundant.iter().find(|r| r.source >= self.n_informative) {
            return Err(Error::InvalidParameter(format!(
                "redundant feature copies informative feature {} but only {} exist",
                r.source, self.n_informative
            )));
        }
        if let Some(names) = &self.feature_names {
            if names.len() != self.n_features() {
                return Err(Error::InvalidParameter(format!(
                    "recipe names {} features but generates {}",
                    names.len(),
                    self.n_features()
                )));
            }
        }
        if !(self.label_noise >= 0.0 && self.label_noise.is_finite()) {
            return Err(Error::InvalidParameter("label noise must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Draws `n_samples` rows from `recipe` with a seeded ChaCha8 stream. Values
/// are generated in `f64` and then cast, so a given seed yields the same data
/// in every precision (up to rounding).
pub fn generate_synthetic<T: Scalar>(
    n_samples: usize,
    recipe: &SyntheticRecipe,
    seed: u64,
) -> Result<Dataset<T>> {
    if n_samples < 20 {
        return Err(Error::InvalidParameter(format!(
            "synthetic datasets need at least 20 samples, got {n_samples}"
        )));
    }
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = recipe.n_features();
    let mut values = Array2::<f64>::zeros((n_samples, p));
    let mut labels = Vec::with_capacity(n_samples);
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };
    for i in 0..n_samples {
        let mut latent = 0.0;
        for j in 0..recipe.n_informative {
            let x = normal();
            values[[i, j]] = x;
            latent += x;
        }
        latent += recipe.label_noise * normal();
        labels.push(if latent > 0.0 { Class::Unstable } else { Class::Stable });
        for (r, spec) in recipe.redundant.iter().enumerate() {
            let x = values[[i, spec.source]];
            let e = normal();
            values[[i, recipe.n_informative + r]] = spec.scale * x + spec.offset + spec.noise * e;
        }
        let base = recipe.n_informative + recipe.redundant.len();
        for j in 0..recipe.n_noise {
            values[[i, base + j]] = normal();
        }
    }
    Dataset::new(values.mapv(T::of), labels, recipe.names())
}
