//! Sum-of-trees regression model, its default priors and residual cache.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::features::Features;
use crate::process::CutMode;
use crate::tree::BspTree;

/// Shape of the Inverse-Gamma prior on the noise variance.
pub const IG_PRIOR_SHAPE: f64 = 1.5;
/// Prior CDF value at the variance estimate.
pub const IG_PRIOR_QUANTILE: f64 = 0.9;

/// Affine map between original and standardized labels:
/// `z = (y - shift) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelTransform {
    pub shift: f64,
    pub scale: f64,
}

impl Default for LabelTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl LabelTransform {
    pub fn identity() -> Self {
        LabelTransform { shift: 0.0, scale: 1.0 }
    }

    /// Mean / sample standard deviation of `y`.
    pub fn fit(y: &[f64]) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::DegenerateLabels);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite label".into()));
        }
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::DegenerateLabels);
        }
        Ok(LabelTransform { shift: mean, scale: sd })
    }

    #[inline]
    pub fn forward(&self, y: f64) -> f64 {
        (y - self.shift) / self.scale
    }

    #[inline]
    pub fn inverse(&self, z: f64) -> f64 {
        self.shift + self.scale * z
    }

    pub fn forward_all(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|&v| self.forward(v)).collect()
    }
}

/// Hyperparameters in standardized label units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    /// Leaf-mean prior standard deviation.
    pub sigma_mu: f64,
    /// Inverse-Gamma scale of the noise prior.
    pub lambda_ig: f64,
    pub sigma2_init: f64,
}

/// `sigma_mu = 1 / (2 sqrt(m))`.
pub fn default_sigma_mu(m: usize) -> f64 {
    0.5 / (m as f64).sqrt()
}

/// CDF of Inverse-Gamma(shape, scale) at `x`.
pub fn inv_gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if scale <= 0.0 {
        return 1.0;
    }
    gamma_ur(shape, scale / x)
}

/// Scale `lambda` with `CDF_IG(sigma2_hat; shape, lambda) = quantile`.
/// The CDF decreases in `lambda`, so bisection on a bracket is enough.
pub fn solve_ig_scale(sigma2_hat: f64, shape: f64, quantile: f64) -> Result<f64> {
    if !(sigma2_hat > 0.0) || !sigma2_hat.is_finite() {
        return Err(Error::config("sigma2_hat", format!("must be finite and > 0, got {sigma2_hat}")));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::config("quantile", "must lie in (0, 1)"));
    }
    let f = |lam: f64| inv_gamma_cdf(sigma2_hat, shape, lam) - quantile;
    let mut lo = 0.0;
    let mut hi = sigma2_hat;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-13 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Priors from a variance estimate in standardized units.
pub fn priors_from_estimate(sigma2_hat: f64, m: usize) -> Result<Priors> {
    if m == 0 {
        return Err(Error::config("trees", "must be >= 1"));
    }
    Ok(Priors {
        sigma_mu: default_sigma_mu(m),
        lambda_ig: solve_ig_scale(sigma2_hat, IG_PRIOR_SHAPE, IG_PRIOR_QUANTILE)?,
        sigma2_init: sigma2_hat,
    })
}

/// Standardizes `y` and derives default priors. The variance estimate is
/// the sample variance of the standardized labels, i.e. 1.
pub fn default_priors(y: &[f64], m: usize) -> Result<(Priors, LabelTransform)> {
    let t = LabelTransform::fit(y)?;
    let z = t.forward_all(y);
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let s2 = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((priors_from_estimate(s2, m)?, t))
}

/// Residual variance of an ordinary least-squares fit of `z` on `x`
/// (with intercept), an alternative variance estimate.
pub fn linear_residual_variance(x: &Features, z: &[f64]) -> Result<f64> {
    use nalgebra::{DMatrix, DVector};
    if x.n() != z.len() {
        return Err(Error::LengthMismatch {
            left: x.n(),
            right: z.len(),
        });
    }
    let (n, d) = (x.n(), x.d());
    let a = DMatrix::from_fn(n, d + 1, |i, k| if k == 0 { 1.0 } else { x.get(i, k - 1) });
    let b = DVector::from_column_slice(z);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-10)
        .map_err(|e| Error::Data(format!("least squares failed: {e}")))?;
    let resid = b - a * coef;
    let dof = n.saturating_sub(d + 1).max(1) as f64;
    let v = resid.norm_squared() / dof;
    if !(v > 0.0) {
        return Err(Error::DegenerateLabels);
    }
    Ok(v)
}

/// Posterior state of the sum-of-trees model. Leaf means and `sigma2` are
/// in standardized label units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BspForest {
    pub trees: Vec<BspTree>,
    pub sigma2: f64,
    pub budget: f64,
    pub rate_scale: f64,
    pub sigma_mu: f64,
    pub lambda_ig: f64,
    pub label_transform: LabelTransform,
    pub mode: CutMode,
    pub n_features: usize,
    /// How raw inputs map into the unit cube, if known.
    #[serde(default)]
    pub schema: Option<InputSchema>,
}

/// Raw feature layout seen at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSchema {
    pub feature_names: Vec<String>,
    pub label_name: String,
    /// Per-feature (min, max) of the raw values.
    pub bounds: Vec<(f64, f64)>,
    /// Levels of integer-coded categorical features, by name.
    #[serde(default)]
    pub categories: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Prediction in original label units.
    pub mean: f64,
    /// Leaf mean of each tree, standardized units.
    pub per_tree: Vec<f64>,
    /// Per posterior sample predictions, original units.
    pub posterior_draws: Option<Vec<f64>>,
}

impl BspForest {
    /// `m` single-leaf trees with zero means.
    pub fn initial(m: usize, n_features: usize, priors: Priors, budget: f64, rate_scale: f64, transform: LabelTransform, mode: CutMode) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("trees", "must be >= 1"));
        }
        if !(priors.sigma2_init > 0.0) {
            return Err(Error::config("sigma2", "must be > 0"));
        }
        Ok(BspForest {
            trees: vec![BspTree::new(); m],
            sigma2: priors.sigma2_init,
            budget,
            rate_scale,
            sigma_mu: priors.sigma_mu,
            lambda_ig: priors.lambda_ig,
            label_transform: transform,
            mode,
            n_features,
            schema: None,
        })
    }

    pub fn m(&self) -> usize {
        self.trees.len()
    }

    /// Sum of leaf means in standardized units.
    pub fn predict_standardized(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.evaluate(x)).sum()
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        let per_tree: Vec<f64> = self.trees.iter().map(|t| t.evaluate(x)).collect();
        Prediction {
            mean: self.label_transform.inverse(per_tree.iter().sum()),
            per_tree,
            posterior_draws: None,
        }
    }

    /// Point predictions for every row, original units.
    pub fn predict_all(&self, x: &Features) -> Vec<f64> {
        (0..x.n())
            .map(|i| self.label_transform.inverse(self.predict_standardized(x.row(i))))
            .collect()
    }

    pub fn mean_cuts(&self) -> f64 {
        self.trees.iter().map(|t| t.n_cuts() as f64).sum::<f64>() / self.m() as f64
    }

    /// Maps a raw input row into the unit cube with the stored bounds.
    pub fn normalize_input(&self, raw: &[f64]) -> Vec<f64> {
        match &self.schema {
            Some(s) => raw
                .iter()
                .zip(&s.bounds)
                .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
                .collect(),
            None => raw.to_vec(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Decode("forest without trees".into()));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::Decode(format!("sigma2 = {}", self.sigma2)));
        }
        if !(self.label_transform.scale > 0.0) {
            return Err(Error::Decode("non-positive label scale".into()));
        }
        if let Some(s) = &self.schema {
            if s.bounds.len() != self.n_features || s.feature_names.len() != self.n_features {
                return Err(Error::Decode("input schema does not match feature count".into()));
            }
        }
        Ok(())
    }
}

/// Per-tree fitted values on the training rows plus their running total.
#[derive(Debug, Clone)]
pub struct ResidualCache {
    fits: Vec<Vec<f64>>,
    total: Vec<f64>,
}

impl ResidualCache {
    pub fn new(forest: &BspForest, x: &Features) -> Self {
        let fits: Vec<Vec<f64>> = forest
            .trees
            .iter()
            .map(|t| (0..x.n()).map(|i| t.evaluate(x.row(i))).collect())
            .collect();
        let mut total = vec![0.0; x.n()];
        for f in &fits {
            for (t, v) in total.iter_mut().zip(f) {
                *t += v;
            }
        }
        ResidualCache { fits, total }
    }

    pub fn fit(&self, j: usize) -> &[f64] {
        &self.fits[j]
    }

    pub fn total(&self) -> &[f64] {
        &self.total
    }

    /// `z_i - sum_{j' != j} g_{j'}(x_i)`.
    pub fn residuals(&self, j: usize, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.total)
            .zip(&self.fits[j])
            .map(|((&y, &t), &f)| y - (t - f))
            .collect()
    }

    /// Swaps tree `j`'s contribution for `fit`.
    pub fn replace(&mut self, j: usize, fit: Vec<f64>) {
        for ((t, old), new) in self.total.iter_mut().zip(&self.fits[j]).zip(&fit) {
            *t += new - old;
        }
        self.fits[j] = fit;
    }

    /// Sum of squared residuals of the whole forest.
    pub fn sse(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.total).map(|(y, t)| (y - t).powi(2)).sum()
    }

    /// Rebuilds the running total from the per-tree fits.
    pub fn resync(&mut self) {
        self.total.iter_mut().for_each(|t| *t = 0.0);
        for f in &self.fits {
            for (t, v) in self.total.iter_mut().zip(f) {
                *t += v;
            }
        }
    }
}

/// Residuals for tree `j`, computed from scratch.
pub fn residuals(forest: &BspForest, j: usize, x: &Features, z: &[f64]) -> Vec<f64> {
    (0..x.n())
        .map(|i| {
            let row = x.row(i);
            let others: f64 = forest
                .trees
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, t)| t.evaluate(row))
                .sum();
            z[i] - others
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zero_forest(m: usize) -> BspForest {
        let p = priors_from_estimate(1.0, m).unwrap();
        BspForest::initial(m, 2, p, 0.7, 1.0, LabelTransform { shift: 3.0, scale: 2.0 }, CutMode::Bsp).unwrap()
    }

    #[test]
    fn sigma_mu_defaults() {
        assert_relative_eq!(default_sigma_mu(50), 0.070710678118654752, epsilon = 1e-15);
        assert_eq!(default_sigma_mu(1), 0.5);
        assert_relative_eq!(default_sigma_mu(200) * 2.0, default_sigma_mu(50), epsilon = 1e-15);
    }

    #[test]
    fn lambda_hits_the_quantile() {
        let lam = solve_ig_scale(1.0, 1.5, 0.9).unwrap();
        assert!((inv_gamma_cdf(1.0, 1.5, lam) - 0.9).abs() < 1e-10);
        let lam2 = solve_ig_scale(2.5, 1.5, 0.9).unwrap();
        assert_relative_eq!(lam2, 2.5 * lam, max_relative = 1e-9);
    }

    #[test]
    fn constant_labels_rejected() {
        assert!(matches!(default_priors(&[2.0, 2.0, 2.0], 5), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn zero_forest_predicts_shift() {
        let f = zero_forest(3);
        let p = f.predict(&[0.2, 0.3]);
        assert_eq!(p.mean, 3.0);
        assert_eq!(p.per_tree, vec![0.0; 3]);
        assert_eq!(zero_forest(6).predict(&[0.2, 0.3]).mean, 3.0);
    }

    #[test]
    fn additive_over_single_leaves() {
        let mut f = zero_forest(2);
        f.label_transform = LabelTransform::identity();
        f.trees[0].set_leaf_mu(0, 0.3);
        f.trees[1].set_leaf_mu(0, -0.1);
        assert_relative_eq!(f.predict(&[0.5, 0.5]).mean, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn single_tree_residuals_are_labels() {
        let f = zero_forest(1);
        let x = Features::from_rows(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(residuals(&f, 0, &x, &[1.0, -1.0]), vec![1.0, -1.0]);
    }
}
