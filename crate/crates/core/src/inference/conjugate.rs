//! Closed-form conditionals of the Gaussian sum-of-trees model.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Sufficient statistics of the residuals falling in one leaf.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeafStats {
    pub n: usize,
    pub sum: f64,
    pub sumsq: f64,
}

impl LeafStats {
    pub fn from_rows(rows: &[u32], r: &[f64]) -> Self {
        let mut s = LeafStats::default();
        for &i in rows {
            let v = r[i as usize];
            s.n += 1;
            s.sum += v;
            s.sumsq += v * v;
        }
        s
    }

    pub fn from_values(values: &[f64]) -> Self {
        LeafStats {
            n: values.len(),
            sum: values.iter().sum(),
            sumsq: values.iter().map(|v| v * v).sum(),
        }
    }
}

/// Normal posterior of a leaf mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafPosterior {
    pub mean: f64,
    pub var: f64,
}

/// Posterior of a leaf mean under the prior `N(0, sigma_mu^2)`. An empty
/// leaf returns the prior.
pub fn leaf_posterior(stats: LeafStats, sigma2: f64, sigma_mu: f64) -> LeafPosterior {
    let prec = stats.n as f64 / sigma2 + 1.0 / (sigma_mu * sigma_mu);
    LeafPosterior {
        mean: (stats.sum / sigma2) / prec,
        var: 1.0 / prec,
    }
}

pub fn sample_leaf_mean<R: Rng + ?Sized>(stats: LeafStats, sigma2: f64, sigma_mu: f64, rng: &mut R) -> f64 {
    let p = leaf_posterior(stats, sigma2, sigma_mu);
    let z: f64 = StandardNormal.sample(rng);
    p.mean + p.var.sqrt() * z
}

/// Log marginal likelihood of a leaf's residuals with its mean integrated
/// out.
pub fn leaf_log_evidence(stats: LeafStats, sigma2: f64, sigma_mu: f64) -> f64 {
    if stats.n == 0 {
        return 0.0;
    }
    let n = stats.n as f64;
    let v0 = sigma_mu * sigma_mu;
    let prec = n / sigma2 + 1.0 / v0;
    let b = stats.sum / sigma2;
    -0.5 * n * (2.0 * PI * sigma2).ln() - stats.sumsq / (2.0 * sigma2) - 0.5 * (1.0 + n * v0 / sigma2).ln()
        + b * b / (2.0 * prec)
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

/// The same evidence written as `prior(mu) * lik(mu) / posterior(mu)`,
/// which holds at every `mu`.
pub fn leaf_log_evidence_at(stats: LeafStats, mu: f64, sigma2: f64, sigma_mu: f64) -> f64 {
    let n = stats.n as f64;
    let log_lik = -0.5 * n * (2.0 * PI * sigma2).ln() - (stats.sumsq - 2.0 * mu * stats.sum + n * mu * mu) / (2.0 * sigma2);
    let post = leaf_posterior(stats, sigma2, sigma_mu);
    log_normal_pdf(mu, 0.0, sigma_mu * sigma_mu) + log_lik - log_normal_pdf(mu, post.mean, post.var)
}

/// Shape and scale of the noise-variance conditional given `n` residuals
/// with sum of squares `ess`.
pub fn sigma2_posterior(ess: f64, n: usize, lambda: f64) -> (f64, f64) {
    ((3.0 + n as f64) / 2.0, lambda + ess / 2.0)
}

/// Draw from Inverse-Gamma((3 + n) / 2, lambda + ess / 2).
pub fn sample_sigma2<R: Rng + ?Sized>(ess: f64, n: usize, lambda: f64, rng: &mut R) -> f64 {
    let (shape, scale) = sigma2_posterior(ess, n, lambda);
    let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    scale / g
}
