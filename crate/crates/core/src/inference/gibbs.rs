//! Outer Gibbs loop over the noise variance and the trees.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::conjugate::sample_sigma2;
use super::csmc::{csmc_sweep, CsmcConfig, Resampling, SweepInput};
use super::rng::{substream, StreamKey, GLOBAL_TREE, MAX_ITERATION, MAX_TREE};
use crate::bench::metrics::{rmae, RmaeVariant};
use crate::error::{Error, Result};
use crate::features::Features;
use crate::forest::{default_priors, priors_from_estimate, BspForest, Prediction, ResidualCache};
use crate::process::{calibrate_rate_scale, CutMode, HullLeaf, HullPartition, DEFAULT_EXPECTED_FIRST_COST};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub trees: usize,
    pub budget: f64,
    pub particles: usize,
    pub segments: usize,
    pub iterations: usize,
    /// Defaults to half the iterations.
    pub burnin: Option<usize>,
    /// Upper bound on retained posterior forests.
    pub max_retained: usize,
    pub seed: u64,
    pub mode: CutMode,
    pub resampling: Resampling,
    /// Expected first waiting time used to set `rate_scale`.
    pub expected_first_cost: f64,
    /// Overrides the calibrated rate scale.
    pub rate_scale: Option<f64>,
    /// Overrides `1 / (2 sqrt(m))`.
    pub sigma_mu: Option<f64>,
    /// Noise-variance estimate in standardized units; defaults to 1.
    pub sigma2_hat: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            trees: 50,
            budget: 0.7,
            particles: 10,
            segments: 5,
            iterations: 1000,
            burnin: None,
            max_retained: 100,
            seed: 0,
            mode: CutMode::Bsp,
            resampling: Resampling::Multinomial,
            expected_first_cost: DEFAULT_EXPECTED_FIRST_COST,
            rate_scale: None,
            sigma_mu: None,
            sigma2_hat: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 || self.trees as u64 > MAX_TREE {
            return Err(Error::config("trees", format!("must be in [1, {MAX_TREE}]")));
        }
        if self.iterations as u64 >= MAX_ITERATION {
            return Err(Error::config("iterations", format!("must be < {MAX_ITERATION}")));
        }
        if self.burnin.is_some_and(|b| b > self.iterations) {
            return Err(Error::config("burnin", "must not exceed iterations"));
        }
        if self.max_retained == 0 {
            return Err(Error::config("max_retained", "must be >= 1"));
        }
        if !(self.expected_first_cost > 0.0) || !self.expected_first_cost.is_finite() {
            return Err(Error::config("expected_first_cost", "must be finite and > 0"));
        }
        if self.sigma_mu.is_some_and(|s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::config("sigma_mu", "must be finite and > 0"));
        }
        self.csmc(0.0).validate()
    }

    pub fn burnin(&self) -> usize {
        self.burnin.unwrap_or(self.iterations / 2)
    }

    fn csmc(&self, rate_scale: f64) -> CsmcConfig {
        CsmcConfig {
            n_particles: self.particles,
            n_segments: self.segments,
            budget: self.budget,
            rate_scale,
            resampling: self.resampling,
        }
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Noise variance, standardized units.
    pub sigma2: f64,
    pub mean_cuts: f64,
    /// Training error in original units (square root of MAE).
    pub train_rmae: f64,
    #[serde(skip)]
    pub cuts_per_tree: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerDiagnostics {
    pub sweeps: u64,
    /// Mean effective sample size per segment across sweeps.
    pub ess_mean: Vec<f64>,
    /// Smallest effective sample size seen per segment.
    pub ess_min: Vec<f64>,
    /// How often each particle index was selected at the end of a sweep;
    /// index 0 is the reference.
    pub chosen_index_counts: Vec<u64>,
    /// Fraction of sweeps that kept the reference particle.
    pub reference_rate: f64,
    /// Segments where every fresh particle had zero weight.
    pub degenerate_segments: u64,
}

impl SamplerDiagnostics {
    fn new(particles: usize, segments: usize) -> Self {
        SamplerDiagnostics {
            sweeps: 0,
            ess_mean: vec![0.0; segments],
            ess_min: vec![f64::INFINITY; segments],
            chosen_index_counts: vec![0; particles],
            reference_rate: 0.0,
            degenerate_segments: 0,
        }
    }

    fn record(&mut self, chosen: usize, ess: &[f64], degenerate: usize) {
        self.sweeps += 1;
        let k = self.sweeps as f64;
        for (s, &e) in ess.iter().enumerate() {
            self.ess_mean[s] += (e - self.ess_mean[s]) / k;
            self.ess_min[s] = self.ess_min[s].min(e);
        }
        self.chosen_index_counts[chosen] += 1;
        self.reference_rate = self.chosen_index_counts[0] as f64 / k;
        self.degenerate_segments += degenerate as u64;
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GibbsState {
    pub forest: BspForest,
    /// Log incremental weights of each tree's retained particle.
    pub retained_weights: Vec<Vec<f64>>,
    pub iteration: usize,
    pub seed: u64,
    pub trace: Vec<TraceRow>,
}

/// Retained post burn-in forests.
#[derive(Debug, Clone, Default)]
pub struct PosteriorSamples {
    pub forests: Vec<BspForest>,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.forests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forests.is_empty()
    }

    /// Point prediction of every sample, original units.
    pub fn draws(&self, x: &[f64]) -> Vec<f64> {
        self.forests.iter().map(|f| f.predict(x).mean).collect()
    }

    /// Posterior-mean prediction; `per_tree` holds leaf means averaged over
    /// samples.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let m = self.forests.first().map_or(0, |f| f.m());
        let mut per_tree = vec![0.0; m];
        for f in &self.forests {
            for (acc, t) in per_tree.iter_mut().zip(&f.trees) {
                *acc += t.evaluate(x);
            }
        }
        let k = self.forests.len().max(1) as f64;
        per_tree.iter_mut().for_each(|v| *v /= k);
        let draws = self.draws(x);
        Prediction {
            mean: stats::mean(&draws),
            per_tree,
            posterior_draws: Some(draws),
        }
    }

    /// Posterior-mean prediction for every row.
    pub fn predict_mean(&self, x: &Features) -> Vec<f64> {
        (0..x.n()).map(|i| stats::mean(&self.draws(x.row(i)))).collect()
    }

    /// Pointwise `(lo, hi)` quantiles of the per-sample predictions.
    pub fn interval(&self, x: &[f64], lo: f64, hi: f64) -> (f64, f64) {
        let mut d = self.draws(x);
        d.sort_by(f64::total_cmp);
        (stats::quantile_sorted(&d, lo), stats::quantile_sorted(&d, hi))
    }
}

#[derive(Debug, Clone)]
pub struct GibbsOutput {
    pub state: GibbsState,
    pub samples: PosteriorSamples,
    pub diagnostics: SamplerDiagnostics,
}

impl GibbsOutput {
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        write_trace_csv(&self.state.trace, w)
    }
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "sigma2", "mean_cuts", "train_rmae"])?;
    for r in trace {
        out.write_record(&[
            r.iteration.to_string(),
            r.sigma2.to_string(),
            r.mean_cuts.to_string(),
            r.train_rmae.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Gibbs sampler over a training set. Each step draws the noise variance
/// and then updates every tree in turn with a conditional SMC sweep.
pub struct Sampler<'a> {
    data: &'a Features,
    y: &'a [f64],
    z: Vec<f64>,
    cfg: SamplerConfig,
    csmc: CsmcConfig,
    root: Arc<HullLeaf>,
    state: GibbsState,
    cache: ResidualCache,
    samples: PosteriorSamples,
    diagnostics: SamplerDiagnostics,
}

impl<'a> Sampler<'a> {
    pub fn new(data: &'a Features, y: &'a [f64], cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        if data.n() != y.len() {
            return Err(Error::LengthMismatch {
                left: data.n(),
                right: y.len(),
            });
        }
        let (mut priors, transform) = default_priors(y, cfg.trees)?;
        if let Some(s2) = cfg.sigma2_hat {
            priors = priors_from_estimate(s2, cfg.trees)?;
        }
        if let Some(s) = cfg.sigma_mu {
            priors.sigma_mu = s;
        }
        let z = transform.forward_all(y);
        let root = HullPartition::root_leaf(data, cfg.mode)?;
        let rate_scale = match cfg.rate_scale {
            Some(r) => r,
            None => calibrate_rate_scale(HullPartition::from_root(data, cfg.mode, root.clone()).exact_rate(), cfg.expected_first_cost)?,
        };
        let csmc = cfg.csmc(rate_scale);
        csmc.validate()?;
        let forest = BspForest::initial(cfg.trees, data.d(), priors, cfg.budget, rate_scale, transform, cfg.mode)?;
        let cache = ResidualCache::new(&forest, data);
        let state = GibbsState {
            forest,
            retained_weights: vec![Vec::new(); cfg.trees],
            iteration: 0,
            seed: cfg.seed,
            trace: Vec::new(),
        };
        let diagnostics = SamplerDiagnostics::new(cfg.particles, cfg.segments);
        Ok(Sampler {
            data,
            y,
            z,
            cfg,
            csmc,
            root,
            state,
            cache,
            samples: PosteriorSamples::default(),
            diagnostics,
        })
    }

    /// Starts the chain from the trees (and leaf means) of `forest`.
    pub fn with_initial_trees(mut self, forest: &BspForest) -> Result<Self> {
        if forest.m() != self.cfg.trees {
            return Err(Error::config("trees", "initial forest has a different number of trees"));
        }
        self.state.forest.trees = forest.trees.clone();
        self.cache = ResidualCache::new(&self.state.forest, self.data);
        Ok(self)
    }

    pub fn state(&self) -> &GibbsState {
        &self.state
    }

    pub fn rate_scale(&self) -> f64 {
        self.csmc.rate_scale
    }

    pub fn standardized_labels(&self) -> &[f64] {
        &self.z
    }

    /// Runs one full iteration.
    pub fn step(&mut self) -> Result<()> {
        let it = self.state.iteration + 1;
        let seed = self.cfg.seed;
        let forest = &mut self.state.forest;

        let mut rng = substream(
            seed,
            StreamKey {
                iteration: it as u64,
                tree: GLOBAL_TREE,
                segment: 0,
                particle: 0,
            },
        );
        forest.sigma2 = sample_sigma2(self.cache.sse(&self.z), self.z.len(), forest.lambda_ig, &mut rng);

        for j in 0..forest.m() {
            let r = self.cache.residuals(j, &self.z);
            let input = SweepInput {
                data: self.data,
                root: self.root.clone(),
                mode: self.cfg.mode,
                residuals: &r,
                sigma2: forest.sigma2,
                sigma_mu: forest.sigma_mu,
            };
            let key = StreamKey {
                iteration: it as u64,
                tree: j as u64,
                segment: 0,
                particle: 0,
            };
            let out = csmc_sweep(&forest.trees[j], &input, &self.csmc, seed, key)?;
            self.diagnostics.record(out.chosen, &out.ess, out.degenerate_events);
            forest.trees[j] = out.tree;
            self.state.retained_weights[j] = out.log_weights;
            self.cache.replace(j, out.fit);
        }
        self.cache.resync();

        let t = forest.label_transform;
        let fitted: Vec<f64> = self.cache.total().iter().map(|&v| t.inverse(v)).collect();
        let cuts_per_tree: Vec<u32> = forest.trees.iter().map(|tr| tr.n_cuts() as u32).collect();
        self.state.trace.push(TraceRow {
            iteration: it,
            sigma2: forest.sigma2,
            mean_cuts: forest.mean_cuts(),
            train_rmae: rmae(self.y, &fitted, RmaeVariant::SqrtMae)?,
            cuts_per_tree,
        });
        self.state.iteration = it;
        if it % 50 == 0 {
            log::debug!("iteration {it}: sigma2 {:.4}, mean cuts {:.2}", forest.sigma2, forest.mean_cuts());
        }

        let burnin = self.cfg.burnin();
        if it > burnin {
            let kept = self.cfg.iterations.saturating_sub(burnin).max(1);
            let thin = kept.div_ceil(self.cfg.max_retained);
            if (it - burnin) % thin == 0 || it == self.cfg.iterations && self.samples.is_empty() {
                self.samples.forests.push(self.state.forest.clone());
            }
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<GibbsOutput> {
        while self.state.iteration < self.cfg.iterations {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> GibbsOutput {
        GibbsOutput {
            state: self.state,
            samples: self.samples,
            diagnostics: self.diagnostics,
        }
    }
}

/// Trains a forest on `x` (rows in the unit cube) and labels `y` in their
/// original units.
pub fn gibbs_run(x: &Features, y: &[f64], cfg: SamplerConfig) -> Result<GibbsOutput> {
    Sampler::new(x, y, cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize) -> (Features, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Features::from_rows(n, 2, (0..2 * n).map(|_| rng.random::<f64>()).collect()).unwrap();
        let y = (0..n).map(|i| if x.get(i, 0) > 0.5 { 3.0 } else { -1.0 } + 0.1 * rng.random::<f64>()).collect();
        (x, y)
    }

    #[test]
    fn zero_iterations_returns_initial_forest() {
        let (x, y) = toy(20);
        let out = gibbs_run(&x, &y, SamplerConfig { iterations: 0, trees: 4, ..Default::default() }).unwrap();
        assert_eq!(out.state.forest.m(), 4);
        assert!(out.state.forest.trees.iter().all(|t| t.n_cuts() == 0 && t.leaf_mu(0) == 0.0));
        assert!(out.samples.is_empty());
    }

    #[test]
    fn invalid_config_names_field() {
        let (x, y) = toy(20);
        let err = gibbs_run(&x, &y, SamplerConfig { particles: 1, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::Config { field: "particles", .. }));
        let err = gibbs_run(&x, &y, SamplerConfig { budget: -1.0, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::Config { field: "budget", .. }));
    }

    #[test]
    fn step_function_is_learned_and_reproducible() {
        let (x, y) = toy(60);
        let cfg = SamplerConfig {
            trees: 5,
            iterations: 40,
            seed: 3,
            ..Default::default()
        };
        let a = gibbs_run(&x, &y, cfg.clone()).unwrap();
        let b = gibbs_run(&x, &y, cfg).unwrap();
        assert_eq!(a.state.forest, b.state.forest);
        assert_eq!(a.samples.len(), 20);
        let last = a.state.trace.last().unwrap();
        assert!(last.train_rmae < 0.8, "{last:?}");
        let mut buf = Vec::new();
        a.write_trace_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 41);
    }

    #[test]
    fn retention_is_thinned() {
        let (x, y) = toy(20);
        let cfg = SamplerConfig {
            trees: 2,
            iterations: 30,
            burnin: Some(0),
            max_retained: 7,
            ..Default::default()
        };
        let out = gibbs_run(&x, &y, cfg).unwrap();
        assert!(out.samples.len() <= 7 && out.samples.len() >= 6);
    }
}
