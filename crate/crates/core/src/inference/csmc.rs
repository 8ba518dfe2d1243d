//! Conditional SMC update of one tree over fixed time segments.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conjugate::{leaf_log_evidence, sample_leaf_mean, LeafStats};
use super::rng::{substream, StreamKey, FINAL_SLOT, MAX_PARTICLE, MAX_SEGMENT, RESAMPLE_SLOT};
use crate::error::{Error, Result};
use crate::features::Features;
use crate::process::{exp_draw, CutMode, HullLeaf, HullPartition, PartitionState};
use crate::tree::{BspTree, HyperplaneCut};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Resampling {
    #[default]
    Multinomial,
    Systematic,
}

impl std::str::FromStr for Resampling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial" => Ok(Resampling::Multinomial),
            "systematic" => Ok(Resampling::Systematic),
            other => Err(Error::config("resampling", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsmcConfig {
    pub n_particles: usize,
    pub n_segments: usize,
    pub budget: f64,
    pub rate_scale: f64,
    pub resampling: Resampling,
}

impl CsmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 || self.n_particles as u64 > MAX_PARTICLE {
            return Err(Error::config("particles", format!("must be in [2, {MAX_PARTICLE}]")));
        }
        if self.n_segments < 1 || self.n_segments as u64 > MAX_SEGMENT {
            return Err(Error::config("segments", format!("must be in [1, {MAX_SEGMENT}]")));
        }
        if !(self.budget > 0.0) || !self.budget.is_finite() {
            return Err(Error::config("budget", "must be finite and > 0"));
        }
        if !(self.rate_scale >= 0.0) || !self.rate_scale.is_finite() {
            return Err(Error::config("rate_scale", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// `S + 1` equally spaced boundaries from 0 to the budget.
    pub fn boundaries(&self) -> Vec<f64> {
        let s = self.n_segments;
        (0..=s)
            .map(|i| if i == s { self.budget } else { self.budget * i as f64 / s as f64 })
            .collect()
    }
}

/// Conditioning information for one tree update.
#[derive(Debug, Clone)]
pub struct SweepInput<'a> {
    pub data: &'a Features,
    pub root: Arc<HullLeaf>,
    pub mode: CutMode,
    /// Partial residuals of the tree being updated.
    pub residuals: &'a [f64],
    pub sigma2: f64,
    pub sigma_mu: f64,
}

impl SweepInput<'_> {
    fn evidence(&self, rows: &[u32]) -> f64 {
        leaf_log_evidence(LeafStats::from_rows(rows, self.residuals), self.sigma2, self.sigma_mu)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Selected tree with freshly drawn leaf means.
    pub tree: BspTree,
    /// Fitted value of the new tree on every training row.
    pub fit: Vec<f64>,
    /// Log incremental weights of the selected path, one per segment.
    pub log_weights: Vec<f64>,
    pub chosen: usize,
    /// Effective sample size of the normalized weights per segment.
    pub ess: Vec<f64>,
    pub degenerate_events: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Particle<'a> {
    part: HullPartition<'a>,
    node_log_z: Vec<f64>,
    log_z: f64,
    log_w: Vec<f64>,
}

impl<'a> Particle<'a> {
    fn root(input: &SweepInput<'a>) -> Self {
        let part = HullPartition::from_root(input.data, input.mode, input.root.clone());
        let z = input.evidence(input.root.rows());
        Particle {
            part,
            node_log_z: vec![z],
            log_z: z,
            log_w: Vec::new(),
        }
    }

    fn apply(&mut self, cut: HyperplaneCut, input: &SweepInput<'a>) -> Result<()> {
        let sp = self.part.split(cut)?;
        let zl = input.evidence(sp.left.rows());
        let zr = input.evidence(sp.right.rows());
        let need = sp.right.node() + 1;
        if self.node_log_z.len() < need {
            self.node_log_z.resize(need, 0.0);
        }
        self.node_log_z[sp.left.node()] = zl;
        self.node_log_z[sp.right.node()] = zr;
        self.log_z += zl + zr - self.node_log_z[sp.parent.node()];
        Ok(())
    }

    /// Grows the partition over `(start, end]`.
    fn extend<R: Rng + ?Sized>(&mut self, input: &SweepInput<'a>, rate_scale: f64, start: f64, end: f64, rng: &mut R) -> Result<()> {
        let mut t = start;
        loop {
            t += exp_draw(rate_scale * self.part.cumulative_rate(), rng);
            if t > end {
                return Ok(());
            }
            let cut = match self.part.propose(t, rng) {
                Ok(Some(c)) => c,
                Ok(None) => continue,
                Err(Error::NoCuttableLeaf) => return Ok(()),
                Err(e) => return Err(e),
            };
            self.apply(cut, input)?;
        }
    }

    /// Log evidence recomputed from the current leaves.
    pub(crate) fn recompute_log_z(&self, input: &SweepInput<'a>) -> f64 {
        self.part.leaves().iter().map(|l| input.evidence(l.rows())).sum()
    }
}

/// Normalizes log weights in place of a probability vector. Non-finite
/// values count as zero weight. When every weight vanishes all mass goes to
/// the reference. Returns the weights and whether that fallback fired.
pub(crate) fn normalize_log_weights(log_w: &[f64]) -> (Vec<f64>, bool) {
    let max = log_w
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_w
        .iter()
        .map(|&v| if v.is_finite() { (v - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        w.iter_mut().for_each(|x| *x = 0.0);
        w[0] = 1.0;
        return (w, true);
    }
    w.iter_mut().for_each(|x| *x /= total);
    let others_zero = w[1..].iter().all(|&x| x == 0.0);
    (w, others_zero)
}

pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().map(|w| w * w).sum();
    if s > 0.0 {
        1.0 / s
    } else {
        0.0
    }
}

/// Draws `k` ancestor indices from the normalized `weights`.
pub fn resample_indices<R: Rng + ?Sized>(weights: &[f64], k: usize, scheme: Resampling, rng: &mut R) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    let find = |u: f64| {
        let target = u * total;
        cdf.partition_point(|&c| c <= target).min(weights.len() - 1)
    };
    match scheme {
        Resampling::Multinomial => (0..k).map(|_| find(rng.random::<f64>())).collect(),
        Resampling::Systematic => {
            let u0: f64 = rng.random::<f64>() / k as f64;
            (0..k).map(|i| find(u0 + i as f64 / k as f64)).collect()
        }
    }
}

/// Replays `reference` on the segment grid. Cuts beyond the budget are
/// dropped together with everything after them.
fn reference_particles<'a>(reference: &BspTree, input: &SweepInput<'a>, bounds: &[f64]) -> Result<Vec<Particle<'a>>> {
    let mut p = Particle::root(input);
    let mut cuts = reference.cuts().copied().peekable();
    let mut out = Vec::with_capacity(bounds.len() - 1);
    for s in 1..bounds.len() {
        let before = p.log_z;
        while let Some(c) = cuts.peek() {
            if c.time > bounds[s] {
                break;
            }
            p.apply(*c, input)?;
            cuts.next();
        }
        p.log_w.push(p.log_z - before);
        out.push(p.clone());
    }
    Ok(out)
}

/// One conditional SMC update of a tree given its partial residuals.
/// Particle 0 follows `reference`; the others start from the root and are
/// extended segment by segment, reweighted by the ratio of marginal
/// likelihoods and resampled. The returned tree is drawn from the final
/// weights and its leaf means from their conditional posterior.
pub fn csmc_sweep(reference: &BspTree, input: &SweepInput<'_>, cfg: &CsmcConfig, seed: u64, key: StreamKey) -> Result<SweepResult> {
    cfg.validate()?;
    if input.residuals.len() != input.data.n() {
        return Err(Error::LengthMismatch {
            left: input.residuals.len(),
            right: input.data.n(),
        });
    }
    let n = cfg.n_particles;
    let bounds = cfg.boundaries();
    let reference_path = reference_particles(reference, input, &bounds)?;
    let mut particles: Vec<Particle> = vec![Particle::root(input); n];
    let mut ess = Vec::with_capacity(cfg.n_segments);
    let mut degenerate_events = 0;
    let mut weights = Vec::new();

    for s in 1..=cfg.n_segments {
        particles[0] = reference_path[s - 1].clone();
        particles[1..]
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(i, p)| -> Result<()> {
                let mut rng = substream(
                    seed,
                    StreamKey {
                        segment: s as u64,
                        particle: (i + 1) as u64,
                        ..key
                    },
                );
                let before = p.log_z;
                p.extend(input, cfg.rate_scale, bounds[s - 1], bounds[s], &mut rng)?;
                p.log_w.push(p.log_z - before);
                Ok(())
            })?;

        debug_assert!(particles.iter().all(|p| {
            let fresh = p.recompute_log_z(input);
            (fresh - p.log_z).abs() <= 1e-8 * fresh.abs().max(1.0)
        }));

        let log_w: Vec<f64> = particles.iter().map(|p| *p.log_w.last().unwrap()).collect();
        if log_w.iter().any(|v| !v.is_finite()) {
            log::warn!("non-finite particle weight at segment {s}; treated as zero");
        }
        let (w, degenerate) = normalize_log_weights(&log_w);
        if degenerate {
            degenerate_events += 1;
            log::debug!("all fresh particles have zero weight at segment {s}; resampling to the reference");
        }
        ess.push(effective_sample_size(&w));

        if s < cfg.n_segments {
            let mut rng = substream(
                seed,
                StreamKey {
                    segment: s as u64,
                    particle: RESAMPLE_SLOT,
                    ..key
                },
            );
            let ancestors = resample_indices(&w, n - 1, cfg.resampling, &mut rng);
            let next: Vec<Particle> = ancestors.iter().map(|&a| particles[a].clone()).collect();
            for (slot, p) in particles[1..].iter_mut().zip(next) {
                *slot = p;
            }
        }
        weights = w;
    }

    let mut rng = substream(
        seed,
        StreamKey {
            segment: 0,
            particle: FINAL_SLOT,
            ..key
        },
    );
    let chosen = resample_indices(&weights, 1, Resampling::Multinomial, &mut rng)[0];
    let picked = particles.swap_remove(chosen);
    let leaves: Vec<Arc<HullLeaf>> = picked.part.leaves().to_vec();
    let log_weights = picked.log_w;
    let mut tree = picked.part.into_tree();
    let mut fit = vec![0.0; input.data.n()];
    let mut ordered = leaves;
    ordered.sort_by_key(|l| l.node());
    for leaf in ordered {
        let stats = LeafStats::from_rows(leaf.rows(), input.residuals);
        let mu = sample_leaf_mean(stats, input.sigma2, input.sigma_mu, &mut rng);
        tree.set_leaf_mu(leaf.node(), mu);
        for &r in leaf.rows() {
            fit[r as usize] = mu;
        }
    }
    Ok(SweepResult {
        tree,
        fit,
        log_weights,
        chosen,
        ess,
        degenerate_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, seed: u64) -> Features {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Features::from_rows(n, 3, (0..n * 3).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    fn key() -> StreamKey {
        StreamKey {
            iteration: 1,
            tree: 0,
            segment: 0,
            particle: 0,
        }
    }

    #[test]
    fn boundaries_cover_budget() {
        let c = CsmcConfig {
            n_particles: 4,
            n_segments: 5,
            budget: 0.7,
            rate_scale: 1.0,
            resampling: Resampling::Multinomial,
        };
        let b = c.boundaries();
        assert_eq!(b.len(), 6);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[5], 0.7);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn normalization_handles_degenerate_weights() {
        let (w, deg) = normalize_log_weights(&[-1.0, f64::NAN, f64::NEG_INFINITY]);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
        assert!(deg);
        let (w, deg) = normalize_log_weights(&[f64::NAN, f64::NAN]);
        assert_eq!(w, vec![1.0, 0.0]);
        assert!(deg);
        let (w, deg) = normalize_log_weights(&[0.0, 0.0, 2f64.ln()]);
        assert!((w[2] - 0.5).abs() < 1e-15);
        assert!(!deg);
    }

    #[test]
    fn systematic_resampling_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let idx = resample_indices(&[0.25, 0.25, 0.5], 8, Resampling::Systematic, &mut rng);
        assert_eq!(idx.iter().filter(|&&i| i == 2).count(), 4);
    }

    #[test]
    fn frozen_process_returns_reference_structure() {
        let x = data(20, 1);
        let r: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let input = SweepInput {
            data: &x,
            root: HullPartition::root_leaf(&x, CutMode::Bsp).unwrap(),
            mode: CutMode::Bsp,
            residuals: &r,
            sigma2: 1.0,
            sigma_mu: 0.5,
        };
        let cfg = CsmcConfig {
            n_particles: 2,
            n_segments: 3,
            budget: 0.7,
            rate_scale: 0.0,
            resampling: Resampling::Multinomial,
        };
        let mut chosen = [0usize; 2];
        for it in 0..400 {
            let out = csmc_sweep(&BspTree::new(), &input, &cfg, 9, StreamKey { iteration: it, ..key() }).unwrap();
            assert_eq!(out.tree.n_cuts(), 0);
            chosen[out.chosen] += 1;
        }
        assert!(chosen[0] > 150 && chosen[1] > 150, "{chosen:?}");
    }

    #[test]
    fn sweep_is_reproducible_and_keeps_times() {
        let x = data(40, 3);
        let r: Vec<f64> = (0..40).map(|i| x.get(i, 0) * 2.0 - 1.0).collect();
        let input = SweepInput {
            data: &x,
            root: HullPartition::root_leaf(&x, CutMode::Bsp).unwrap(),
            mode: CutMode::Bsp,
            residuals: &r,
            sigma2: 0.1,
            sigma_mu: 0.5,
        };
        let cfg = CsmcConfig {
            n_particles: 6,
            n_segments: 4,
            budget: 1.0,
            rate_scale: 1.0,
            resampling: Resampling::Multinomial,
        };
        let a = csmc_sweep(&BspTree::new(), &input, &cfg, 4, key()).unwrap();
        let b = csmc_sweep(&BspTree::new(), &input, &cfg, 4, key()).unwrap();
        assert_eq!(a.tree, b.tree);
        assert!(a.tree.cuts().all(|c| c.time <= 1.0));
        assert_eq!(a.ess.len(), 4);
        assert_eq!(a.log_weights.len(), 4);
        for i in 0..40 {
            assert_eq!(a.fit[i], a.tree.evaluate(x.row(i)));
        }
        // the chosen tree can serve as the next reference
        let c = csmc_sweep(&a.tree, &input, &cfg, 4, StreamKey { iteration: 2, ..key() }).unwrap();
        assert!(c.ess.iter().all(|&e| e >= 1.0 - 1e-12 && e <= 6.0 + 1e-12));
    }
}
