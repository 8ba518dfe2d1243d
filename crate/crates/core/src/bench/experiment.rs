use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::metrics::{rmae, RmaeVariant};
use crate::error::{Error, Result};
use crate::inference::{gibbs_run, GibbsOutput, SamplerConfig};
use crate::process::CutMode;
use crate::stats;

pub const DEFAULT_BUDGETS: [f64; 6] = [0.4, 0.6, 0.8, 1.0, 1.2, 1.4];

/// Shuffles row indices with a run-specific stream and holds out the last
/// of `folds` equal parts.
pub fn holdout_split(n: usize, folds: usize, seed: u64, run: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64 + 1);
    idx.shuffle(&mut rng);
    let n_test = n / folds;
    let test = idx.split_off(n - n_test);
    (idx, test)
}

/// Trains on `train` and returns posterior-mean predictions on `test`.
pub fn fit_predict(train: &Dataset, test: &Dataset, cfg: &SamplerConfig) -> Result<(Vec<f64>, GibbsOutput)> {
    let out = gibbs_run(&train.x, &train.y, cfg.clone())?;
    let pred = if out.samples.is_empty() {
        out.state.forest.predict_all(&test.x)
    } else {
        out.samples.predict_mean(&test.x)
    };
    Ok((pred, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmae: f64,
    pub rmae_std: f64,
    pub per_run: Vec<f64>,
    pub runtime_secs: f64,
    pub variant: RmaeVariant,
    pub folds: usize,
    pub config: SamplerConfig,
}

/// Held-out error over `runs` random splits for any fitting procedure.
/// `fit` receives the train and test sets and the run index.
pub fn cv_evaluate_with<F>(ds: &Dataset, folds: usize, runs: usize, seed: u64, variant: RmaeVariant, fit: F) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&Dataset, &Dataset, usize) -> Result<Vec<f64>> + Sync,
{
    if folds < 2 || ds.n() < folds {
        return Err(Error::config("folds", format!("need 2 <= folds <= N, got {folds} for N = {}", ds.n())));
    }
    if runs == 0 {
        return Err(Error::config("runs", "must be >= 1"));
    }
    let start = Instant::now();
    let per_run = (0..runs)
        .into_par_iter()
        .map(|r| {
            let (tr, te) = holdout_split(ds.n(), folds, seed, r);
            let (train, test) = (ds.subset(&tr), ds.subset(&te));
            let pred = fit(&train, &test, r)?;
            rmae(&test.y, &pred, variant)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((per_run, start.elapsed().as_secs_f64()))
}

/// Forest error over `runs` random 80/20 style splits.
pub fn cv_evaluate(ds: &Dataset, folds: usize, runs: usize, cfg: &SamplerConfig, variant: RmaeVariant) -> Result<EvalReport> {
    let (per_run, runtime) = cv_evaluate_with(ds, folds, runs, cfg.seed, variant, |train, test, r| {
        let run_cfg = SamplerConfig {
            seed: cfg.seed.wrapping_add(r as u64),
            ..cfg.clone()
        };
        Ok(fit_predict(train, test, &run_cfg)?.0)
    })?;
    Ok(EvalReport {
        rmae: stats::mean(&per_run),
        rmae_std: stats::std_dev(&per_run),
        per_run,
        runtime_secs: runtime,
        variant,
        folds,
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub budget: f64,
    pub mode: CutMode,
    pub run: usize,
    pub rmae: f64,
    /// Cuts per tree averaged over retained samples.
    pub mean_cuts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub budget: f64,
    pub mode: CutMode,
    pub rmae_mean: f64,
    pub rmae_std: f64,
    pub cuts_mean: f64,
}

/// Trains both cut modes at every budget on identical splits.
pub fn budget_sweep(ds: &Dataset, budgets: &[f64], runs: usize, cfg: &SamplerConfig, variant: RmaeVariant) -> Result<Vec<SweepRow>> {
    if budgets.is_empty() {
        return Err(Error::config("budgets", "need at least one budget"));
    }
    if runs == 0 {
        return Err(Error::config("runs", "must be >= 1"));
    }
    let mut jobs = Vec::new();
    for &b in budgets {
        for mode in [CutMode::Bsp, CutMode::AxisAligned] {
            for r in 0..runs {
                jobs.push((b, mode, r));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(budget, mode, run)| {
            let (tr, te) = holdout_split(ds.n(), 5, cfg.seed, run);
            let (train, test) = (ds.subset(&tr), ds.subset(&te));
            let run_cfg = SamplerConfig {
                budget,
                mode,
                seed: cfg.seed.wrapping_add(run as u64),
                ..cfg.clone()
            };
            let (pred, out) = fit_predict(&train, &test, &run_cfg)?;
            let mean_cuts = if out.samples.is_empty() {
                out.state.forest.mean_cuts()
            } else {
                stats::mean(&out.samples.forests.iter().map(|f| f.mean_cuts()).collect::<Vec<_>>())
            };
            Ok(SweepRow {
                budget,
                mode,
                run,
                rmae: rmae(&test.y, &pred, variant)?,
                mean_cuts,
            })
        })
        .collect()
}

pub fn summarize_sweep(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut keys: Vec<(f64, CutMode)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(b, m)| b == r.budget && m == r.mode) {
            keys.push((r.budget, r.mode));
        }
    }
    keys.into_iter()
        .map(|(budget, mode)| {
            let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.budget == budget && r.mode == mode).collect();
            let e: Vec<f64> = sel.iter().map(|r| r.rmae).collect();
            let c: Vec<f64> = sel.iter().map(|r| r.mean_cuts).collect();
            SweepSummary {
                budget,
                mode,
                rmae_mean: stats::mean(&e),
                rmae_std: stats::std_dev(&e),
                cuts_mean: stats::mean(&c),
            }
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["budget", "mode", "run", "rmae", "mean_cuts"])?;
    for r in rows {
        let mode = match r.mode {
            CutMode::Bsp => "bsp",
            CutMode::AxisAligned => "axis",
        };
        out.write_record(&[
            r.budget.to_string(),
            mode.to_string(),
            r.run.to_string(),
            r.rmae.to_string(),
            r.mean_cuts.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
