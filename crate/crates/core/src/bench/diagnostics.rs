use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Features;
use crate::forest::BspForest;
use crate::stats;

/// Partial-dependence curve with pointwise posterior bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpCurve {
    pub dim: usize,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl PdpCurve {
    /// Max minus min of the mean curve.
    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .mean
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    }

    /// Least-squares slope of the mean curve against the grid.
    pub fn slope(&self) -> f64 {
        let mg = stats::mean(&self.grid);
        let mm = stats::mean(&self.mean);
        let num: f64 = self.grid.iter().zip(&self.mean).map(|(g, m)| (g - mg) * (m - mm)).sum();
        let den: f64 = self.grid.iter().map(|g| (g - mg).powi(2)).sum();
        num / den
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dim", "value", "mean", "lo", "hi"])?;
        for i in 0..self.grid.len() {
            out.write_record(&[
                self.dim.to_string(),
                self.grid[i].to_string(),
                self.mean[i].to_string(),
                self.lo[i].to_string(),
                self.hi[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Average prediction as feature `dim` sweeps an even grid over [0, 1],
/// per posterior sample; returns the mean curve and 5-95% bands.
pub fn partial_dependence(samples: &[BspForest], data: &Features, dim: usize, grid_size: usize) -> Result<PdpCurve> {
    if dim >= data.d() {
        return Err(Error::config("dim", format!("must be < {}", data.d())));
    }
    if grid_size < 2 {
        return Err(Error::config("grid_size", "must be >= 2"));
    }
    if samples.is_empty() {
        return Err(Error::config("samples", "no posterior samples"));
    }
    let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 / (grid_size - 1) as f64).collect();
    let mut mean = Vec::with_capacity(grid_size);
    let mut lo = Vec::with_capacity(grid_size);
    let mut hi = Vec::with_capacity(grid_size);
    let mut row = vec![0.0; data.d()];
    for &v in &grid {
        let mut per_sample = Vec::with_capacity(samples.len());
        for f in samples {
            let mut acc = 0.0;
            for i in 0..data.n() {
                row.copy_from_slice(data.row(i));
                row[dim] = v;
                acc += f.predict_standardized(&row);
            }
            per_sample.push(f.label_transform.inverse(acc / data.n() as f64));
        }
        per_sample.sort_by(f64::total_cmp);
        mean.push(stats::mean(&per_sample));
        lo.push(stats::quantile_sorted(&per_sample, 0.05));
        hi.push(stats::quantile_sorted(&per_sample, 0.95));
    }
    Ok(PdpCurve { dim, grid, mean, lo, hi })
}

/// Share of cut involvements per dimension. Each cut counts once for each
/// dimension its normal actually depends on (both of its pair for angled
/// cuts). Frequencies are normalized per forest and averaged over forests
/// that have at least one cut.
pub fn dimension_usage(samples: &[BspForest], d: usize) -> Vec<f64> {
    let mut avg = vec![0.0; d];
    let mut used = 0usize;
    for f in samples {
        let mut counts = vec![0.0; d];
        for t in &f.trees {
            for c in t.cuts() {
                let (nx, ny) = c.line.normal();
                if nx.abs() > 1e-12 {
                    counts[c.dims.d1()] += 1.0;
                }
                if ny.abs() > 1e-12 {
                    counts[c.dims.d2()] += 1.0;
                }
            }
        }
        let total: f64 = counts.iter().sum();
        if total > 0.0 {
            used += 1;
            for (a, c) in avg.iter_mut().zip(&counts) {
                *a += c / total;
            }
        }
    }
    if used == 0 {
        log::warn!("no cuts in any forest; dimension usage is zero");
        return avg;
    }
    avg.iter_mut().for_each(|a| *a /= used as f64);
    avg
}

pub fn write_usage_csv<W: Write>(usage: &[f64], names: &[String], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["dim", "name", "frequency"])?;
    for (k, u) in usage.iter().enumerate() {
        let name = names.get(k).cloned().unwrap_or_else(|| format!("x{}", k + 1));
        out.write_record(&[k.to_string(), name, u.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
