//! Forward simulation of the d-dimensional binary space partitioning process.
//!
//! Every leaf carries a boundary measure: the sum over dimension pairs of the
//! perimeter of its 2-D projection (angled cuts), or the sum of its side
//! lengths (axis-aligned cuts). Waiting times between cuts are exponential
//! with rate `rate_scale * total measure`; the leaf, then the pair, are
//! chosen proportionally to their measure, and the line is drawn on the
//! chosen projection with the planar samplers of [`crate::geometry2d`].
//!
//! Two region representations exist. [`HullPartition`] works on the convex
//! hulls of the data inside each leaf and is what inference uses.
//! [`FullPartition`] tracks leaves of a box domain exactly as polytopes and
//! exists to check restriction and hull/full equivalence properties.

mod full;
mod hull;
mod restrict;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{BspTree, DimensionPair, HyperplaneCut};

pub use full::{BoxDomain, FullPartition, Polytope};
pub use hull::{HullLeaf, HullPartition, LeafSplit};
pub use restrict::restrict;

/// Stage-0 expected waiting time used to calibrate `rate_scale`.
pub const DEFAULT_EXPECTED_FIRST_COST: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutMode {
    /// Angled cuts free in two dimensions.
    #[default]
    Bsp,
    /// Axis-parallel cuts with side-length measure (Mondrian process).
    AxisAligned,
}

impl std::str::FromStr for CutMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bsp" => Ok(CutMode::Bsp),
            "axis" | "axis_aligned" | "mondrian" => Ok(CutMode::AxisAligned),
            other => Err(Error::config("mode", format!("unknown cut mode `{other}`"))),
        }
    }
}

/// A partition that can be grown by one cut at a time.
pub trait PartitionState {
    fn tree(&self) -> &BspTree;

    /// Rate (before `rate_scale`) of candidate events. Equals the total
    /// boundary measure for exact states and bounds it from above for
    /// states that thin candidates.
    fn cumulative_rate(&self) -> f64;

    /// Handles a candidate event at `time`: returns the cut, or `None` when
    /// the candidate is thinned away. Fails with `NoCuttableLeaf` when the
    /// candidate rate is zero.
    fn propose<R: Rng + ?Sized>(&mut self, time: f64, rng: &mut R) -> Result<Option<HyperplaneCut>>;

    fn apply_cut(&mut self, cut: HyperplaneCut) -> Result<()>;
}

/// Exponential waiting time to the next candidate event, with rate
/// `rate_scale * cumulative_rate`; infinite when that rate is zero.
pub fn sample_waiting_time<S, R>(state: &S, rate_scale: f64, rng: &mut R) -> Result<f64>
where
    S: PartitionState + ?Sized,
    R: Rng + ?Sized,
{
    if !(rate_scale >= 0.0) || !rate_scale.is_finite() {
        return Err(Error::config("rate_scale", format!("must be finite and >= 0, got {rate_scale}")));
    }
    Ok(exp_draw(rate_scale * state.cumulative_rate(), rng))
}

pub fn exp_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate > 0.0 {
        Exp::new(rate).expect("positive rate").sample(rng)
    } else {
        f64::INFINITY
    }
}

/// Runs the process from time `start` and applies every cut whose event time
/// is `<= end`. The overshooting draw is discarded, which is exact because
/// waiting times are memoryless. Returns the number of cuts applied.
pub fn advance<S, R>(state: &mut S, rate_scale: f64, start: f64, end: f64, rng: &mut R) -> Result<usize>
where
    S: PartitionState + ?Sized,
    R: Rng + ?Sized,
{
    let mut t = start;
    let mut applied = 0;
    loop {
        t += sample_waiting_time(state, rate_scale, rng)?;
        if t > end {
            return Ok(applied);
        }
        if let Some(cut) = state.propose(t, rng)? {
            state.apply_cut(cut)?;
            applied += 1;
        }
    }
}

/// Simulates a partition on `[0, budget]`.
pub fn simulate<S, R>(mut state: S, budget: f64, rate_scale: f64, rng: &mut R) -> Result<S>
where
    S: PartitionState,
    R: Rng + ?Sized,
{
    if !(budget > 0.0) {
        return Err(Error::config("budget", format!("must be > 0, got {budget}")));
    }
    advance(&mut state, rate_scale, 0.0, budget, rng)?;
    Ok(state)
}

/// `rate_scale` making the first waiting time have mean `expected_cost`.
pub fn calibrate_rate_scale(initial_rate: f64, expected_cost: f64) -> Result<f64> {
    if !(initial_rate > 0.0) {
        return Err(Error::NoCuttableLeaf);
    }
    if !(expected_cost > 0.0) {
        return Err(Error::config("expected_first_cost", "must be > 0"));
    }
    Ok(1.0 / (expected_cost * initial_rate))
}

/// Picks an index with probability proportional to `weights`; `None` when
/// all weights are zero.
pub(crate) fn pick_proportional<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> Option<usize> {
    let total: f64 = weights.clone().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = Some(i);
            acc += w;
            if target < acc {
                return Some(i);
            }
        }
    }
    last_positive
}

/// Axis-parallel cut at `x_k = position`, expressed as an angled cut.
/// Dimension 0 pairs with dimension 1 at `theta = pi`; any other dimension
/// pairs with dimension 0 at `theta = pi / 2`.
pub(crate) fn axis_cut(leaf_id: usize, k: usize, position: f64, time: f64) -> Result<HyperplaneCut> {
    use crate::geometry2d::DirectedCutLine2D;
    use std::f64::consts::{FRAC_PI_2, PI};
    let (dims, line) = if k == 0 {
        (DimensionPair::new(0, 1)?, DirectedCutLine2D::at_position(PI, -position)?)
    } else {
        (DimensionPair::new(0, k)?, DirectedCutLine2D::at_position(FRAC_PI_2, position)?)
    };
    Ok(HyperplaneCut {
        leaf_id,
        dims,
        line,
        time,
    })
}
