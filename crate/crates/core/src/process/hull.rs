use std::sync::{Arc, OnceLock};

use rand::Rng;

use super::{axis_cut, pick_proportional, CutMode, PartitionState};
use crate::error::{Error, Result};
use crate::features::Features;
use crate::geometry2d::{self, convex_hull, hull_perimeter_of_runs, Point2, Side};
use crate::tree::{all_pairs, BspTree, DimensionPair, HyperplaneCut};

/// Slack added to inherited bounds so rounding in the hull code never lets
/// a child's measure exceed its parent's.
const BOUND_SLACK: f64 = 1e-9;

/// Data held by one leaf. Per-component measures (pair hull perimeter, or
/// extent in axis mode) are computed on first use and cached.
#[derive(Debug)]
pub struct HullLeaf {
    node: usize,
    rows: Vec<u32>,
    /// Per dimension, the rows sorted by their value in that dimension.
    sorted: Vec<Vec<u32>>,
    exact: Vec<OnceLock<f64>>,
}

impl HullLeaf {
    fn build(node: usize, rows: Vec<u32>, sorted: Vec<Vec<u32>>, data: &Features, mode: CutMode, n_comp: usize) -> Self {
        let exact: Vec<OnceLock<f64>> = (0..n_comp).map(|_| OnceLock::new()).collect();
        if rows.len() <= 1 {
            exact.iter().for_each(|c| {
                let _ = c.set(0.0);
            });
        } else if mode == CutMode::AxisAligned {
            for (k, s) in sorted.iter().enumerate() {
                let _ = exact[k].set(data.get(s[s.len() - 1] as usize, k) - data.get(s[0] as usize, k));
            }
        }
        HullLeaf {
            node,
            rows,
            sorted,
            exact,
        }
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    /// Exact measure of component `comp`.
    fn measure(&self, comp: usize, data: &Features, pairs: &[DimensionPair]) -> f64 {
        *self.exact[comp].get_or_init(|| pair_perimeter(&self.sorted, data, pairs[comp]))
    }
}

fn pair_perimeter(sorted: &[Vec<u32>], data: &Features, pair: DimensionPair) -> f64 {
    let (ca, cb) = (data.col(pair.d1()), data.col(pair.d2()));
    let mut runs: Vec<(f64, f64, f64)> = Vec::with_capacity(sorted[pair.d1()].len());
    for &r in &sorted[pair.d1()] {
        let (a, b) = (ca[r as usize], cb[r as usize]);
        match runs.last_mut() {
            Some(run) if run.0 == a => {
                run.1 = run.1.min(b);
                run.2 = run.2.max(b);
            }
            _ => runs.push((a, b, b)),
        }
    }
    hull_perimeter_of_runs(&runs, &mut Vec::new())
}

/// Outcome of splitting one leaf.
#[derive(Debug, Clone)]
pub struct LeafSplit {
    pub parent: Arc<HullLeaf>,
    pub left: Arc<HullLeaf>,
    pub right: Arc<HullLeaf>,
}

/// Partition of a data set where every cut is drawn on the convex hulls of
/// the data inside the chosen leaf. Leaves are shared between clones.
///
/// In angled mode candidate events run at an upper bound of each leaf's
/// measure (a child's hull perimeter never exceeds its parent's), and a
/// candidate on `(leaf, pair)` is kept with probability measure / bound.
/// This thinning yields the same process while only computing the hulls
/// that candidates land on. Bounds are tracked per partition so results do
/// not depend on which clone filled a shared cache first.
#[derive(Debug, Clone)]
pub struct HullPartition<'a> {
    data: &'a Features,
    mode: CutMode,
    pairs: Arc<Vec<DimensionPair>>,
    tree: BspTree,
    leaves: Vec<Arc<HullLeaf>>,
    bounds: Vec<Vec<f64>>,
    bound_sums: Vec<f64>,
}

impl<'a> HullPartition<'a> {
    /// Single leaf holding every row.
    pub fn new(data: &'a Features, mode: CutMode) -> Result<Self> {
        let root = Self::root_leaf(data, mode)?;
        Ok(Self::from_root(data, mode, root))
    }

    /// Root leaf with all of its measures computed, shared across particles.
    pub fn root_leaf(data: &Features, mode: CutMode) -> Result<Arc<HullLeaf>> {
        if data.d() < 2 {
            return Err(Error::config("features", "at least two dimensions are required"));
        }
        if data.n() == 0 {
            return Err(Error::EmptyPointSet);
        }
        let rows: Vec<u32> = (0..data.n() as u32).collect();
        let sorted = (0..data.d())
            .map(|k| {
                let col = data.col(k);
                let mut s = rows.clone();
                s.sort_by(|&i, &j| col[i as usize].total_cmp(&col[j as usize]));
                s
            })
            .collect();
        let pairs = all_pairs(data.d());
        let leaf = HullLeaf::build(0, rows, sorted, data, mode, n_components(mode, data.d()));
        for c in 0..leaf.exact.len() {
            leaf.measure(c, data, &pairs);
        }
        Ok(Arc::new(leaf))
    }

    pub fn from_root(data: &'a Features, mode: CutMode, root: Arc<HullLeaf>) -> Self {
        let pairs = Arc::new(all_pairs(data.d()));
        let b: Vec<f64> = (0..root.exact.len()).map(|c| root.measure(c, data, &pairs)).collect();
        let sum = b.iter().sum();
        HullPartition {
            data,
            mode,
            pairs,
            tree: BspTree::new(),
            leaves: vec![root],
            bounds: vec![b],
            bound_sums: vec![sum],
        }
    }

    pub fn data(&self) -> &'a Features {
        self.data
    }

    pub fn mode(&self) -> CutMode {
        self.mode
    }

    pub fn leaves(&self) -> &[Arc<HullLeaf>] {
        &self.leaves
    }

    pub fn into_tree(self) -> BspTree {
        self.tree
    }

    pub fn tree_mut(&mut self) -> &mut BspTree {
        &mut self.tree
    }

    /// Dimension pair of angled component `comp`.
    pub fn pair(&self, comp: usize) -> DimensionPair {
        self.pairs[comp]
    }

    /// Exact per-component measures of leaf `li`: pair hull perimeters in
    /// angled mode, extents in axis mode.
    pub fn exact_measures(&self, li: usize) -> Vec<f64> {
        let leaf = &self.leaves[li];
        (0..leaf.exact.len()).map(|c| leaf.measure(c, self.data, &self.pairs)).collect()
    }

    /// Exact total measure of all leaves.
    pub fn exact_rate(&self) -> f64 {
        (0..self.leaves.len()).map(|li| self.exact_measures(li).iter().sum::<f64>()).sum()
    }

    /// Convex hull of the leaf's data projected on `pair`.
    pub fn leaf_hull(&self, leaf: &HullLeaf, pair: DimensionPair) -> Result<geometry2d::ConvexPolygon2D> {
        let (ca, cb) = (self.data.col(pair.d1()), self.data.col(pair.d2()));
        let pts: Vec<Point2> = leaf
            .rows
            .iter()
            .map(|&r| Point2::new(ca[r as usize], cb[r as usize]))
            .collect();
        convex_hull(&pts)
    }

    /// Draws the leaf and the component jointly in proportion to their
    /// exact measures.
    pub fn pick_leaf_and_component<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize)> {
        let m: Vec<Vec<f64>> = (0..self.leaves.len()).map(|li| self.exact_measures(li)).collect();
        let li = pick_proportional(m.iter().map(|v| v.iter().sum::<f64>()), rng).ok_or(Error::NoCuttableLeaf)?;
        let comp = pick_proportional(m[li].iter().copied(), rng).ok_or(Error::NoCuttableLeaf)?;
        Ok((li, comp))
    }

    /// Cut on component `comp` of leaf `li`: a line drawn on the pair hull,
    /// or a uniform position within the extent.
    pub fn cut_on<R: Rng + ?Sized>(&self, li: usize, comp: usize, time: f64, rng: &mut R) -> Result<HyperplaneCut> {
        let leaf = &self.leaves[li];
        match self.mode {
            CutMode::Bsp => {
                let dims = self.pairs[comp];
                let hull = self.leaf_hull(leaf, dims)?;
                let line = geometry2d::sample_cut(&hull, rng)?;
                Ok(HyperplaneCut {
                    leaf_id: leaf.node,
                    dims,
                    line,
                    time,
                })
            }
            CutMode::AxisAligned => {
                let s = &leaf.sorted[comp];
                let lo = self.data.get(s[0] as usize, comp);
                let hi = self.data.get(s[s.len() - 1] as usize, comp);
                if !(hi > lo) {
                    return Err(Error::UnsplittableRegion);
                }
                let pos = loop {
                    let p = lo + rng.random::<f64>() * (hi - lo);
                    if p > lo && p < hi {
                        break p;
                    }
                };
                axis_cut(leaf.node, comp, pos, time)
            }
        }
    }

    /// Cut drawn from the exact measures, without thinning.
    pub fn sample_cut<R: Rng + ?Sized>(&self, time: f64, rng: &mut R) -> Result<HyperplaneCut> {
        let (li, comp) = self.pick_leaf_and_component(rng)?;
        self.cut_on(li, comp, time, rng)
    }

    /// Splits the leaf owning node `cut.leaf_id`.
    pub fn split(&mut self, cut: HyperplaneCut) -> Result<LeafSplit> {
        let li = self
            .leaves
            .iter()
            .position(|l| l.node == cut.leaf_id)
            .ok_or_else(|| Error::Data(format!("node {} is not a current leaf", cut.leaf_id)))?;
        let parent = self.leaves[li].clone();
        let (d1, d2) = (cut.dims.d1(), cut.dims.d2());
        if d2 >= self.data.d() {
            return Err(Error::InvalidDimensionPair(d1, d2));
        }
        let (ca, cb) = (self.data.col(d1), self.data.col(d2));
        let negative = |r: u32| cut.line.side(ca[r as usize], cb[r as usize]) == Side::Negative;

        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = parent.rows.iter().partition(|&&r| negative(r));
        let mut left_sorted = Vec::with_capacity(parent.sorted.len());
        let mut right_sorted = Vec::with_capacity(parent.sorted.len());
        let mut mark = vec![false; self.data.n()];
        for &r in &left_rows {
            mark[r as usize] = true;
        }
        for s in &parent.sorted {
            let mut l = Vec::with_capacity(left_rows.len());
            let mut r = Vec::with_capacity(right_rows.len());
            for &i in s {
                if mark[i as usize] {
                    l.push(i);
                } else {
                    r.push(i);
                }
            }
            left_sorted.push(l);
            right_sorted.push(r);
        }

        let (ln, rn) = self.tree.split(cut)?;
        let n_comp = parent.exact.len();
        let left = Arc::new(HullLeaf::build(ln, left_rows, left_sorted, self.data, self.mode, n_comp));
        let right = Arc::new(HullLeaf::build(rn, right_rows, right_sorted, self.data, self.mode, n_comp));
        let inherited: Vec<f64> = self.bounds[li].iter().map(|b| b * (1.0 + BOUND_SLACK) + 1e-12).collect();
        let child_bounds = |leaf: &HullLeaf| -> Vec<f64> {
            inherited
                .iter()
                .zip(&leaf.exact)
                .map(|(&b, e)| e.get().copied().unwrap_or(b))
                .collect()
        };
        let (lb, rb) = (child_bounds(&left), child_bounds(&right));
        self.bound_sums[li] = lb.iter().sum();
        self.bounds[li] = lb;
        self.bound_sums.push(rb.iter().sum());
        self.bounds.push(rb);
        self.leaves[li] = left.clone();
        self.leaves.push(right.clone());
        Ok(LeafSplit { parent, left, right })
    }
}

fn n_components(mode: CutMode, d: usize) -> usize {
    match mode {
        CutMode::Bsp => d * (d - 1) / 2,
        CutMode::AxisAligned => d,
    }
}

impl PartitionState for HullPartition<'_> {
    fn tree(&self) -> &BspTree {
        &self.tree
    }

    fn cumulative_rate(&self) -> f64 {
        self.bound_sums.iter().sum::<f64>().max(0.0)
    }

    fn propose<R: Rng + ?Sized>(&mut self, time: f64, rng: &mut R) -> Result<Option<HyperplaneCut>> {
        let li = pick_proportional(self.bound_sums.iter().copied(), rng).ok_or(Error::NoCuttableLeaf)?;
        let comp = pick_proportional(self.bounds[li].iter().copied(), rng).ok_or(Error::NoCuttableLeaf)?;
        let bound = self.bounds[li][comp];
        let exact = self.leaves[li].measure(comp, self.data, &self.pairs);
        if exact > bound {
            log::debug!("measure {exact} exceeds its bound {bound}");
        }
        self.bounds[li][comp] = exact;
        self.bound_sums[li] = self.bounds[li].iter().sum();
        if rng.random::<f64>() * bound < exact {
            self.cut_on(li, comp, time, rng).map(Some)
        } else {
            Ok(None)
        }
    }

    fn apply_cut(&mut self, cut: HyperplaneCut) -> Result<()> {
        self.split(cut).map(|_| ())
    }
}
