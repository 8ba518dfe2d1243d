use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{axis_cut, pick_proportional, CutMode, PartitionState};
use crate::error::{Error, Result};
use crate::geometry2d::{self, convex_hull, ConvexPolygon2D, Point2};
use crate::tree::{all_pairs, BspTree, DimensionPair, HyperplaneCut};

const EPS_POLY: f64 = 1e-9;

/// Axis-aligned box `[lo_k, hi_k]` in every dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::LengthMismatch {
                left: lo.len(),
                right: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::config("domain", "every side must have positive length"));
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn unit(d: usize) -> Self {
        BoxDomain {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    /// `[0, side]^d`.
    pub fn cube(d: usize, side: f64) -> Self {
        BoxDomain {
            lo: vec![0.0; d],
            hi: vec![side; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Half-space `coef . x <= rhs`.
#[derive(Debug, Clone, PartialEq)]
struct HalfSpace {
    coef: Vec<f64>,
    rhs: f64,
}

/// Bounded convex polytope given by half-spaces, with its vertices
/// enumerated exactly. Only meant for low dimension.
#[derive(Debug, Clone)]
pub struct Polytope {
    d: usize,
    constraints: Vec<HalfSpace>,
    vertices: Vec<Vec<f64>>,
}

impl Polytope {
    pub fn from_box(domain: &BoxDomain) -> Self {
        let d = domain.dim();
        let mut constraints = Vec::with_capacity(2 * d);
        for k in 0..d {
            let mut up = vec![0.0; d];
            up[k] = 1.0;
            constraints.push(HalfSpace {
                coef: up,
                rhs: domain.hi[k],
            });
            let mut down = vec![0.0; d];
            down[k] = -1.0;
            constraints.push(HalfSpace {
                coef: down,
                rhs: -domain.lo[k],
            });
        }
        let mut p = Polytope {
            d,
            constraints,
            vertices: Vec::new(),
        };
        p.refresh();
        p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Intersection with the side of `cut` given by `negative`.
    pub fn cut_side(&self, cut: &HyperplaneCut, negative: bool) -> Polytope {
        let (c, s) = cut.line.normal();
        let pos = cut.line.position();
        let mut coef = vec![0.0; self.d];
        let sign = if negative { 1.0 } else { -1.0 };
        coef[cut.dims.d1()] = sign * c;
        coef[cut.dims.d2()] = sign * s;
        self.with_constraint(HalfSpace { coef, rhs: sign * pos })
    }

    /// Intersection with a box.
    pub fn intersect_box(&self, domain: &BoxDomain) -> Polytope {
        let other = Polytope::from_box(domain);
        let mut p = self.clone();
        p.constraints.extend(other.constraints);
        p.refresh();
        p
    }

    fn with_constraint(&self, h: HalfSpace) -> Polytope {
        let mut p = self.clone();
        p.constraints.push(h);
        p.refresh();
        p
    }

    /// Projection of the vertices onto `pair`, as a convex polygon.
    pub fn project(&self, pair: DimensionPair) -> Result<ConvexPolygon2D> {
        let pts: Vec<Point2> = self
            .vertices
            .iter()
            .map(|v| Point2::new(v[pair.d1()], v[pair.d2()]))
            .collect();
        convex_hull(&pts)
    }

    /// Enumerates vertices as feasible intersections of `d` constraints and
    /// drops constraints that are not facets.
    fn refresh(&mut self) {
        let d = self.d;
        let k = self.constraints.len();
        let mut verts: Vec<Vec<f64>> = Vec::new();
        let mut combo: Vec<usize> = (0..d).collect();
        if k >= d {
            loop {
                if let Some(x) = self.solve(&combo) {
                    let feasible = self
                        .constraints
                        .iter()
                        .all(|h| dot(&h.coef, &x) <= h.rhs + EPS_POLY);
                    if feasible && !verts.iter().any(|v| sup_dist(v, &x) <= EPS_POLY) {
                        verts.push(x);
                    }
                }
                if !next_combination(&mut combo, k) {
                    break;
                }
            }
        }
        // a facet of a d-polytope touches at least d vertices
        self.constraints.retain(|h| {
            verts
                .iter()
                .filter(|v| (dot(&h.coef, v) - h.rhs).abs() <= EPS_POLY)
                .count()
                >= d
        });
        self.vertices = verts;
    }

    fn solve(&self, combo: &[usize]) -> Option<Vec<f64>> {
        let d = self.d;
        let a = DMatrix::from_fn(d, d, |i, j| self.constraints[combo[i]].coef[j]);
        let b = DVector::from_fn(d, |i, _| self.constraints[combo[i]].rhs);
        let lu = a.lu();
        let det = lu.determinant();
        if det.abs() < 1e-12 {
            return None;
        }
        lu.solve(&b).map(|x| x.iter().copied().collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone)]
struct FullLeaf {
    node: usize,
    poly: Polytope,
    /// Per pair projection (angled mode); empty in axis mode.
    projections: Vec<ConvexPolygon2D>,
    extents: Vec<(f64, f64)>,
    measures: Vec<f64>,
    rate: f64,
}

impl FullLeaf {
    fn build(node: usize, poly: Polytope, pairs: &[DimensionPair], mode: CutMode) -> Result<Self> {
        let d = poly.dim();
        let extents: Vec<(f64, f64)> = (0..d)
            .map(|k| {
                poly.vertices().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v[k]), hi.max(v[k]))
                })
            })
            .collect();
        let (projections, measures) = match mode {
            CutMode::Bsp => {
                let projections = pairs.iter().map(|&p| poly.project(p)).collect::<Result<Vec<_>>>()?;
                let measures: Vec<f64> = projections.iter().map(|p| p.perimeter()).collect();
                (projections, measures)
            }
            CutMode::AxisAligned => (Vec::new(), extents.iter().map(|(lo, hi)| hi - lo).collect()),
        };
        let rate = measures.iter().sum();
        Ok(FullLeaf {
            node,
            poly,
            projections,
            extents,
            measures,
            rate,
        })
    }
}

/// Partition of a box domain with every leaf tracked exactly.
#[derive(Debug, Clone)]
pub struct FullPartition {
    domain: BoxDomain,
    mode: CutMode,
    pairs: Vec<DimensionPair>,
    tree: BspTree,
    leaves: Vec<FullLeaf>,
}

impl FullPartition {
    pub fn new(domain: BoxDomain, mode: CutMode) -> Result<Self> {
        if domain.dim() < 2 {
            return Err(Error::config("domain", "at least two dimensions are required"));
        }
        let pairs = all_pairs(domain.dim());
        let root = FullLeaf::build(0, Polytope::from_box(&domain), &pairs, mode)?;
        Ok(FullPartition {
            domain,
            mode,
            pairs,
            tree: BspTree::new(),
            leaves: vec![root],
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn into_tree(self) -> BspTree {
        self.tree
    }

    /// Polytopes of the current leaves keyed by node id.
    pub fn leaf_regions(&self) -> impl Iterator<Item = (usize, &Polytope)> {
        self.leaves.iter().map(|l| (l.node, &l.poly))
    }

    /// Per-leaf measure, as used for leaf selection.
    pub fn leaf_rates(&self) -> Vec<(usize, f64)> {
        self.leaves.iter().map(|l| (l.node, l.rate)).collect()
    }

    /// Draws the leaf, the component and the line in proportion to the
    /// exact measures.
    pub fn sample_cut<R: Rng + ?Sized>(&self, time: f64, rng: &mut R) -> Result<HyperplaneCut> {
        let li = pick_proportional(self.leaves.iter().map(|l| l.rate), rng).ok_or(Error::NoCuttableLeaf)?;
        let leaf = &self.leaves[li];
        let comp = pick_proportional(leaf.measures.iter().copied(), rng).ok_or(Error::NoCuttableLeaf)?;
        match self.mode {
            CutMode::Bsp => {
                let line = geometry2d::sample_cut(&leaf.projections[comp], rng)?;
                Ok(HyperplaneCut {
                    leaf_id: leaf.node,
                    dims: self.pairs[comp],
                    line,
                    time,
                })
            }
            CutMode::AxisAligned => {
                let (lo, hi) = leaf.extents[comp];
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
}

impl PartitionState for FullPartition {
    fn tree(&self) -> &BspTree {
        &self.tree
    }

    fn cumulative_rate(&self) -> f64 {
        self.leaves.iter().map(|l| l.rate).sum()
    }

    fn propose<R: Rng + ?Sized>(&mut self, time: f64, rng: &mut R) -> Result<Option<HyperplaneCut>> {
        self.sample_cut(time, rng).map(Some)
    }

    fn apply_cut(&mut self, cut: HyperplaneCut) -> Result<()> {
        let li = self
            .leaves
            .iter()
            .position(|l| l.node == cut.leaf_id)
            .ok_or_else(|| Error::Data(format!("node {} is not a current leaf", cut.leaf_id)))?;
        let neg = self.leaves[li].poly.cut_side(&cut, true);
        let pos = self.leaves[li].poly.cut_side(&cut, false);
        if neg.is_empty() || pos.is_empty() {
            return Err(Error::CutMissesRegion);
        }
        let (ln, rn) = self.tree.split(cut)?;
        let left = FullLeaf::build(ln, neg, &self.pairs, self.mode)?;
        let right = FullLeaf::build(rn, pos, &self.pairs, self.mode)?;
        self.leaves[li] = left;
        self.leaves.push(right);
        Ok(())
    }
}
