//! Binary partition trees whose internal nodes hold angled cuts in a pair of
//! dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry2d::{DirectedCutLine2D, Side};

/// An unordered pair of distinct feature dimensions, stored with `d1 < d2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct DimensionPair {
    d1: usize,
    d2: usize,
}

impl DimensionPair {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => Ok(DimensionPair { d1: i, d2: j }),
            std::cmp::Ordering::Greater => Ok(DimensionPair { d1: j, d2: i }),
            std::cmp::Ordering::Equal => Err(Error::InvalidDimensionPair(i, j)),
        }
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }
}

impl TryFrom<(usize, usize)> for DimensionPair {
    type Error = Error;
    fn try_from((i, j): (usize, usize)) -> Result<Self> {
        if i >= j {
            return Err(Error::InvalidDimensionPair(i, j));
        }
        DimensionPair::new(i, j)
    }
}

impl From<DimensionPair> for (usize, usize) {
    fn from(p: DimensionPair) -> Self {
        (p.d1, p.d2)
    }
}

/// All `d(d-1)/2` pairs in lexicographic order.
pub fn all_pairs(d: usize) -> Vec<DimensionPair> {
    let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(DimensionPair { d1: i, d2: j });
        }
    }
    out
}

/// One cut: the node it split, its free dimensions, the line in the
/// projected plane and the event time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneCut {
    pub leaf_id: usize,
    pub dims: DimensionPair,
    pub line: DirectedCutLine2D,
    pub time: f64,
}

impl HyperplaneCut {
    #[inline]
    pub fn side(&self, x: &[f64]) -> Side {
        self.line.side(x[self.dims.d1], x[self.dims.d2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        mu: f64,
    },
    Internal {
        cut: HyperplaneCut,
        left: usize,
        right: usize,
    },
}

/// Arena-backed tree. The root is node 0 and the `l`-th cut (in time order)
/// creates nodes `2l + 1` (negative side) and `2l + 2` (positive side).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct BspTree {
    nodes: Vec<Node>,
    parents: Vec<Option<usize>>,
}

impl TryFrom<Vec<Node>> for BspTree {
    type Error = Error;
    fn try_from(nodes: Vec<Node>) -> Result<Self> {
        BspTree::from_nodes(nodes)
    }
}

impl From<BspTree> for Vec<Node> {
    fn from(t: BspTree) -> Self {
        t.nodes
    }
}

impl Default for BspTree {
    fn default() -> Self {
        Self::new()
    }
}

impl BspTree {
    /// Single leaf with mean zero.
    pub fn new() -> Self {
        BspTree {
            nodes: vec![Node::Leaf { mu: 0.0 }],
            parents: vec![None],
        }
    }

    /// Rebuilds a tree from its arena, checking every structural invariant.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() % 2 == 0 {
            return Err(Error::Decode(format!("tree arena of length {}", nodes.len())));
        }
        let mut parents = vec![None; nodes.len()];
        for (id, node) in nodes.iter().enumerate() {
            if let Node::Internal { cut, left, right } = node {
                if *left >= nodes.len() || *right != left + 1 || left % 2 != 1 || cut.leaf_id != id {
                    return Err(Error::Decode(format!("bad children at node {id}")));
                }
                if parents[*left].is_some() {
                    return Err(Error::Decode(format!("node {left} has two parents")));
                }
                parents[*left] = Some(id);
                parents[*right] = Some(id);
            }
        }
        if parents.iter().skip(1).any(|p| p.is_none()) {
            return Err(Error::Decode("orphan node".into()));
        }
        let tree = BspTree { nodes, parents };
        tree.check_times()?;
        Ok(tree)
    }

    fn check_times(&self) -> Result<()> {
        for (id, node) in self.nodes.iter().enumerate() {
            if let Node::Internal { cut, .. } = node {
                if !(cut.time > 0.0) || !cut.time.is_finite() {
                    return Err(Error::Decode(format!("cut time {} at node {id}", cut.time)));
                }
                if let Some(p) = self.parents[id] {
                    if let Node::Internal { cut: pc, .. } = &self.nodes[p] {
                        if pc.time >= cut.time {
                            return Err(Error::Decode(format!("cut times not increasing at node {id}")));
                        }
                    }
                }
            }
        }
        // creation order must follow time order
        let times: Vec<f64> = self.cuts().map(|c| c.time).collect();
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Decode("cuts not in time order".into()));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parents[id]
    }

    pub fn n_cuts(&self) -> usize {
        (self.nodes.len() - 1) / 2
    }

    pub fn n_leaves(&self) -> usize {
        self.n_cuts() + 1
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        matches!(self.nodes[id], Node::Leaf { .. })
    }

    /// Replaces leaf `leaf` with an internal node; returns `(left, right)`.
    pub fn split(&mut self, cut: HyperplaneCut) -> Result<(usize, usize)> {
        let leaf = cut.leaf_id;
        if leaf >= self.nodes.len() || !self.is_leaf(leaf) {
            return Err(Error::Data(format!("node {leaf} is not a leaf")));
        }
        if let Some(last) = self.cuts().last() {
            if cut.time < last.time {
                return Err(Error::Data(format!(
                    "cut at time {} precedes the previous cut at {}",
                    cut.time, last.time
                )));
            }
        }
        if let Some(p) = self.parents[leaf] {
            if let Node::Internal { cut: pc, .. } = &self.nodes[p] {
                if pc.time >= cut.time {
                    return Err(Error::Data("cut times must increase along a path".into()));
                }
            }
        }
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(Node::Leaf { mu: 0.0 });
        self.nodes.push(Node::Leaf { mu: 0.0 });
        self.parents.push(Some(leaf));
        self.parents.push(Some(leaf));
        self.nodes[leaf] = Node::Internal { cut, left, right };
        Ok((left, right))
    }

    /// Leaf reached by `x`.
    pub fn route(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Internal { cut, left, right } => {
                    id = match cut.side(x) {
                        Side::Negative => *left,
                        Side::Positive => *right,
                    }
                }
            }
        }
    }

    /// Mean of the leaf reached by `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.leaf_mu(self.route(x))
    }

    pub fn leaf_mu(&self, id: usize) -> f64 {
        match &self.nodes[id] {
            Node::Leaf { mu } => *mu,
            Node::Internal { .. } => panic!("node {id} is not a leaf"),
        }
    }

    pub fn set_leaf_mu(&mut self, id: usize, value: f64) {
        match &mut self.nodes[id] {
            Node::Leaf { mu } => *mu = value,
            Node::Internal { .. } => panic!("node {id} is not a leaf"),
        }
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.is_leaf(i))
    }

    /// Cuts in creation (= time) order.
    pub fn cuts(&self) -> impl Iterator<Item = &HyperplaneCut> + '_ {
        (0..self.n_cuts()).map(move |l| match &self.nodes[self.parents[2 * l + 1].expect("child has parent")] {
            Node::Internal { cut, .. } => cut,
            Node::Leaf { .. } => unreachable!("parent of a child is internal"),
        })
    }

    pub fn depth(&self) -> usize {
        (0..self.nodes.len())
            .map(|mut id| {
                let mut d = 0;
                while let Some(p) = self.parents[id] {
                    d += 1;
                    id = p;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }
}
