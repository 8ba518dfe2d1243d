use std::collections::HashMap;

use super::full::{BoxDomain, Polytope};
use crate::error::Result;
use crate::geometry2d::{Side, EPS_GEOM};
use crate::tree::{BspTree, HyperplaneCut, Node};

/// Where a retained cut hangs in the restricted tree: under the root, or on
/// one side of a previously retained cut (identified by its original node).
#[derive(Debug, Clone, Copy)]
enum Attach {
    Root,
    Child(usize, Side),
}

struct Retained {
    original: usize,
    cut: HyperplaneCut,
    attach: Attach,
}

/// Restricts a tree simulated on `domain` to the box `sub`. A cut survives
/// when it splits the interior of (its node's region intersected with `sub`);
/// nodes whose restricted region lies on one side collapse into that child.
/// Event times are preserved.
pub fn restrict(tree: &BspTree, domain: &BoxDomain, sub: &BoxDomain) -> Result<BspTree> {
    let region = Polytope::from_box(domain).intersect_box(sub);
    let mut retained = Vec::new();
    let mut leaf_mu = Vec::new();
    walk(tree, 0, region, Attach::Root, &mut retained, &mut leaf_mu);

    retained.sort_by(|a, b| a.cut.time.total_cmp(&b.cut.time));
    let mut out = BspTree::new();
    let mut children: HashMap<usize, (usize, usize)> = HashMap::new();
    for r in &retained {
        let leaf = match r.attach {
            Attach::Root => 0,
            Attach::Child(p, Side::Negative) => children[&p].0,
            Attach::Child(p, Side::Positive) => children[&p].1,
        };
        let mut cut = r.cut;
        cut.leaf_id = leaf;
        let ids = out.split(cut)?;
        children.insert(r.original, ids);
    }
    for (attach, mu) in leaf_mu {
        let id = match attach {
            Attach::Root => 0,
            Attach::Child(p, Side::Negative) => children[&p].0,
            Attach::Child(p, Side::Positive) => children[&p].1,
        };
        out.set_leaf_mu(id, mu);
    }
    Ok(out)
}

fn walk(
    tree: &BspTree,
    node: usize,
    region: Polytope,
    attach: Attach,
    retained: &mut Vec<Retained>,
    leaf_mu: &mut Vec<(Attach, f64)>,
) {
    match tree.node(node) {
        Node::Leaf { mu } => leaf_mu.push((attach, *mu)),
        Node::Internal { cut, left, right } => {
            if region.is_empty() {
                // degenerate restriction: keep the value of the negative-most leaf
                return walk(tree, *left, region, attach, retained, leaf_mu);
            }
            let (lo, hi) = region
                .vertices()
                .iter()
                .map(|v| cut.line.offset(v[cut.dims.d1()], v[cut.dims.d2()]))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            if lo < -EPS_GEOM && hi > EPS_GEOM {
                retained.push(Retained {
                    original: node,
                    cut: *cut,
                    attach,
                });
                let neg = region.cut_side(cut, true);
                let pos = region.cut_side(cut, false);
                walk(tree, *left, neg, Attach::Child(node, Side::Negative), retained, leaf_mu);
                walk(tree, *right, pos, Attach::Child(node, Side::Positive), retained, leaf_mu);
            } else if hi <= EPS_GEOM {
                walk(tree, *left, region, attach, retained, leaf_mu);
            } else {
                walk(tree, *right, region, attach, retained, leaf_mu);
            }
        }
    }
}
