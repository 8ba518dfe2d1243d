#![allow(dead_code)]

use std::f64::consts::PI;

use std::collections::HashMap;

use bspf::geometry2d::{ConvexPolygon2D, Point2};
use bspf::tree::BspTree;
use bspf::Features;
use rand::Rng;

/// Hull vertices by checking every ordered pair as a candidate edge.
pub fn brute_force_hull(pts: &[Point2]) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        for (j, q) in pts.iter().enumerate() {
            if i == j || p.dist(q) < 1e-12 {
                continue;
            }
            let edge = pts.iter().all(|r| {
                let c = (q.a - p.a) * (r.b - p.b) - (q.b - p.b) * (r.a - p.a);
                c >= -1e-12
            });
            if edge {
                for v in [*p, *q] {
                    if !out.iter().any(|o| o.dist(&v) < 1e-12) {
                        out.push(v);
                    }
                }
            }
        }
    }
    // drop points lying strictly inside an edge
    let snapshot = out.clone();
    out.retain(|v| {
        !snapshot.iter().any(|a| {
            snapshot.iter().any(|b| {
                a.dist(b) > 1e-12
                    && a.dist(v) > 1e-12
                    && b.dist(v) > 1e-12
                    && (a.dist(v) + v.dist(b) - a.dist(b)).abs() < 1e-12
                    && pts.iter().all(|r| (b.a - a.a) * (r.b - a.b) - (b.b - a.b) * (r.a - a.a) >= -1e-12)
            })
        })
    });
    out
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize) -> Vec<Point2> {
    (0..n).map(|_| Point2::new(rng.random(), rng.random())).collect()
}

/// Convex polygon from the hull of random points in a random box.
pub fn random_convex_polygon<R: Rng>(rng: &mut R) -> ConvexPolygon2D {
    loop {
        let n = rng.random_range(3..20);
        let (sx, sy) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let pts: Vec<Point2> = (0..n)
            .map(|_| Point2::new(sx * rng.random::<f64>(), sy * rng.random::<f64>()))
            .collect();
        let h = bspf::geometry2d::convex_hull(&pts).unwrap();
        if h.len() >= 3 {
            return h;
        }
    }
}

/// Composite Simpson integral of `f` over `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Tabulated CDF of `theta` on `(0, pi]` with density proportional to the
/// projection length of `poly`.
pub struct ThetaCdf {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl ThetaCdf {
    pub fn new(poly: &ConvexPolygon2D, n: usize) -> Self {
        let h = PI / n as f64;
        let f = |t: f64| poly.projection(t).length();
        let mut grid = vec![0.0];
        let mut cdf = vec![0.0];
        let mut acc = 0.0;
        for i in 0..n {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            acc += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
            grid.push(b);
            cdf.push(acc);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        ThetaCdf { grid, cdf }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.grid.partition_point(|&g| g < t).clamp(1, self.grid.len() - 1);
        let (g0, g1) = (self.grid[i - 1], self.grid[i]);
        let w = ((t - g0) / (g1 - g0)).clamp(0.0, 1.0);
        self.cdf[i - 1] + w * (self.cdf[i] - self.cdf[i - 1])
    }
}

/// Canonical label of a partition of row indices: each leaf as its sorted
/// rows, leaves sorted.
pub fn partition_key(mut leaves: Vec<Vec<u32>>) -> String {
    for l in leaves.iter_mut() {
        l.sort_unstable();
    }
    leaves.retain(|l| !l.is_empty());
    leaves.sort();
    leaves
        .iter()
        .map(|l| l.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("|")
}

/// Partition of the rows of `x` induced by the leaves of `tree`.
pub fn induced_key(tree: &BspTree, x: &Features) -> String {
    let mut groups: HashMap<usize, Vec<u32>> = HashMap::new();
    for i in 0..x.n() {
        groups.entry(tree.route(x.row(i))).or_default().push(i as u32);
    }
    partition_key(groups.into_values().collect())
}

/// Log marginal likelihood of `y` under `N(0, s2 I + v0 11')`, via the
/// matrix determinant lemma and Sherman-Morrison.
pub fn oracle_leaf_log_ml(y: &[f64], s2: f64, v0: f64) -> f64 {
    let n = y.len() as f64;
    let s: f64 = y.iter().sum();
    let q: f64 = y.iter().map(|v| v * v).sum();
    let log_det = n * s2.ln() + (1.0 + n * v0 / s2).ln();
    let quad = (q - v0 * s * s / (s2 + n * v0)) / s2;
    -0.5 * (n * (2.0 * PI).ln() + log_det + quad)
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}
