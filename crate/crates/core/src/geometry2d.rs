//! Planar convex geometry used by every cut: hulls, perimeters, projections
//! onto a direction, perimeter-weighted direction sampling and splitting a
//! convex polygon with a line.
//!
//! A cut line is described by an angle `theta` in `(0, pi]` and a point `u`
//! on the projection axis `(cos theta, sin theta)`. The line passes through
//! `u` orthogonally to that axis. The side of a point is the sign of
//! `cos(theta) * (a - u.a) + sin(theta) * (b - u.b)`, which is the signed
//! distance from the line and never goes through `tan(theta)`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance in normalised `[0, 1]` coordinates.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub a: f64,
    pub b: f64,
}

impl Point2 {
    pub const fn new(a: f64, b: f64) -> Self {
        Point2 { a, b }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.a - other.a).hypot(self.b - other.b)
    }

    fn lex_cmp(&self, other: &Point2) -> Ordering {
        self.a
            .total_cmp(&other.a)
            .then_with(|| self.b.total_cmp(&other.b))
    }
}

/// Cross product of `(p - o)` and `(q - o)`; positive for a left turn.
#[inline]
pub fn cross(o: &Point2, p: &Point2, q: &Point2) -> f64 {
    (p.a - o.a) * (q.b - o.b) - (p.b - o.b) * (q.a - o.a)
}

/// Convex polygon with counter-clockwise vertices. One vertex is a point and
/// two vertices are a segment; both are valid degenerate polygons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon2D {
    vertices: Vec<Point2>,
}

impl ConvexPolygon2D {
    /// Validates orientation and convexity of an explicit vertex list.
    pub fn from_vertices(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinitePoint);
        }
        let n = vertices.len();
        if n >= 3 {
            for i in 0..n {
                let c = cross(&vertices[i], &vertices[(i + 1) % n], &vertices[(i + 2) % n]);
                if c < -EPS_GEOM {
                    return Err(Error::InvalidPolygon(format!(
                        "reflex or clockwise turn at vertex {}",
                        (i + 1) % n
                    )));
                }
            }
        }
        Ok(ConvexPolygon2D { vertices })
    }

    /// Axis-aligned rectangle `[a0, a1] x [b0, b1]`.
    pub fn rectangle(a0: f64, a1: f64, b0: f64, b1: f64) -> Self {
        ConvexPolygon2D {
            vertices: vec![
                Point2::new(a0, b0),
                Point2::new(a1, b0),
                Point2::new(a1, b1),
                Point2::new(a0, b1),
            ],
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn is_segment(&self) -> bool {
        self.vertices.len() == 2
    }

    /// Shoelace area; zero for points and segments.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..n {
            let p = &self.vertices[i];
            let q = &self.vertices[(i + 1) % n];
            s += p.a * q.b - q.a * p.b;
        }
        0.5 * s
    }

    /// Boundary length. A segment of length `L` has boundary measure `2L`
    /// (limit of thin rectangles); a point has zero.
    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        if n < 2 {
            return 0.0;
        }
        // For n == 2 the closed walk visits the segment twice.
        (0..n)
            .map(|i| self.vertices[i].dist(&self.vertices[(i + 1) % n]))
            .sum()
    }

    /// Orthogonal projection onto the axis `(cos theta, sin theta)`.
    pub fn projection(&self, theta: f64) -> Projection {
        let (s, c) = theta.sin_cos();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.vertices {
            let t = c * p.a + s * p.b;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        Projection { lo, hi }
    }

    /// Largest vertex-to-vertex distance, equal to `max_theta l(theta)`.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut best = 0.0f64;
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                best = best.max(v[i].dist(&v[j]));
            }
        }
        best
    }
}

/// Interval covered by a polygon on a projection axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub lo: f64,
    pub hi: f64,
}

impl Projection {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `l(theta)`: the projected segment of `poly` on direction `theta`.
pub fn projection_segment(poly: &ConvexPolygon2D, theta: f64) -> Projection {
    poly.projection(theta)
}

/// Minimal counter-clockwise convex hull (Andrew's monotone chain). Points
/// closer than [`EPS_GEOM`] to a hull edge are dropped as collinear.
pub fn convex_hull(points: &[Point2]) -> Result<ConvexPolygon2D> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinitePoint);
    }
    let mut pts = points.to_vec();
    pts.sort_by(Point2::lex_cmp);
    pts.dedup_by(|p, q| p.dist(q) <= EPS_GEOM);
    if pts.len() <= 2 {
        return Ok(ConvexPolygon2D { vertices: pts });
    }

    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() + 1);
    let push_chain = |hull: &mut Vec<Point2>, p: Point2, floor: usize| {
        while hull.len() >= floor + 2 {
            let o = hull[hull.len() - 2];
            let q = hull[hull.len() - 1];
            if left_turn_beyond_eps(&o, &q, &p) {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    };
    for &p in &pts {
        push_chain(&mut hull, p, 0);
    }
    let lower_len = hull.len();
    for &p in pts.iter().rev().skip(1) {
        push_chain(&mut hull, p, lower_len - 1);
    }
    hull.pop();
    if hull.len() == 2 && hull[0].dist(&hull[1]) <= EPS_GEOM {
        hull.pop();
    }
    Ok(ConvexPolygon2D { vertices: hull })
}

/// True when `q` is a strict left turn on the way from `o` to `p`, i.e. `q`
/// sits more than `EPS_GEOM` to the right of segment `o -> p`.
#[inline]
fn left_turn_beyond_eps(o: &Point2, q: &Point2, p: &Point2) -> bool {
    let c = cross(o, q, p);
    c > EPS_GEOM * o.dist(p)
}

/// Perimeter of the hull of points that are already sorted by their first
/// coordinate, given as runs `(a, b_min, b_max)` of equal first
/// coordinate. Agrees with `convex_hull(..).perimeter()`. `scratch` is
/// reused between calls to avoid allocation.
pub fn hull_perimeter_of_runs(runs: &[(f64, f64, f64)], scratch: &mut Vec<Point2>) -> f64 {
    match runs.len() {
        0 => return 0.0,
        1 => return 2.0 * (runs[0].2 - runs[0].1),
        _ => {}
    }
    let chain_len = |scratch: &mut Vec<Point2>, upper: bool| -> f64 {
        scratch.clear();
        for &(a, lo, hi) in runs {
            let p = Point2::new(a, if upper { hi } else { lo });
            while scratch.len() >= 2 {
                let o = scratch[scratch.len() - 2];
                let q = scratch[scratch.len() - 1];
                let keep = if upper {
                    // upper chain walked left to right turns clockwise
                    -cross(&o, &q, &p) > EPS_GEOM * o.dist(&p)
                } else {
                    cross(&o, &q, &p) > EPS_GEOM * o.dist(&p)
                };
                if keep {
                    break;
                }
                scratch.pop();
            }
            scratch.push(p);
        }
        scratch.windows(2).map(|w| w[0].dist(&w[1])).sum()
    };
    let first = runs[0];
    let last = runs[runs.len() - 1];
    chain_len(scratch, false) + chain_len(scratch, true) + (first.2 - first.1) + (last.2 - last.1)
}

/// Draws `theta` in `(0, pi]` with density proportional to `l(theta)`, by
/// rejection against the diameter envelope.
pub fn sample_cut_direction<R: Rng + ?Sized>(poly: &ConvexPolygon2D, rng: &mut R) -> Result<f64> {
    if poly.perimeter() <= 0.0 {
        return Err(Error::UnsplittableRegion);
    }
    let envelope = poly.diameter();
    loop {
        let theta = PI * (1.0 - rng.random::<f64>());
        let len = poly.projection(theta).length();
        if rng.random::<f64>() * envelope < len {
            return Ok(theta);
        }
    }
}

/// Draws the cut position uniformly on `l(theta)`.
pub fn sample_cut_position<R: Rng + ?Sized>(
    poly: &ConvexPolygon2D,
    theta: f64,
    rng: &mut R,
) -> Result<DirectedCutLine2D> {
    let proj = poly.projection(theta);
    if !(proj.length() > 0.0) {
        return Err(Error::ZeroProjection { theta });
    }
    loop {
        let s = proj.lo + rng.random::<f64>() * proj.length();
        if s > proj.lo && s < proj.hi {
            return DirectedCutLine2D::at_position(theta, s);
        }
    }
}

/// Direction and position in one call.
pub fn sample_cut<R: Rng + ?Sized>(poly: &ConvexPolygon2D, rng: &mut R) -> Result<DirectedCutLine2D> {
    let theta = sample_cut_direction(poly, rng)?;
    sample_cut_position(poly, theta, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Negative,
    Positive,
}

#[derive(Serialize, Deserialize)]
struct LineRepr {
    theta: f64,
    u: Point2,
}

/// A cut line orthogonal to direction `theta` through the point `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LineRepr", into = "LineRepr")]
pub struct DirectedCutLine2D {
    theta: f64,
    u: Point2,
    cos: f64,
    sin: f64,
}

impl TryFrom<LineRepr> for DirectedCutLine2D {
    type Error = Error;
    fn try_from(r: LineRepr) -> Result<Self> {
        DirectedCutLine2D::new(r.theta, r.u)
    }
}

impl From<DirectedCutLine2D> for LineRepr {
    fn from(l: DirectedCutLine2D) -> Self {
        LineRepr {
            theta: l.theta,
            u: l.u,
        }
    }
}

impl DirectedCutLine2D {
    pub fn new(theta: f64, u: Point2) -> Result<Self> {
        if !(theta > 0.0 && theta <= PI) {
            return Err(Error::InvalidPolygon(format!("cut angle {theta} outside (0, pi]")));
        }
        if !u.is_finite() {
            return Err(Error::NonFinitePoint);
        }
        let (sin, cos) = theta.sin_cos();
        Ok(DirectedCutLine2D { theta, u, cos, sin })
    }

    /// Line whose projection onto the `theta` axis sits at scalar `s`.
    pub fn at_position(theta: f64, s: f64) -> Result<Self> {
        let (sin, cos) = theta.sin_cos();
        Self::new(theta, Point2::new(s * cos, s * sin))
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn u(&self) -> Point2 {
        self.u
    }

    /// Scalar position of `u` along the projection axis.
    pub fn position(&self) -> f64 {
        self.cos * self.u.a + self.sin * self.u.b
    }

    /// Unit normal `(cos theta, sin theta)`.
    pub fn normal(&self) -> (f64, f64) {
        (self.cos, self.sin)
    }

    /// Signed distance of `(a, b)` from the line.
    #[inline]
    pub fn offset(&self, a: f64, b: f64) -> f64 {
        self.cos * (a - self.u.a) + self.sin * (b - self.u.b)
    }

    #[inline]
    pub fn side(&self, a: f64, b: f64) -> Side {
        if self.offset(a, b) <= EPS_GEOM {
            Side::Negative
        } else {
            Side::Positive
        }
    }
}

/// Side of `point`; points within `EPS_GEOM` of the line are negative.
pub fn side_of(point: Point2, cut: &DirectedCutLine2D) -> Side {
    cut.side(point.a, point.b)
}

/// Splits `poly` along `cut`, returning `(negative, positive)` parts.
pub fn split_polygon(
    poly: &ConvexPolygon2D,
    cut: &DirectedCutLine2D,
) -> Result<(ConvexPolygon2D, ConvexPolygon2D)> {
    let v = poly.vertices();
    let offsets: Vec<f64> = v.iter().map(|p| cut.offset(p.a, p.b)).collect();
    let min = offsets.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= EPS_GEOM || min >= -EPS_GEOM {
        return Err(Error::CutMissesRegion);
    }
    let n = v.len();
    let mut neg = Vec::with_capacity(n + 2);
    let mut pos = Vec::with_capacity(n + 2);
    for i in 0..n {
        let j = (i + 1) % n;
        let (p, q) = (v[i], v[j]);
        let (fp, fq) = (offsets[i], offsets[j]);
        if fp <= 0.0 {
            neg.push(p);
        }
        if fp >= 0.0 {
            pos.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            let x = Point2::new(p.a + t * (q.a - p.a), p.b + t * (q.b - p.b));
            neg.push(x);
            pos.push(x);
        }
    }
    Ok((clean_ring(neg), clean_ring(pos)))
}

/// Removes repeated and collinear vertices from a convex ring.
fn clean_ring(mut ring: Vec<Point2>) -> ConvexPolygon2D {
    ring.dedup_by(|p, q| p.dist(q) <= EPS_GEOM);
    while ring.len() > 1 && ring[0].dist(&ring[ring.len() - 1]) <= EPS_GEOM {
        ring.pop();
    }
    if ring.len() >= 3 {
        let mut changed = true;
        while changed && ring.len() >= 3 {
            changed = false;
            let n = ring.len();
            for i in 0..n {
                let o = ring[(i + n - 1) % n];
                let p = ring[i];
                let q = ring[(i + 1) % n];
                if cross(&o, &p, &q).abs() <= EPS_GEOM * o.dist(&q) {
                    ring.remove(i);
                    changed = true;
                    break;
                }
            }
        }
    }
    ConvexPolygon2D { vertices: ring }
}
