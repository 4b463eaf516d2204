//! Convex polygon primitives: diameter, width, projective width, vertical
//! slicing and the w-frame normalization used by the rest of the pipeline.
//!
//! Width is computed from its slicing definition (the longest chord in a
//! direction, minimized over candidate directions) while projective width
//! uses rotating calipers on the support function. For planar convex sets the
//! two agree, and keeping the computations separate lets the test suite
//! check that rather than assume it.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cross products below this fraction of `|a||b|` count as collinear.
const COLLINEAR_TOL: f64 = 1e-12;
/// Relative tolerance for treating two candidate widths as a tie.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist2(self, o: Point) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    /// Rotate counterclockwise by `angle` radians about the origin.
    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// A unit direction in the plane, identified with its angle in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
}

impl Direction {
    pub fn from_angle(theta: f64) -> Self {
        let mut t = theta.rem_euclid(PI);
        if t >= PI {
            t = 0.0;
        }
        Direction { theta: t }
    }

    pub fn vector(self) -> Point {
        Point::new(self.theta.cos(), self.theta.sin())
    }
}

/// Counterclockwise, strictly convex polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Validates and canonicalizes a vertex list.
    ///
    /// Consecutive duplicates are dropped, clockwise input is reversed and
    /// collinear vertices are merged. Anything that is not strictly convex
    /// afterwards is rejected.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::invalid("non-finite vertex coordinate"));
        }
        let mut pts: Vec<Point> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        while pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() < 3 {
            return Err(Error::Degenerate(format!("{} distinct vertices", pts.len())));
        }
        let scale = bbox_diag(&pts);
        let a = signed_area(&pts);
        if a.abs() <= 1e-14 * scale * scale {
            return Err(Error::Degenerate("zero area".into()));
        }
        if a < 0.0 {
            pts.reverse();
        }

        // Merge collinear runs; a reversal (spike) is a convexity violation.
        loop {
            let n = pts.len();
            if n < 3 {
                return Err(Error::Degenerate("collapsed after merging collinear vertices".into()));
            }
            let mut removed = false;
            for i in 0..n {
                let prev = pts[(i + n - 1) % n];
                let cur = pts[i];
                let next = pts[(i + 1) % n];
                let a = cur - prev;
                let b = next - cur;
                let cr = a.cross(b);
                if cr.abs() <= COLLINEAR_TOL * a.norm() * b.norm() {
                    if a.dot(b) < 0.0 {
                        return Err(Error::NotConvex(format!("spike at vertex {i}")));
                    }
                    pts.remove(i);
                    removed = true;
                    break;
                }
            }
            if !removed {
                break;
            }
        }

        let n = pts.len();
        let mut turning = 0.0;
        for i in 0..n {
            let a = pts[(i + 1) % n] - pts[i];
            let b = pts[(i + 2) % n] - pts[(i + 1) % n];
            let cr = a.cross(b);
            if cr <= 0.0 {
                return Err(Error::NotConvex(format!("reflex turn at vertex {}", (i + 1) % n)));
            }
            turning += cr.atan2(a.dot(b));
        }
        if (turning - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::NotConvex(format!("total turning {turning} != 2pi (self-intersecting)")));
        }
        Ok(ConvexPolygon { vertices: pts })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let v = &self.vertices;
        let n = v.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = v[i];
            let q = v[(i + 1) % n];
            let c = p.cross(q);
            a2 += c;
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Applies a map that preserves convexity (similarity or affine).
    /// Orientation is restored if the map reflects.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<ConvexPolygon> {
        ConvexPolygon::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    /// Reflects `x -> d - x`, keeping counterclockwise order.
    pub fn mirror_x(&self, d: f64) -> ConvexPolygon {
        let mut v: Vec<Point> = self.vertices.iter().map(|p| Point::new(d - p.x, p.y)).collect();
        v.reverse();
        ConvexPolygon { vertices: v }
    }

    /// Diameter by rotating calipers over antipodal pairs.
    pub fn diameter(&self) -> f64 {
        self.diameter_pair().0
    }

    /// Diameter with the indices of one realizing vertex pair.
    pub fn diameter_pair(&self) -> (f64, usize, usize) {
        let p = &self.vertices;
        let n = p.len();
        let mut best = (-1.0, 0, 0);
        let mut j = 1 % n;
        for i in 0..n {
            let i1 = (i + 1) % n;
            let e = p[i1] - p[i];
            for _ in 0..n {
                let jn = (j + 1) % n;
                if e.cross(p[jn] - p[j]) > 0.0 {
                    j = jn;
                } else {
                    break;
                }
            }
            // Neighbouring pairs cover ties between parallel edges.
            for a in [i, i1] {
                for b in [(j + n - 1) % n, j, (j + 1) % n] {
                    let d2 = p[a].dist2(p[b]);
                    if d2 > best.0 {
                        best = (d2, a.min(b), a.max(b));
                    }
                }
            }
        }
        (best.0.sqrt(), best.1, best.2)
    }

    /// Support width for every edge direction: the distance from edge `i`'s
    /// line to its farthest vertex. Returned as `(width, edge index)`.
    fn edge_support_widths(&self) -> Vec<(f64, usize)> {
        let p = &self.vertices;
        let n = p.len();
        let mut out = Vec::with_capacity(n);
        let mut j = 1 % n;
        for i in 0..n {
            let i1 = (i + 1) % n;
            let e = p[i1] - p[i];
            for _ in 0..n {
                let jn = (j + 1) % n;
                if e.cross(p[jn] - p[j]) > 0.0 {
                    j = jn;
                } else {
                    break;
                }
            }
            let len = e.norm();
            let h = [j, (j + 1) % n, (j + n - 1) % n]
                .iter()
                .map(|&k| e.cross(p[k] - p[i]) / len)
                .fold(f64::NEG_INFINITY, f64::max);
            out.push((h, i));
        }
        out
    }

    fn edge_angle(&self, i: usize) -> f64 {
        let n = self.vertices.len();
        let e = self.vertices[(i + 1) % n] - self.vertices[i];
        e.y.atan2(e.x).rem_euclid(2.0 * PI)
    }

    /// Projective width: the smallest extent of an orthogonal projection.
    ///
    /// The returned direction `v` is the one along which the projection
    /// collapses (projection onto the line orthogonal to `v` is shortest), so
    /// after rotating `v` onto the x-axis the y-extent equals the width.
    pub fn projective_width(&self) -> (f64, Direction) {
        let c = self.projective_width_candidate();
        (c.width, Direction::from_angle(c.raw_angle))
    }

    fn projective_width_candidate(&self) -> Candidate {
        let cands: Vec<Candidate> = self
            .edge_support_widths()
            .into_iter()
            .map(|(w, i)| Candidate { width: w, raw_angle: self.edge_angle(i) })
            .collect();
        pick_candidate(&cands)
    }

    /// Width from the slicing definition: for each edge direction `v`, the
    /// longest chord orthogonal to `v`; minimized over edge directions.
    /// O(n^2); use [`projective_width`](Self::projective_width) for large n.
    pub fn width(&self) -> (f64, Direction) {
        let n = self.vertices.len();
        let cands: Vec<Candidate> = (0..n)
            .map(|i| {
                let ang = self.edge_angle(i);
                Candidate { width: self.max_chord_orthogonal_to(ang), raw_angle: ang }
            })
            .collect();
        let c = pick_candidate(&cands);
        (c.width, Direction::from_angle(c.raw_angle))
    }

    /// Longest chord along the direction orthogonal to angle `theta`.
    pub fn max_chord_orthogonal_to(&self, theta: f64) -> f64 {
        let (sn, cs) = (-theta).sin_cos();
        let rotated: Vec<Point> = self.vertices.iter().map(|p| Point::new(cs * p.x - sn * p.y, sn * p.x + cs * p.y)).collect();
        Chains::new(&rotated).max_vertical_chord()
    }

    /// Lower and upper boundary ordinates of the vertical chord at `x`, for
    /// any `x` within the polygon's x-range. Unlike [`slice`], no frame is
    /// assumed.
    pub fn vertical_chord(&self, x: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.bounds();
        let tol = 1e-12 * (hi.x - lo.x).max(1.0);
        if !(x >= lo.x - tol && x <= hi.x + tol) {
            return Err(Error::OutOfRange { what: "x", value: x, lo: lo.x, hi: hi.x });
        }
        Ok(Chains::new(&self.vertices).chord(x.clamp(lo.x, hi.x)))
    }

    /// Boundary chains as functions of x, for repeated evaluation.
    pub fn chains(&self) -> Chains {
        Chains::new(&self.vertices)
    }

    /// Checks the translation and alignment conditions of the w-frame and
    /// returns the width. Scale is not checked.
    pub fn check_w_aligned(&self) -> Result<f64> {
        let (lo, hi) = self.bounds();
        let scale = (hi.x - lo.x).max(hi.y - lo.y);
        if lo.x.abs() > 1e-12 * scale {
            return Err(Error::NotFramed(format!("min x = {} (expected 0)", lo.x)));
        }
        let (pw, _) = self.projective_width();
        let extent = hi.y - lo.y;
        if (extent - pw).abs() > 1e-9 * pw {
            return Err(Error::NotFramed(format!(
                "y-extent {extent} differs from projective width {pw}"
            )));
        }
        Ok(pw)
    }
}

/// Vertical chord of a w-framed polygon at `x in [0, d]`.
pub fn slice(poly: &ConvexPolygon, x: f64) -> Result<(f64, f64)> {
    let (lo, hi) = poly.bounds();
    let scale = (hi.x - lo.x).max(1.0);
    if lo.x.abs() > 1e-12 * scale {
        return Err(Error::NotFramed(format!("min x = {} (expected 0)", lo.x)));
    }
    let d = hi.x;
    let tol = 1e-12 * scale;
    if !(x >= -tol && x <= d + tol) {
        return Err(Error::OutOfRange { what: "x", value: x, lo: 0.0, hi: d });
    }
    poly.vertical_chord(x.clamp(0.0, d))
}

pub fn diameter(poly: &ConvexPolygon) -> f64 {
    poly.diameter()
}

pub fn width(poly: &ConvexPolygon) -> (f64, Direction) {
    poly.width()
}

pub fn projective_width(poly: &ConvexPolygon) -> (f64, Direction) {
    poly.projective_width()
}

pub fn area(poly: &ConvexPolygon) -> f64 {
    poly.area()
}

/// Convex hull by Andrew's monotone chain; collinear points are dropped.
pub fn convex_hull(points: &[Point]) -> Result<ConvexPolygon> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!("{} distinct points", pts.len())));
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if (b - a).cross(p - b) > 0.0 {
                    break;
                }
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    ConvexPolygon::new(hull)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    width: f64,
    /// Edge angle in `[0, 2pi)`; values `>= pi` mean the edge ends up on top
    /// after rotating its direction onto the x-axis.
    raw_angle: f64,
}

impl Candidate {
    fn theta(&self) -> f64 {
        Direction::from_angle(self.raw_angle).theta
    }

    fn is_top(&self) -> bool {
        self.raw_angle >= PI
    }
}

/// Minimum width; ties go to the smallest angle, then to the bottom edge.
fn pick_candidate(cands: &[Candidate]) -> Candidate {
    let wmin = cands.iter().map(|c| c.width).fold(f64::INFINITY, f64::min);
    let mut best: Option<Candidate> = None;
    for c in cands.iter().filter(|c| c.width <= wmin * (1.0 + TIE_TOL)) {
        best = match best {
            None => Some(*c),
            Some(b) => {
                let better = c.theta() < b.theta() - TIE_TOL
                    || ((c.theta() - b.theta()).abs() <= TIE_TOL && !c.is_top() && b.is_top());
                if better {
                    Some(*c)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.expect("polygon has at least three edges")
}

/// The similarity that places a polygon in w-frame position:
/// `p -> scale * R(rotation) p + translation`, so that `min x = min y = 0`,
/// optionally followed by the mirror `x -> d - x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WFrame {
    pub rotation: f64,
    pub scale: f64,
    pub translation: Point,
    /// Set when the pipeline flipped the domain in x to match the sign
    /// convention of the 2-D eigenfunction.
    pub mirrored: bool,
    /// x-extent after normalization.
    pub d: f64,
    /// Width after normalization.
    pub eps: f64,
    /// `eps <= 0.05`, the regime where the thin-domain estimates apply.
    pub thin: bool,
}

impl WFrame {
    pub fn apply(&self, p: Point) -> Point {
        let mut q = p.rotated(self.rotation) * self.scale + self.translation;
        if self.mirrored {
            q.x = self.d - q.x;
        }
        q
    }

    pub fn invert(&self, q: Point) -> Point {
        let mut q = q;
        if self.mirrored {
            q.x = self.d - q.x;
        }
        ((q - self.translation) * (1.0 / self.scale)).rotated(-self.rotation)
    }
}

/// Rotates the projective-width direction onto the x-axis, scales to
/// diameter 2, places the width-realizing edge on `y = 0` and translates so
/// that `x` ranges over `[0, d]`.
pub fn normalize_w_frame(poly: &ConvexPolygon) -> Result<(ConvexPolygon, WFrame)> {
    let cand = poly.projective_width_candidate();
    // Rotating the realizing edge onto +x puts it at the bottom (the interior
    // of a counterclockwise polygon lies to the left of each edge), which
    // fixes the y-reflection ambiguity without an explicit reflection.
    let rotation = -cand.raw_angle;
    let diam = poly.diameter();
    if !(diam > 0.0) {
        return Err(Error::Degenerate("zero diameter".into()));
    }
    let scale = 2.0 / diam;
    let pre = WFrame {
        rotation,
        scale,
        translation: Point::default(),
        mirrored: false,
        d: 0.0,
        eps: 0.0,
        thin: false,
    };
    let moved: Vec<Point> = poly.vertices.iter().map(|&p| pre.apply(p)).collect();
    let (mut lo, mut hi) = (moved[0], moved[0]);
    for p in &moved {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let translation = Point::new(-lo.x, -lo.y);
    let frame_pts: Vec<Point> = moved.iter().map(|&p| p + translation).collect();
    let framed = ConvexPolygon::new(canonical_start(frame_pts))?;
    let (eps, _) = framed.projective_width();
    let frame = WFrame {
        translation,
        d: hi.x - lo.x,
        eps,
        thin: eps <= 0.05,
        ..pre
    };
    Ok((framed, frame))
}

/// Rotates the list to start at the lowest-x vertex (ties: lowest y).
fn canonical_start(mut pts: Vec<Point>) -> Vec<Point> {
    if pts.is_empty() {
        return pts;
    }
    let tol = 1e-12 * bbox_diag(&pts);
    let xmin = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let mut s = 0;
    let mut best_y = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        if p.x <= xmin + tol && p.y < best_y {
            best_y = p.y;
            s = i;
        }
    }
    pts.rotate_left(s);
    pts
}

fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut a = 0.0;
    for i in 0..n {
        a += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * a
}

fn bbox_diag(pts: &[Point]) -> f64 {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (hi - lo).norm()
}

/// Lower and upper boundary of a convex polygon as piecewise-linear
/// functions of x (both sorted by ascending x).
#[derive(Debug, Clone)]
pub struct Chains {
    lower: Vec<Point>,
    upper: Vec<Point>,
}

impl Chains {
    pub fn new(ccw: &[Point]) -> Chains {
        let n = ccw.len();
        let mut left = 0;
        let mut right = 0;
        for (i, p) in ccw.iter().enumerate() {
            let l = ccw[left];
            if p.x < l.x || (p.x == l.x && p.y < l.y) {
                left = i;
            }
            let r = ccw[right];
            if p.x > r.x || (p.x == r.x && p.y > r.y) {
                right = i;
            }
        }
        let mut lower = Vec::new();
        let mut i = left;
        loop {
            lower.push(ccw[i]);
            if i == right {
                break;
            }
            i = (i + 1) % n;
        }
        let mut upper = Vec::new();
        let mut i = right;
        loop {
            upper.push(ccw[i]);
            if i == left {
                break;
            }
            i = (i + 1) % n;
        }
        upper.reverse();
        Chains { lower, upper }
    }

    /// `(lower, upper)` ordinates at `x`; `x` is clamped to the x-range.
    pub fn chord(&self, x: f64) -> (f64, f64) {
        (eval_chain(&self.lower, x, false), eval_chain(&self.upper, x, true))
    }

    /// Longest vertical chord. By convexity it sits at a vertex abscissa, so
    /// one merge pass over both chains suffices.
    pub fn max_vertical_chord(&self) -> f64 {
        let (x0, x1) = (self.lower[0].x, self.lower[self.lower.len() - 1].x);
        let ends = [x0, x1].map(|x| {
            let (lo, hi) = self.chord(x);
            hi - lo
        });
        let mut best = ends[0].max(ends[1]);
        let (mut lo, mut up) = (ChainCursor::new(&self.lower), ChainCursor::new(&self.upper));
        let (mut i, mut j) = (1, 1);
        while i + 1 < self.lower.len() || j + 1 < self.upper.len() {
            let xl = if i + 1 < self.lower.len() { self.lower[i].x } else { f64::INFINITY };
            let xu = if j + 1 < self.upper.len() { self.upper[j].x } else { f64::INFINITY };
            let x = xl.min(xu);
            if x > x0 && x < x1 {
                best = best.max(up.eval(x) - lo.eval(x));
            }
            if xl == x {
                i += 1;
            }
            if xu == x {
                j += 1;
            }
        }
        best
    }

    /// All vertex abscissas, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.lower.iter().chain(self.upper.iter()).map(|p| p.x).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }

    /// Slopes of the lower and upper boundary on the open interval
    /// containing `x` from the right (from the left at the right end).
    pub fn slopes(&self, x: f64) -> (f64, f64) {
        (chain_slope(&self.lower, x), chain_slope(&self.upper, x))
    }
}

fn segment_index(chain: &[Point], x: f64) -> usize {
    let m = chain.len();
    if m < 2 {
        return 0;
    }
    let idx = chain.partition_point(|p| p.x <= x);
    let mut k = idx.saturating_sub(1).min(m - 2);
    if chain[k + 1].x == chain[k].x {
        if k + 2 < m && chain[k + 2].x > chain[k + 1].x {
            k += 1;
        } else if k > 0 {
            k -= 1;
        }
    }
    k
}

/// Evaluates a chain at nondecreasing interior abscissas in amortized O(1).
struct ChainCursor<'a> {
    chain: &'a [Point],
    k: usize,
}

impl<'a> ChainCursor<'a> {
    fn new(chain: &'a [Point]) -> Self {
        ChainCursor { chain, k: 0 }
    }

    fn eval(&mut self, x: f64) -> f64 {
        let c = self.chain;
        while self.k + 2 < c.len() && c[self.k + 1].x <= x {
            self.k += 1;
        }
        let (a, b) = (c[self.k], c[self.k + 1]);
        if x == a.x {
            return a.y;
        }
        if x == b.x {
            return b.y;
        }
        a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)
    }
}

fn eval_chain(chain: &[Point], x: f64, upper: bool) -> f64 {
    let m = chain.len();
    if m == 1 {
        return chain[0].y;
    }
    let x0 = chain[0].x;
    let x1 = chain[m - 1].x;
    let x = x.clamp(x0, x1);
    // At a vertical end segment the chord spans the whole segment.
    if x == x0 || x == x1 {
        let ys = chain.iter().filter(|p| p.x == x).map(|p| p.y);
        return if upper { ys.fold(f64::NEG_INFINITY, f64::max) } else { ys.fold(f64::INFINITY, f64::min) };
    }
    let k = segment_index(chain, x);
    let (a, b) = (chain[k], chain[k + 1]);
    if x == a.x {
        return a.y;
    }
    if x == b.x {
        return b.y;
    }
    a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)
}

fn chain_slope(chain: &[Point], x: f64) -> f64 {
    if chain.len() < 2 {
        return 0.0;
    }
    let k = segment_index(chain, x);
    let (a, b) = (chain[k], chain[k + 1]);
    if b.x == a.x {
        0.0
    } else {
        (b.y - a.y) / (b.x - a.x)
    }
}
