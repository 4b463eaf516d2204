//! Conforming triangulations of convex polygons.
//!
//! The polygon is meshed in its w-frame by vertical columns: one column at
//! every vertex abscissa plus uniformly spaced columns in between, each
//! chord split into equal layers. Neighbouring columns are stitched by a
//! zipper that always pairs one vertical column edge with a node of the
//! other column, so every triangle has positive area by construction and
//! the polygon is covered exactly. Nodes are mapped back to the input
//! coordinates afterwards, which makes the mesh covariant under rigid
//! motions and scaling.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{normalize_w_frame, ConvexPolygon, Point};

#[derive(Debug, Clone, Copy)]
pub struct MeshOptions {
    pub target_edge: f64,
    /// Refuse meshes with more nodes than this.
    pub node_cap: usize,
    pub smoothing_passes: usize,
}

impl MeshOptions {
    pub fn new(target_edge: f64) -> Self {
        MeshOptions { target_edge, node_cap: 400_000, smoothing_passes: 10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Counterclockwise index triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
}

pub fn triangulate(poly: &ConvexPolygon, target_edge: f64) -> Result<Mesh> {
    triangulate_with(poly, &MeshOptions::new(target_edge))
}

/// Meshes `poly` with spacing at most `target_edge`, tightened to an eighth
/// of the width so thin domains get at least eight layers across.
pub fn triangulate_with(poly: &ConvexPolygon, opts: &MeshOptions) -> Result<Mesh> {
    if !(opts.target_edge > 0.0) || !opts.target_edge.is_finite() {
        return Err(Error::OutOfRange {
            what: "target_edge",
            value: opts.target_edge,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let (framed, frame) = normalize_w_frame(poly)?;
    let target = (opts.target_edge * frame.scale).min(frame.eps / 8.0);
    let chains = framed.chains();

    let mut xs = Vec::new();
    let bp = chains.breakpoints();
    let tol = 1e-12 * frame.d;
    let mut bp_clean: Vec<f64> = Vec::with_capacity(bp.len());
    for x in bp {
        if bp_clean.last().map_or(true, |&l| x - l > tol) {
            bp_clean.push(x);
        }
    }
    for w in bp_clean.windows(2) {
        let m = robust_ceil((w[1] - w[0]) / target);
        for i in 0..m {
            xs.push(w[0] + (w[1] - w[0]) * i as f64 / m as f64);
        }
    }
    xs.push(*bp_clean.last().expect("polygon has vertices"));

    let chords: Vec<(f64, f64)> = xs.iter().map(|&x| chains.chord(x)).collect();
    let layers: Vec<usize> = chords
        .iter()
        .map(|&(lo, hi)| {
            if hi - lo <= 1e-14 * frame.eps {
                0
            } else {
                robust_ceil((hi - lo) / target)
            }
        })
        .collect();
    let n_nodes: usize = layers.iter().map(|l| l + 1).sum();
    if n_nodes > opts.node_cap {
        return Err(Error::MeshBudget { nodes: n_nodes, cap: opts.node_cap });
    }

    let mut nodes = Vec::with_capacity(n_nodes);
    let mut first = Vec::with_capacity(xs.len());
    for ((&x, &(lo, hi)), &n) in xs.iter().zip(&chords).zip(&layers) {
        first.push(nodes.len());
        if n == 0 {
            nodes.push(Point::new(x, 0.5 * (lo + hi)));
        } else {
            for j in 0..=n {
                nodes.push(Point::new(x, lo + (hi - lo) * j as f64 / n as f64));
            }
        }
    }

    let mut triangles = Vec::new();
    for c in 0..xs.len() - 1 {
        let (na, nb) = (layers[c], layers[c + 1]);
        let (a0, b0) = (first[c], first[c + 1]);
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            // advance the column whose next node sits lower in relative terms
            let advance_a = if i == na {
                false
            } else if j == nb {
                true
            } else {
                (i + 1) * nb <= (j + 1) * na
            };
            if advance_a {
                triangles.push([a0 + i, b0 + j, a0 + i + 1]);
                i += 1;
            } else {
                triangles.push([a0 + i, b0 + j, b0 + j + 1]);
                j += 1;
            }
        }
    }

    let mut mesh = Mesh { boundary: vec![false; nodes.len()], nodes, triangles };
    mesh.boundary = boundary_flags(&mesh.triangles, mesh.nodes.len());
    for _ in 0..1000 {
        if delaunay_pass(&mut mesh) == 0 {
            break;
        }
    }
    for _ in 0..opts.smoothing_passes {
        if smooth_pass(&mut mesh) == 0 {
            break;
        }
    }
    for p in &mut mesh.nodes {
        *p = frame.invert(*p);
    }
    Ok(mesh)
}

/// `ceil`, but ratios within `1e-9` above an integer round down, so that
/// rounding noise in the framed coordinates cannot add a column or layer.
fn robust_ceil(r: f64) -> usize {
    (r - 1e-9).ceil().max(1.0) as usize
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn boundary_flags(triangles: &[[usize; 3]], n: usize) -> Vec<bool> {
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            *count.entry(edge_key(t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut flags = vec![false; n];
    for ((a, b), c) in count {
        if c == 1 {
            flags[a] = true;
            flags[b] = true;
        }
    }
    flags
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Smallest interior angle of a triangle, in radians.
fn min_angle_of(a: Point, b: Point, c: Point) -> f64 {
    let ang = |p: Point, q: Point, r: Point| {
        let u = q - p;
        let v = r - p;
        u.cross(v).abs().atan2(u.dot(v))
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b))
}

/// Interior angle at `c` in triangle `(a, b, c)`.
fn angle_at(a: Point, b: Point, c: Point) -> f64 {
    let u = a - c;
    let v = b - c;
    u.cross(v).abs().atan2(u.dot(v))
}

/// One sweep of Lawson flips: an interior edge is flipped when the two
/// angles facing it sum to more than pi. Columns at clustered vertex
/// abscissas otherwise leave nearly flat triangles behind.
fn delaunay_pass(mesh: &mut Mesh) -> usize {
    let mut owner: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            owner.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push((t, k));
        }
    }
    let mut keys: Vec<(usize, usize)> = owner.iter().filter(|(_, v)| v.len() == 2).map(|(k, _)| *k).collect();
    keys.sort_unstable();
    let mut touched = vec![false; mesh.triangles.len()];
    let mut flips = 0;
    for key in keys {
        let o = &owner[&key];
        let ((t1, k1), (t2, k2)) = (o[0], o[1]);
        if touched[t1] || touched[t2] {
            continue;
        }
        let tri1 = mesh.triangles[t1];
        let tri2 = mesh.triangles[t2];
        let (a, b, c) = (tri1[k1], tri1[(k1 + 1) % 3], tri1[(k1 + 2) % 3]);
        let dd = tri2[(k2 + 2) % 3];
        let p = |i: usize| mesh.nodes[i];
        let opposite = angle_at(p(a), p(b), p(c)) + angle_at(p(b), p(a), p(dd));
        if opposite <= std::f64::consts::PI + 1e-9 {
            continue;
        }
        // quadrilateral a, dd, b, c in counterclockwise order
        let n1 = [a, dd, c];
        let n2 = [dd, b, c];
        if signed_area(p(n1[0]), p(n1[1]), p(n1[2])) <= 0.0 || signed_area(p(n2[0]), p(n2[1]), p(n2[2])) <= 0.0 {
            continue;
        }
        mesh.triangles[t1] = n1;
        mesh.triangles[t2] = n2;
        touched[t1] = true;
        touched[t2] = true;
        flips += 1;
    }
    flips
}

/// One Gauss-Seidel sweep of Laplacian smoothing over interior nodes. A
/// move is kept only if it does not reduce the smallest angle of the
/// incident triangles. Returns the number of nodes moved.
fn smooth_pass(mesh: &mut Mesh) -> usize {
    let n = mesh.nodes.len();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(t);
        }
    }
    let mut moved = 0;
    for v in 0..n {
        if mesh.boundary[v] || incident[v].is_empty() {
            continue;
        }
        let mut nbrs: Vec<usize> = incident[v]
            .iter()
            .flat_map(|&t| mesh.triangles[t])
            .filter(|&u| u != v)
            .collect();
        nbrs.sort_unstable();
        nbrs.dedup();
        let mut c = Point::default();
        for &u in &nbrs {
            c = c + mesh.nodes[u];
        }
        let target = c * (1.0 / nbrs.len() as f64);
        let quality = |nodes: &[Point], at: Point| {
            let mut worst = f64::INFINITY;
            for &t in &incident[v] {
                let tri = mesh.triangles[t];
                let p = |k: usize| if tri[k] == v { at } else { nodes[tri[k]] };
                if signed_area(p(0), p(1), p(2)) <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                worst = worst.min(min_angle_of(p(0), p(1), p(2)));
            }
            worst
        };
        let old = mesh.nodes[v];
        // the margin keeps the decision stable under rounding noise
        if quality(&mesh.nodes, target) > quality(&mesh.nodes, old) + 1e-9 {
            mesh.nodes[v] = target;
            moved += 1;
        }
    }
    moved
}

/// Red refinement: every triangle is split into four by its edge midpoints.
/// The refined finite element space contains the coarse one.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>| {
        *mid.entry(edge_key(a, b)).or_insert_with(|| {
            nodes.push((nodes[a] + nodes[b]) * 0.5);
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint(a, b, &mut nodes);
        let bc = midpoint(b, c, &mut nodes);
        let ca = midpoint(c, a, &mut nodes);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let boundary = boundary_flags(&triangles, nodes.len());
    Mesh { nodes, triangles, boundary }
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        (self.nodes[a] + self.nodes[b] + self.nodes[c]) * (1.0 / 3.0)
    }

    pub fn n_edges(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| edge_key(t[k], t[(k + 1) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// Nodes minus edges plus triangles; 1 for a disk.
    pub fn euler_characteristic(&self) -> i64 {
        self.nodes.len() as i64 - self.n_edges() as i64 + self.triangles.len() as i64
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| min_angle_of(self.nodes[a], self.nodes[b], self.nodes[c]))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| self.nodes[a].dist2(self.nodes[b]).sqrt())
            .fold(0.0, f64::max)
    }

    /// Reflection `x -> d - x`, with triangle orientation restored.
    pub fn mirror_x(&self, d: f64) -> Mesh {
        Mesh {
            nodes: self.nodes.iter().map(|p| Point::new(d - p.x, p.y)).collect(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            boundary: self.boundary.clone(),
        }
    }

    /// Legacy VTK unstructured grid, optionally with a nodal scalar field.
    pub fn write_vtk<W: Write>(&self, mut w: W, field: Option<(&str, &[f64])>) -> Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "eigenwidth mesh")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.nodes.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e} 0", p.x, p.y)?;
        }
        let nt = self.triangles.len();
        writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(w, "5")?;
        }
        if let Some((name, values)) = field {
            if values.len() != self.nodes.len() {
                return Err(Error::invalid("field length differs from node count"));
            }
            writeln!(w, "POINT_DATA {}", values.len())?;
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in values {
                writeln!(w, "{v:.17e}")?;
            }
        }
        Ok(())
    }
}
