//! Fixtures shared by the `solvers` benchmarks.

use eigenwidth::fem::{self, Mesh, MeshSolution};
use eigenwidth::harness::{family, FamilyKind, FamilySpec, Framed, Settings};
use eigenwidth::ode::{self, WeightedEigenSolution};
use eigenwidth::{ConvexPolygon, Point, Result};

/// One domain taken through the pipeline up to the bridge, so each stage
/// can be timed on its own.
pub struct Fixture {
    pub framed: Framed,
    pub mesh: Mesh,
    pub solution: MeshSolution,
    pub ode: WeightedEigenSolution,
    pub settings: Settings,
}

impl Fixture {
    pub fn new(kind: FamilyKind, eps: f64) -> Result<Fixture> {
        let dom = family::generate_family(&FamilySpec::new(kind, &[eps]))?.remove(0);
        let settings = Settings::default();
        let mut framed = Framed::new(&dom.polygon)?;
        let solution = eigenwidth::harness::pipeline::solve_pde(&mut framed, &settings)?.solution;
        // unrefined mesh of the oriented polygon
        let mesh = fem::triangulate(&framed.polygon, settings.target_edge(eps))?;
        let ode = ode::solve_weighted_neumann(&framed.profile, settings.ode_elements)?;
        Ok(Fixture { framed, mesh, solution, ode, settings })
    }
}

/// Regular `n`-gon inscribed in the unit circle.
pub fn regular_polygon(n: usize) -> ConvexPolygon {
    let pts = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            Point::new(t.cos(), t.sin())
        })
        .collect();
    ConvexPolygon::new(pts).expect("regular polygon is convex")
}
