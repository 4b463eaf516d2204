use std::f64::consts::PI;

use approx::assert_relative_eq;
use eigenwidth::fem::{self, SolveOptions};
use eigenwidth::geom::normalize_w_frame;
use eigenwidth::profile::build_profile;
use eigenwidth::{ConvexPolygon, Point};

fn rect(a: f64, b: f64) -> ConvexPolygon {
    ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(a, 0.0), Point::new(a, b), Point::new(0.0, b)]).unwrap()
}

/// J1'(x) by its power series.
fn bessel_j1_prime(x: f64) -> f64 {
    // J1(x) = sum (-1)^m (x/2)^(2m+1) / (m! (m+1)!)
    let mut sum = 0.0;
    let mut c = 0.5; // coefficient of (x/2)^(2m+1) divided by 2^0
    for m in 0..60 {
        let p = (2 * m + 1) as f64;
        sum += c * p * (0.5 * x).powi(2 * m) * 0.5;
        c *= -1.0 / ((m + 1) as f64 * (m + 2) as f64);
    }
    sum
}

#[test]
fn thin_rectangle_matches_separation_of_variables() {
    let eps: f64 = 0.2;
    let a = (4.0 - eps * eps).sqrt();
    let c = fem::solve_converged(&rect(a, eps), &SolveOptions::new(0.02)).unwrap();
    assert!(c.converged);
    assert_relative_eq!(c.solution.mu1, PI * PI / (4.0 - 0.04), max_relative = 5e-3);
    assert_relative_eq!(c.solution.mu1, 2.492_324_3, max_relative = 5e-3);
    let g = fem::gradient_bound_check(&c.solution);
    assert!(g.max_ratio <= 1.1 && !g.flagged, "{}", g.max_ratio);
}

#[test]
fn polygonal_disk_matches_bessel_oracle() {
    let (mut lo, mut hi) = (1.5, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j1_prime(lo) * bessel_j1_prime(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p11 = 0.5 * (lo + hi);
    assert_relative_eq!(p11, 1.841_183_781_340_659, epsilon = 1e-12);
    let n = 256;
    let pts = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            Point::new(t.cos(), t.sin())
        })
        .collect();
    let poly = ConvexPolygon::new(pts).unwrap();
    let sol = fem::solve_neumann_eig(&fem::triangulate(&poly, 0.04).unwrap()).unwrap();
    assert_relative_eq!(sol.mu1, p11 * p11, max_relative = 1e-2);
    let g = fem::gradient_bound_check(&sol);
    assert!(g.max_ratio <= 1.05, "{}", g.max_ratio);
}

#[test]
fn refinement_is_monotone() {
    let poly = ConvexPolygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.5, -0.2),
        Point::new(2.0, 0.1),
        Point::new(0.7, 0.4),
    ])
    .unwrap();
    let mut mesh = fem::triangulate(&poly, 0.1).unwrap();
    let mut prev = f64::INFINITY;
    for _ in 0..3 {
        let mu = fem::solve_neumann_eig(&mesh).unwrap().mu1;
        assert!(mu <= prev + 1e-12 * prev, "{mu} > {prev}");
        prev = mu;
        mesh = fem::refine(&mesh);
    }
}

#[test]
fn rigid_motions_leave_the_eigenvalue() {
    let base = vec![Point::new(0.0, 0.0), Point::new(1.9, 0.05), Point::new(1.7, 0.3), Point::new(0.3, 0.25)];
    let poly = ConvexPolygon::new(base.clone()).unwrap();
    let mu0 = fem::solve_neumann_eig(&fem::triangulate(&poly, 0.03).unwrap()).unwrap().mu1;
    for (angle, shift) in [(0.7, Point::new(3.0, -1.0)), (2.5, Point::new(-10.0, 4.0)), (-1.2, Point::default())] {
        let moved = ConvexPolygon::new(base.iter().map(|p| p.rotated(angle) + shift).collect()).unwrap();
        let mu = fem::solve_neumann_eig(&fem::triangulate(&moved, 0.03).unwrap()).unwrap().mu1;
        assert_relative_eq!(mu, mu0, max_relative = 1e-8);
    }
}

#[test]
fn payne_weinberger_and_normalization_on_assorted_domains() {
    let domains = vec![
        ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 0.1)]).unwrap(),
        ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.3, 0.5)]).unwrap(),
        rect(1.0, 1.0),
        ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, -0.05),
            Point::new(1.5, -0.05),
            Point::new(2.0, 0.0),
            Point::new(1.5, 0.05),
            Point::new(0.5, 0.05),
        ])
        .unwrap(),
    ];
    for poly in domains {
        let (framed, frame) = normalize_w_frame(&poly).unwrap();
        let target = (frame.eps / 8.0).min(0.05);
        let sol = fem::solve_neumann_eig(&fem::triangulate(&framed, target).unwrap()).unwrap();
        assert!(sol.mu1 >= PI * PI / 4.0 * 0.99, "{}", sol.mu1);
        assert!(sol.mean.abs() <= 1e-10);
        assert_eq!(sol.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        assert!(sol.k > 0.0 && sol.k <= 1.0);
        assert!(sol.backward_error <= 1e-9);
        let g = fem::gradient_bound_check(&sol);
        assert!(g.max_ratio <= 1.1, "{}", g.max_ratio);
        let m = &sol.mesh;
        assert!((m.total_area() - framed.area()).abs() <= 1e-12);
        assert_eq!(m.euler_characteristic(), 1);
    }
}

#[test]
fn coarse_mesh_residual_is_tight() {
    let sol = fem::solve_neumann_eig(&fem::triangulate(&rect(2.0, 0.5), 0.05).unwrap()).unwrap();
    assert!(sol.residual <= 1e-10, "{}", sol.residual);
}

#[test]
fn rectangle_directional_profile() {
    let eps: f64 = 0.1;
    let a = (4.0 - eps * eps).sqrt();
    let poly = rect(a, eps);
    let profile = build_profile(&poly, 64).unwrap();
    let sol = fem::solve_neumann_eig(&fem::triangulate(&poly, eps / 8.0).unwrap()).unwrap();
    let dp = fem::directional_profile(&sol, &profile, 64);
    // |u'| = (pi/a) sin(pi x/a) <= (pi/a)^2 ||x||, so the ratio stays near pi^2/4
    assert!(dp.max_ratio <= 4.0, "{}", dp.max_ratio);
    assert!(dp.max_ratio >= 2.0);
    assert!(dp.end_ratio <= 4.0);
    // u is y-independent; the discrete E_y decays like h^4 and reaches the
    // 1e-10 V level near eps/64
    let mut last = f64::INFINITY;
    for div in [16.0, 32.0, 64.0] {
        let s = fem::solve_neumann_eig(&fem::triangulate(&poly, eps / div).unwrap()).unwrap();
        let ey = s.energies().1 / (a * eps);
        assert!(ey < last / 8.0, "{ey} vs {last}");
        last = ey;
    }
    assert!(last <= 1e-10, "{last}");
}

#[test]
fn mesh_budget_is_enforced() {
    let opts = fem::MeshOptions { node_cap: 1000, ..fem::MeshOptions::new(0.001) };
    assert!(matches!(
        fem::triangulate_with(&rect(1.0, 1.0), &opts),
        Err(eigenwidth::Error::MeshBudget { .. })
    ));
}
