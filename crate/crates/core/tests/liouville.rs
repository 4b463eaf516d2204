use std::f64::consts::PI;

use approx::assert_relative_eq;
use eigenwidth::liouville::{self, t_integral};
use eigenwidth::ode::solve_weighted_neumann;
use eigenwidth::profile::{build_profile, regularize, HeightProfile};
use eigenwidth::{ConvexPolygon, Point};

fn triangle(eps: f64) -> HeightProfile {
    let t = ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, eps)]).unwrap();
    build_profile(&t, 64).unwrap()
}

#[test]
fn regularized_triangle_identity() {
    for eps in [0.05, 0.1, 0.2] {
        let p = regularize(&triangle(eps), 10_000).unwrap();
        let sol = solve_weighted_neumann(&p, 2048).unwrap();
        let data = liouville::transform(&p, &sol).unwrap();
        assert!(data.mu_identity_residual <= 1e-2, "eps {eps}: {}", data.mu_identity_residual);
        // single apex kink with negative jump in h'
        assert!(data.kink_energy > 0.0);
        let smooth = liouville::dirichlet_rayleigh_smooth(&data).unwrap();
        assert!(smooth >= PI * PI / (p.d * p.d) * (1.0 - 1e-6));
        assert!(sol.mu1n >= data.lower_bound() - data.mu_identity_residual * sol.mu1n);
    }
}

#[test]
fn degenerate_triangle_identity() {
    let p = triangle(0.1);
    let sol = solve_weighted_neumann(&p, 2048).unwrap();
    let data = liouville::transform(&p, &sol).unwrap();
    assert!(data.mu_identity_residual <= 1e-2, "{}", data.mu_identity_residual);
}

#[test]
fn linear_weight_potential_and_identity() {
    let p = HeightProfile::from_fn(2.0, 1, |x| x).unwrap();
    let sol = solve_weighted_neumann(&p, 2048).unwrap();
    let data = liouville::transform(&p, &sol).unwrap();
    for (m, v) in data.grid[1..data.grid.len() - 1].iter().zip(&data.potential) {
        if *m >= 0.01 && *m <= 1.99 {
            assert_relative_eq!(*v, 0.75 / (m * m), max_relative = 1e-12);
        }
    }
    assert!(data.kink_x.is_empty());
    assert!(data.mu_identity_residual <= 1e-3, "{}", data.mu_identity_residual);
}

#[test]
fn refinement_shrinks_the_identity_residual() {
    let p = regularize(&triangle(0.1), 10_000).unwrap();
    let r: Vec<f64> = [256, 512, 1024, 2048]
        .iter()
        .map(|&n| {
            let sol = solve_weighted_neumann(&p, n).unwrap();
            liouville::transform(&p, &sol).unwrap().mu_identity_residual
        })
        .collect();
    for w in r.windows(2) {
        assert!(w[1] < w[0], "{r:?}");
    }
    let order = (r[2] / r[3]).log2();
    assert!(order >= 1.0, "order {order}, {r:?}");
}

/// For the triangle with base 2 and height eps, `h = eps * ||x||` and the
/// integrand `(h'^2/h) ||x||^2` is `eps * ||x||`.
#[test]
fn triangle_second_term_closed_form() {
    let eps = 0.1;
    let p = triangle(eps);
    let sol = solve_weighted_neumann(&p, 1024).unwrap();
    let st = liouville::second_term(&p, &sol).unwrap();
    assert_relative_eq!(st.t_full, eps, max_relative = 1e-12);
    assert_relative_eq!(st.t_a, eps * 1e-4, max_relative = 1e-12);
    assert_relative_eq!(st.t_tenth, eps * 0.005, max_relative = 1e-12);
    assert!(st.t_a <= st.t_full && st.t_a >= 0.0);
    assert!(st.t_zeta > 0.0);
}

#[test]
fn rectangle_terms_vanish() {
    let r = ConvexPolygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.9, 0.0),
        Point::new(1.9, 0.1),
        Point::new(0.0, 0.1),
    ])
    .unwrap();
    let p = build_profile(&r, 32).unwrap();
    assert_eq!(t_integral(&p, 0.0, p.d).unwrap(), 0.0);
    let sol = solve_weighted_neumann(&p, 512).unwrap();
    let st = liouville::second_term(&p, &sol).unwrap();
    assert_eq!((st.t_a, st.t_full, st.t_zeta), (0.0, 0.0, 0.0));
}
