use std::f64::consts::PI;

use approx::assert_relative_eq;
use eigenwidth::ode::{self, SampledFn};
use eigenwidth::profile::{build_profile, HeightProfile};
use eigenwidth::{ConvexPolygon, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// J1 by its power series; fine for |x| < 10.
fn bessel_j1(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for m in 1..60 {
        term *= q / (m as f64 * (m + 1) as f64);
        sum += term;
    }
    sum
}

fn j11() -> f64 {
    let (mut lo, mut hi) = (3.5, 4.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j1(lo) * bessel_j1(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn triangle_profile() -> HeightProfile {
    let t = ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 0.2)]).unwrap();
    build_profile(&t, 64).unwrap()
}

#[test]
fn bessel_oracle_sanity() {
    assert_relative_eq!(j11(), 3.831_705_970_207_512, epsilon = 1e-12);
}

#[test]
fn linear_weight_matches_bessel_zero() {
    let exact = (j11() / 2.0).powi(2);
    let p = HeightProfile::from_fn(2.0, 1, |x| x).unwrap();
    let sol = ode::solve_weighted_neumann(&p, 1024).unwrap();
    assert_relative_eq!(sol.mu1n, exact, max_relative = 1e-4);
    let reg = sol.regularization.as_ref().expect("degenerate left end");
    assert_eq!(reg.mus.len(), 3);
    assert_relative_eq!(reg.extrapolated, exact, max_relative = 1e-4);
    assert_relative_eq!(reg.extrapolated, sol.mu1n, max_relative = 1e-6);
    let shot = ode::shooting_cross_check(&p).unwrap();
    assert_relative_eq!(shot.mu, exact, max_relative = 1e-4);
}

#[test]
fn triangle_galerkin_and_shooting_agree() {
    let p = triangle_profile();
    let sol = ode::solve_weighted_neumann(&p, 1024).unwrap();
    let shot = ode::shooting_cross_check(&p).unwrap();
    let tol = 1e-4f64.max(10.0 * shot.delta);
    assert_relative_eq!(sol.mu1n, shot.mu, max_relative = tol);
    let g = ode::verify_gradient_bounds(&sol, &p);
    assert!(g.x0_in_range && g.x0 > 0.01 && g.x0 < 1.99);
    assert!(g.sup_phi <= 10.0);
    assert!(g.min_slope >= -1e-8);
    assert!(g.ratio_min > 0.0);
}

#[test]
fn smooth_weights_agree_with_shooting() {
    for (i, f) in [
        Box::new(|x: f64| 1.0 + 0.5 * x) as Box<dyn Fn(f64) -> f64>,
        Box::new(|x: f64| 0.3 + x * (2.0 - x)),
        Box::new(|x: f64| 2.0 - 0.8 * (x - 0.7).abs()),
    ]
    .iter()
    .enumerate()
    {
        let p = HeightProfile::from_fn(2.0, 256, f).unwrap();
        let sol = ode::solve_weighted_neumann(&p, 1024).unwrap();
        let shot = ode::shooting_cross_check(&p).unwrap();
        assert_relative_eq!(sol.mu1n, shot.mu, max_relative = 1e-4);
        assert!(sol.regularization.is_none(), "weight {i}");
    }
}

#[test]
fn weighted_mean_of_phi_vanishes() {
    let p = triangle_profile();
    let sol = ode::solve_weighted_neumann(&p, 512).unwrap();
    let mean = ode::rayleigh_quotient(
        &p,
        &SampledFn { grid: sol.grid.clone(), values: sol.phi.clone() },
    )
    .unwrap();
    assert!(!mean.projected);
    assert_relative_eq!(mean.value, sol.mu1n, max_relative = 1e-9);
}

#[test]
fn refinement_decreases_eigenvalue() {
    for p in [triangle_profile(), HeightProfile::from_fn(2.0, 1, |x| 0.2 + x).unwrap()] {
        let mus: Vec<f64> = [32, 64, 128, 256, 512]
            .iter()
            .map(|&n| ode::solve_weighted_neumann(&p, n).unwrap().mu1n)
            .collect();
        for w in mus.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "{mus:?}");
        }
    }
}

#[test]
fn scaling_the_weight_leaves_the_eigenvalue() {
    let p = triangle_profile();
    let a = ode::solve_weighted_neumann(&p, 256).unwrap().mu1n;
    for c in [1e-3, 0.5, 7.0, 1e4] {
        let b = ode::solve_weighted_neumann(&p.scaled(c), 256).unwrap().mu1n;
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }
}

#[test]
fn random_test_functions_respect_minimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [triangle_profile(), HeightProfile::from_fn(2.0, 1, |_| 1.0).unwrap()] {
        let mu = ode::solve_weighted_neumann(&p, 1024).unwrap().mu1n;
        for _ in 0..100 {
            let n = rng.gen_range(2..40);
            let grid: Vec<f64> = (0..=n).map(|i| 2.0 * i as f64 / n as f64).collect();
            let values = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = ode::rayleigh_quotient(&p, &SampledFn { grid, values }).unwrap();
            assert!(r.value >= mu - 1e-6, "{} < {mu}", r.value);
        }
    }
}

#[test]
fn eigenvalue_within_universal_bracket_for_thin_domains() {
    for eps in [0.05, 0.2, 0.6] {
        let t = ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, eps)]).unwrap();
        let p = build_profile(&t, 64).unwrap();
        let mu = ode::solve_weighted_neumann(&p, 512).unwrap().mu1n;
        assert!(mu >= PI * PI / 4.0 * 0.999 && mu <= 25.025, "{mu}");
    }
}

#[test]
fn l2_identity_holds_for_every_profile() {
    for p in [triangle_profile(), HeightProfile::from_fn(2.0, 1, |x| x).unwrap()] {
        let sol = ode::solve_weighted_neumann(&p, 512).unwrap();
        let l2 = ode::l2_bounds(&sol, &p);
        assert!(l2.identity_residual <= 1e-6, "{}", l2.identity_residual);
        assert!(l2.r1 > 0.01 && l2.r1 < 100.0);
    }
}

#[test]
fn rectangle_profile_matches_constant_weight() {
    let r = ConvexPolygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.8, 0.0),
        Point::new(1.8, 0.1),
        Point::new(0.0, 0.1),
    ])
    .unwrap();
    let p = build_profile(&r, 16).unwrap();
    let sol = ode::solve_weighted_neumann(&p, 1024).unwrap();
    assert_relative_eq!(sol.mu1n, (PI / 1.8).powi(2), max_relative = 1e-5);
    assert_relative_eq!(sol.x0, 0.9, epsilon = 1e-6);
    let sol = sol.with_bridge_value(0.5);
    assert_relative_eq!(sol.zeta.as_ref().unwrap()[0], 0.5);
}
