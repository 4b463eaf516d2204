use eigenwidth::harness::FamilyKind;
use eigenwidth_bench::{regular_polygon, Fixture};

#[test]
fn fixture_is_framed_and_solved() {
    let f = Fixture::new(FamilyKind::HexLens, 0.1).unwrap();
    assert!((f.framed.frame.eps - 0.1).abs() < 1e-12);
    assert!(f.mesh.n_nodes() < f.solution.mesh.n_nodes());
    assert!(f.solution.mean_right_of(0.5 * f.framed.profile.d) > 0.0);
    assert!(f.ode.mu1n > std::f64::consts::PI.powi(2) / 4.0);
}

#[test]
fn regular_polygon_width() {
    // even n: twice the apothem
    let (w, _) = regular_polygon(6).width();
    assert!((w - 3f64.sqrt()).abs() < 1e-12);
    assert!((regular_polygon(6).diameter() - 2.0).abs() < 1e-12);
}
