use std::f64::consts::PI;

use approx::assert_relative_eq;
use eigenwidth::geom::normalize_w_frame;
use eigenwidth::harness::family::{self, domain_id};
use eigenwidth::harness::sharpness::rectangle_slack_ratio;
use eigenwidth::harness::{
    fit_constant, generate_family, read_records_csv, run_domains, run_sweep, sharpness_check, sweep, Domain,
    FamilyKind, FamilySpec, Settings, SweepConfig, SweepOutcome, CAPS,
};
use eigenwidth::{ConvexPolygon, Point};

#[test]
fn rectangle_family_vertices() {
    let doms = generate_family(&FamilySpec::new(FamilyKind::Rectangle, &[0.2])).unwrap();
    let a = 3.96f64.sqrt();
    let expect = [(0.0, 0.0), (a, 0.0), (a, 0.2), (0.0, 0.2)];
    assert_eq!(doms.len(), 1);
    assert_eq!(doms[0].id, "rectangle-000-eps0.2000");
    for (p, &(x, y)) in doms[0].polygon.vertices().iter().zip(&expect) {
        assert_eq!((p.x, p.y), (x, y));
    }
}

#[test]
fn deterministic_families_have_diameter_two_and_the_requested_width() {
    for kind in [FamilyKind::Rectangle, FamilyKind::IsocelesTriangle, FamilyKind::HexLens] {
        for dom in generate_family(&FamilySpec::new(kind, &[0.3, 0.1, 0.025])).unwrap() {
            let (w, _) = dom.polygon.width();
            assert_relative_eq!(w, dom.eps, max_relative = 1e-9);
            assert_relative_eq!(dom.polygon.diameter(), 2.0, max_relative = 1e-9);
            let (_, frame) = normalize_w_frame(&dom.polygon).unwrap();
            assert_relative_eq!(frame.eps, dom.eps, max_relative = 1e-9);
        }
    }
}

#[test]
fn random_family_is_reproducible_and_on_target() {
    let mut spec = FamilySpec::new(FamilyKind::RandomConvex, &[0.2, 0.1, 0.05, 0.1]);
    spec.seed = 7;
    let a = generate_family(&spec).unwrap();
    let b = generate_family(&spec).unwrap();
    let text = |d: &[Domain]| d.iter().map(|d| eigenwidth::io::format_polygon(&d.polygon)).collect::<String>();
    assert_eq!(text(&a), text(&b));
    // two draws at the same width differ
    assert_ne!(a[1].polygon, a[3].polygon);
    for dom in &a {
        let (w, _) = dom.polygon.width();
        assert!((w - dom.eps).abs() <= 0.1 * dom.eps, "{}: {w}", dom.id);
        assert_relative_eq!(dom.polygon.diameter(), 2.0, max_relative = 1e-9);
        normalize_w_frame(&dom.polygon).unwrap();
    }
    spec.seed = 8;
    assert_ne!(text(&generate_family(&spec).unwrap()), text(&a));
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(generate_family(&FamilySpec::new(FamilyKind::HexLens, &[])).is_err());
    assert!(generate_family(&FamilySpec::new(FamilyKind::HexLens, &[0.6])).is_err());
    assert!(run_sweep(&[FamilySpec::new(FamilyKind::HexLens, &[-0.1])]).is_err());
}

fn check_record_invariants(out: &SweepOutcome) {
    for r in &out.records {
        assert!(r.slack >= -1e-3, "{}: slack {}", r.id, r.slack);
        assert!(r.mu1n >= PI * PI / 4.0 * (1.0 - 1e-3) && r.mu1n <= 25.025, "{}: {}", r.id, r.mu1n);
        assert!(r.eta_margin() >= 0.0, "{}: {}", r.id, r.eta_margin());
        assert!(r.identity_residual <= 1e-2, "{}", r.id);
        assert!(r.shooting_rel <= 1e-4, "{}: {}", r.id, r.shooting_rel);
        assert!(r.li_yau <= 1.1, "{}: {}", r.id, r.li_yau);
        assert!(CAPS.violations(r).is_empty(), "{:?}", CAPS.violations(r));
        assert!(r.liouville_margin() >= 0.0, "{}", r.id);
    }
}

#[test]
fn rectangle_sweep_matches_the_separation_oracle() {
    let out = run_sweep(&[FamilySpec::new(FamilyKind::Rectangle, &[0.2, 0.1, 0.05])]).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert_eq!(out.records.len(), 3);
    for r in &out.records {
        let oracle = rectangle_slack_ratio(r.eps);
        assert!((r.c_hat - oracle).abs() <= 0.02 * oracle, "{}: {} vs {oracle}", r.id, r.c_hat);
        assert!(r.c_hat >= 0.6);
    }
    check_record_invariants(&out);
    let fit = fit_constant(&out.records).unwrap();
    assert_eq!(fit.argmin, "rectangle-002-eps0.0500");
    assert_eq!(fit.per_family.len(), 1);
    assert_eq!(fit.thin_records, 1);
}

#[test]
fn mixed_sweep_writes_reports_and_fits_a_positive_constant() {
    let dir = tempfile::tempdir().unwrap();
    let mut rnd = FamilySpec::new(FamilyKind::RandomConvex, &[0.1, 0.05]);
    rnd.seed = 7;
    let specs = vec![
        FamilySpec::new(FamilyKind::IsocelesTriangle, &[0.1, 0.05]),
        FamilySpec::new(FamilyKind::HexLens, &[0.1, 0.05]),
        rnd,
    ];
    let out = sweep(&specs, dir.path()).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert_eq!(out.records.len(), 6);
    let ids: Vec<&str> = out.records.iter().map(|r| r.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    for r in &out.records {
        assert!(r.slack >= -1e-3 && r.eta_margin() >= 0.0, "{}", r.id);
        assert!(r.mu1n >= PI * PI / 4.0 * (1.0 - 1e-3), "{}", r.id);
    }
    let fit = fit_constant(&out.records).unwrap();
    assert!(fit.c_min > 0.0);
    assert_eq!(fit.per_family.len(), 3);

    let csv = std::fs::read(dir.path().join("records.csv")).unwrap();
    assert_eq!(read_records_csv(&csv[..]).unwrap(), out.records);
    let json: SweepOutcome =
        serde_json::from_slice(&std::fs::read(dir.path().join("records.json")).unwrap()).unwrap();
    assert_eq!(json, out);
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.starts_with("domains: 6 ok, 0 failed"), "{summary}");
}

#[test]
fn failing_domains_are_isolated() {
    let sq = ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)])
        .unwrap();
    let good = Domain {
        id: domain_id(FamilyKind::Rectangle, 0, 0.1),
        kind: FamilyKind::Rectangle,
        eps: 0.1,
        polygon: family::rectangle(0.1).unwrap(),
    };
    let thick = Domain { id: "square".into(), kind: FamilyKind::RandomConvex, eps: 0.4, polygon: sq };
    let s = Settings::default();
    let out = run_domains(&[(thick.clone(), s), (good, s)]);
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].id, "square");
    assert!(out.failures[0].error.contains("too thick"), "{}", out.failures[0].error);
    assert!(out.summary().contains("FAILED square"));

    let dir = tempfile::tempdir().unwrap();
    let all_bad = run_domains(&[(thick, s)]);
    all_bad.write_all(dir.path()).unwrap();
    assert!(all_bad.records.is_empty());
    assert_eq!(std::fs::read_to_string(dir.path().join("records.csv")).unwrap(), "");
}

#[test]
fn sweeps_are_byte_identical() {
    let cfg = SweepConfig::from_toml(
        "[[family]]\nkind = \"hex_lens\"\neps = [0.2, 0.1]\n\n[[family]]\nkind = \"random_convex\"\neps = [0.1]\nseed = 3\n",
    )
    .unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    sweep(&cfg.family, a.path()).unwrap();
    sweep(&cfg.family, b.path()).unwrap();
    for f in ["records.csv", "records.json", "summary.txt"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sharpness_table() {
    let t = sharpness_check(&[0.1, 0.2], &Settings::default()).unwrap();
    assert!(t.all_pass());
    assert_eq!(t.rows[0].eps, 0.2);
    assert_relative_eq!(t.rows[0].mu_oracle, PI * PI / 3.96, max_relative = 1e-15);
    assert_relative_eq!(t.rows[1].oracle_ratio, 0.618_396_27, max_relative = 1e-8);
    for r in &t.rows {
        assert!(r.rel_error <= 1e-2 && r.ratio_error <= 2e-2, "{r:?}");
    }
    assert!(t.monotone);
    assert!(t.to_text().lines().count() == 3);
}

#[test]
fn refinement_levels_scale_the_discretization() {
    let s0 = Settings::default();
    let s2 = Settings::at_level(2);
    assert_eq!(s0, Settings::at_level(0));
    assert_eq!((s0.ode_elements, s0.bridge_samples), (2048, 1024));
    assert_eq!((s2.ode_elements, s2.bridge_samples), (8192, 4096));
    assert_eq!(s0.target_edge(0.2), 0.02);
    assert_eq!(s0.target_edge(0.1), 0.0125);
    assert_eq!(s2.target_edge(0.1), 0.0125 / 4.0);
}
