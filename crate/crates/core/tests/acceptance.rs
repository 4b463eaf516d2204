//! Acceptance suite: one PASS/FAIL line per criterion on stderr, then a
//! single assertion over all of them.
//!
//! The lines are written to the raw stderr handle so that they show up
//! even when the test harness captures output.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use eigenwidth::geom::{convex_hull, normalize_w_frame};
use eigenwidth::harness::{
    fit_constant, run_sweep, sharpness_check, write_records_csv, FamilyKind, FamilySpec, Framed, InequalityRecord,
    Settings, SweepConfig, SweepOutcome, CAPS, SUITE_EPS,
};
use eigenwidth::profile::{build_profile, derivative_identity_residual, regularize, HeightProfile};
use eigenwidth::{liouville, ode, Point};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const PW: f64 = PI * PI / 4.0;
const RANDOM_SEED: u64 = 1;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// The three deterministic families plus one seeded random family, all at
/// the suite widths.
fn full_suite(refinement: u32) -> Vec<FamilySpec> {
    let mut specs = SweepConfig::standard().family;
    let mut rnd = FamilySpec::new(FamilyKind::RandomConvex, &SUITE_EPS);
    rnd.seed = RANDOM_SEED;
    specs.push(rnd);
    for s in &mut specs {
        s.refinement = refinement;
    }
    specs
}

fn deterministic(r: &InequalityRecord) -> bool {
    r.family != FamilyKind::RandomConvex.name()
}

/// Worst record under `key`, as `(value, id)`.
fn worst(recs: &[InequalityRecord], key: impl Fn(&InequalityRecord) -> f64) -> (f64, String) {
    recs.iter().map(|r| (key(r), r.id.clone())).fold((f64::NEG_INFINITY, String::new()), |a, b| if b.0 > a.0 { b } else { a })
}

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

/// First positive zero of J1 by bisection on the power series.
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

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_sharpness() -> Verdict {
    let t0 = Instant::now();
    let t = match sharpness_check(&[0.2, 0.1, 0.05], &Settings::default()) {
        Ok(t) => t,
        Err(e) => return verdict(false, format!("sharpness run failed: {e}")),
    };
    let secs = t0.elapsed().as_secs_f64();
    let mu = t.rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let ratio = t.rows.iter().map(|r| r.ratio_error).fold(0.0, f64::max);
    verdict(
        mu <= 1e-2 && ratio <= 2e-2 && secs <= 180.0 && t.rows.len() == 3,
        format!("max mu1 rel error {mu:.2e} (<= 1e-2), max slack/eps^2 rel error {ratio:.2e} (<= 2e-2), {secs:.1} s"),
    )
}

fn c2_ode(recs: &[InequalityRecord]) -> Verdict {
    let run = || -> eigenwidth::Result<(f64, f64, f64, f64)> {
        let flat = HeightProfile::from_fn(2.0, 1, |_| 1.0)?;
        let lin = HeightProfile::from_fn(2.0, 1, |x| x)?;
        let exact = (j11() / 2.0).powi(2);
        let e_flat = rel(ode::solve_weighted_neumann(&flat, 2048)?.mu1n, PW);
        let e_lin = rel(ode::solve_weighted_neumann(&lin, 2048)?.mu1n, exact);
        let shoot = rel(ode::shooting_cross_check(&flat)?.mu, PW).max(rel(ode::shooting_cross_check(&lin)?.mu, exact));
        Ok((e_flat, e_lin, shoot, (j11() - 3.831_705_970_2).abs()))
    };
    let (e_flat, e_lin, shoot, oracle) = match run() {
        Ok(v) => v,
        Err(e) => return verdict(false, format!("solver failed: {e}")),
    };
    let (suite, id) = worst(recs, |r| r.shooting_rel);
    verdict(
        e_flat <= 1e-5 && e_lin <= 1e-4 && oracle <= 1e-10 && shoot <= 1e-4 && suite <= 1e-4,
        format!(
            "h=1 rel {e_flat:.1e} (<= 1e-5), h=x rel {e_lin:.1e} (<= 1e-4), shooting vs analytic {shoot:.1e}, \
             suite Galerkin vs shooting {suite:.1e} at {id} (<= 1e-4)"
        ),
    )
}

fn c3_bracket(recs: &[InequalityRecord]) -> Verdict {
    let bad: Vec<&str> =
        recs.iter().filter(|r| !(r.mu1n >= PW * 0.999 && r.mu1n <= 25.025)).map(|r| r.id.as_str()).collect();
    let lo = recs.iter().map(|r| r.mu1n).fold(f64::INFINITY, f64::min);
    let hi = recs.iter().map(|r| r.mu1n).fold(0.0, f64::max);
    verdict(bad.is_empty(), format!("mu1n in [{lo:.5}, {hi:.5}] over {} profiles; outside: {bad:?}", recs.len()))
}

/// Random point clouds, squashed by a random factor and rotated, then hulled.
fn polygon_strategy() -> impl Strategy<Value = eigenwidth::ConvexPolygon> {
    (prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..16), 0.005..1.0f64, 0.0..PI)
        .prop_filter_map("degenerate hull", |(pts, squash, angle)| {
            let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, squash * y).rotated(angle)).collect();
            convex_hull(&pts).ok()
        })
}

fn c4_width() -> Verdict {
    let cfg = Config { cases: 500, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]));
    let worst = std::cell::Cell::new([0.0f64; 3]);
    let res = runner.run(&polygon_strategy(), |poly| {
        let (w, _) = poly.width();
        let (pw, _) = poly.projective_width();
        let e_w = rel(w, pw);
        let (framed, frame) = normalize_w_frame(&poly).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let prof = build_profile(&framed, 8).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let e_h = rel(prof.max_h(), frame.eps);
        let e_d = derivative_identity_residual(&prof).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let mut w3 = worst.get();
        for (m, v) in w3.iter_mut().zip([e_w, e_h, e_d]) {
            *m = m.max(v);
        }
        worst.set(w3);
        prop_assert!(e_w <= 1e-9, "width {w} vs projective width {pw}");
        prop_assert!(e_h <= 1e-9, "max h {} vs eps {}", prof.max_h(), frame.eps);
        prop_assert!(e_d <= 1e-9, "derivative identity residual {e_d:e}");
        Ok(())
    });
    let worst = worst.get();
    let detail = format!(
        "500 polygons: width/projective {:.1e}, max h/eps {:.1e}, derivative identity {:.1e} (all <= 1e-9)",
        worst[0], worst[1], worst[2]
    );
    match res {
        Ok(()) => verdict(true, detail),
        Err(e) => verdict(false, format!("{detail}; {e}")),
    }
}

fn c5_identity(level0: &[InequalityRecord], level1: &SweepOutcome) -> Verdict {
    if !level1.failures.is_empty() {
        return verdict(false, format!("refined sweep failures: {:?}", level1.failures));
    }
    let mut worst_res = (0.0f64, String::new());
    let mut min_order = (f64::INFINITY, String::new());
    for r0 in level0 {
        let Some(r1) = level1.records.iter().find(|r| r.id == r0.id) else {
            return verdict(false, format!("{} missing from the refined sweep", r0.id));
        };
        if r0.identity_residual > worst_res.0 {
            worst_res = (r0.identity_residual, r0.id.clone());
        }
        let order = (r0.identity_residual / r1.identity_residual).ln() / (r0.mesh_edge / r1.mesh_edge).ln();
        if !(order >= min_order.0) {
            min_order = (order, r0.id.clone());
        }
    }
    verdict(
        worst_res.0 <= 1e-2 && min_order.0 >= 1.0,
        format!(
            "max residual {:.2e} at {} (<= 1e-2), min observed order {:.2} at {} (>= 1)",
            worst_res.0, worst_res.1, min_order.0, min_order.1
        ),
    )
}

fn c6_caps(recs: &[InequalityRecord]) -> Verdict {
    let det: Vec<&InequalityRecord> = recs.iter().filter(|r| deterministic(r)).collect();
    let bad: Vec<String> = det
        .iter()
        .flat_map(|r| CAPS.violations(r).into_iter().map(move |c| format!("{} {}={:.3e}>{:.3e}", r.id, c.ratio, c.value, c.cap)))
        .collect();
    let head = |key: fn(&InequalityRecord) -> f64, cap: f64| {
        let m = det.iter().map(|r| key(r)).fold(0.0, f64::max);
        format!("{:.2}", m / cap)
    };
    verdict(
        bad.is_empty() && det.len() == 3 * SUITE_EPS.len(),
        format!(
            "{} domains; largest value/cap: eta {} gap {} vert {} eta10 {} int10 {}; violations {bad:?}",
            det.len(),
            head(|r| r.r_eta5, CAPS.r_eta5),
            head(|r| r.r_gap, CAPS.r_gap),
            head(|r| r.r_vert, CAPS.r_vert),
            head(|r| r.r_eta10, CAPS.r_eta10),
            head(|r| r.r_int10, CAPS.r_int10),
        ),
    )
}

fn c7_main_inequality(out: &SweepOutcome) -> Verdict {
    let fit = match fit_constant(&out.records) {
        Ok(f) => f,
        Err(e) => return verdict(false, format!("fit failed: {e}")),
    };
    let (neg_slack, id) = worst(&out.records, |r| -r.slack);
    let target = PI * PI / 16.0;
    let thin_rect = out.records.iter().find(|r| r.family == "rectangle" && r.eps_target == 0.025);
    let rect_err = thin_rect.map_or(f64::INFINITY, |r| rel(r.c_hat, target));
    verdict(
        out.failures.is_empty() && fit.c_min > 0.05 && -neg_slack >= -1e-3 && rect_err <= 0.05,
        format!(
            "c_min {:.4} at {} (> 0.05), min slack {:.3e} at {id} (>= -1e-3), rectangle c_hat at eps 0.025 within \
             {:.2}% of pi^2/16 (<= 5%), {} failures",
            fit.c_min,
            fit.argmin,
            -neg_slack,
            100.0 * rect_err,
            out.failures.len()
        ),
    )
}

fn c8_liouville(recs: &[InequalityRecord]) -> Verdict {
    let dirichlet_gap = |p: &HeightProfile| -> eigenwidth::Result<f64> {
        let reg = regularize(p, 10_000)?;
        let sol = ode::solve_weighted_neumann(&reg, 2048)?;
        let data = liouville::transform(&reg, &sol)?;
        Ok(rel(liouville::dirichlet_rayleigh(&data)?, sol.mu1n))
    };
    let mut worst_gap = (0.0f64, String::from("constant"));
    let mut err = None;
    match HeightProfile::from_fn(2.0, 1, |_| 1.0).and_then(|p| dirichlet_gap(&p)) {
        Ok(g) => worst_gap.0 = g,
        Err(e) => err = Some(format!("constant weight: {e}")),
    }
    for spec in SweepConfig::standard().family {
        for dom in eigenwidth::harness::generate_family(&spec).unwrap() {
            match Framed::new(&dom.polygon).and_then(|f| dirichlet_gap(&f.profile)) {
                Ok(g) if g > worst_gap.0 => worst_gap = (g, dom.id),
                Ok(_) => {}
                Err(e) => err = Some(format!("{}: {e}", dom.id)),
            }
        }
    }
    let (neg_margin, id) = worst(recs, |r| -r.liouville_margin());
    verdict(
        err.is_none() && worst_gap.0 <= 1e-2 && -neg_margin >= 0.0,
        format!(
            "max |dirichlet - mu1n|/mu1n {:.2e} at {} (<= 1e-2), min decomposition margin {:.3e} at {id} (>= 0){}",
            worst_gap.0,
            worst_gap.1,
            -neg_margin,
            err.map(|e| format!("; {e}")).unwrap_or_default()
        ),
    )
}

fn c9_gradients(recs: &[InequalityRecord]) -> Verdict {
    let (ly, ly_id) = worst(recs, |r| r.li_yau);
    let (gp, gp_id) = worst(recs, |r| r.grad_profile);
    verdict(
        ly <= 1.1 && gp <= CAPS.grad_profile,
        format!("max Li-Yau ratio {ly:.4} at {ly_id} (<= 1.1), max profile ratio {gp:.3} at {gp_id} (<= {:.3})", CAPS.grad_profile),
    )
}

fn c10_determinism(a: &SweepOutcome, b: &SweepOutcome) -> Verdict {
    let csv = |o: &SweepOutcome| {
        let mut buf = Vec::new();
        write_records_csv(&o.records, &mut buf).unwrap();
        buf
    };
    let (ca, cb) = (csv(a), csv(b));
    verdict(!ca.is_empty() && ca == cb, format!("{} bytes, identical: {}", ca.len(), ca == cb))
}

#[test]
fn acceptance() {
    let t0 = Instant::now();
    let first = run_sweep(&full_suite(0)).unwrap();
    let second = run_sweep(&full_suite(0)).unwrap();
    let refined = run_sweep(&full_suite(1)).unwrap();
    let recs = &first.records;

    let results = [
        ("rectangle sharpness", c1_sharpness()),
        ("ODE analytics", c2_ode(recs)),
        ("weighted eigenvalue bracket", c3_bracket(recs)),
        ("planar width equalities", c4_width()),
        ("bridge identity", c5_identity(recs, &refined)),
        ("bound-ratio caps", c6_caps(recs)),
        ("main inequality", c7_main_inequality(&first)),
        ("Liouville identity", c8_liouville(recs)),
        ("gradient estimates", c9_gradients(recs)),
        ("determinism", c10_determinism(&first, &second)),
    ];
    let mut err = std::io::stderr().lock();
    for (i, (name, v)) in results.iter().enumerate() {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(err, "criterion {:>2} {tag} {name}: {}", i + 1, v.detail).unwrap();
    }
    writeln!(err, "acceptance: {} domains per sweep, {:.1} s", recs.len(), t0.elapsed().as_secs_f64()).unwrap();
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, (_, v))| !v.pass).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
