use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use eigenwidth::harness::{family, FamilyKind};
use eigenwidth::{bridge, fem, liouville, ode, profile};
use eigenwidth_bench::{regular_polygon, Fixture};

fn geometry(c: &mut Criterion) {
    let mut g = c.benchmark_group("calipers");
    for n in [16, 256, 1024] {
        let p = regular_polygon(n);
        g.bench_with_input(BenchmarkId::new("width", n), &p, |b, p| b.iter(|| black_box(p.width())));
        g.bench_with_input(BenchmarkId::new("projective_width", n), &p, |b, p| b.iter(|| black_box(p.projective_width())));
    }
    g.finish();
}

fn solvers(c: &mut Criterion) {
    let hex = Fixture::new(FamilyKind::HexLens, 0.1).unwrap();
    let tri = Fixture::new(FamilyKind::IsocelesTriangle, 0.1).unwrap();
    let mut g = c.benchmark_group("solvers");
    g.sample_size(10);

    g.bench_function("triangulate/hex_lens", |b| {
        b.iter(|| fem::triangulate(&hex.framed.polygon, hex.settings.target_edge(0.1)).unwrap())
    });
    g.bench_function("neumann_eig/hex_lens", |b| b.iter(|| fem::solve_neumann_eig(&hex.mesh).unwrap()));
    for n in [512, 2048, 8192] {
        g.bench_with_input(BenchmarkId::new("weighted_ode/triangle", n), &n, |b, &n| {
            b.iter(|| ode::solve_weighted_neumann(&tri.framed.profile, n).unwrap())
        });
    }
    g.bench_function("shooting/triangle", |b| b.iter(|| ode::shooting_cross_check(&tri.framed.profile).unwrap()));
    g.bench_function("liouville/triangle", |b| {
        let reg = profile::regularize(&tri.framed.profile, 10_000).unwrap();
        let sol = ode::solve_weighted_neumann(&reg, 2048).unwrap();
        b.iter(|| liouville::transform(&reg, &sol).unwrap())
    });
    g.bench_function("bridge/hex_lens", |b| {
        b.iter(|| bridge::bridge(&hex.solution, &hex.framed.profile, &hex.ode, hex.settings.bridge_samples).unwrap())
    });
    g.bench_function("pipeline/rectangle", |b| {
        let dom = family::generate_family(&eigenwidth::FamilySpec::new(FamilyKind::Rectangle, &[0.2])).unwrap().remove(0);
        b.iter(|| eigenwidth::harness::run_domain(&dom, &Default::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, geometry, solvers);
criterion_main!(benches);
