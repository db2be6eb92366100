use criterion::{black_box, criterion_group, criterion_main, Criterion};
use germlab::experiments::{bs_conical_check, n_eps_measure};
use germlab::inner_metric::{build_graph, inner_distance};
use germlab::measure::default_eps_grid;
use germlab::separating::{circle_link, conflict_set, seed_patch};
use germlab::{density_profile, hausdorff_measure, sample_sphere_slice, VarietySpec};
use germlab_bench::a2_link;

fn sampling(c: &mut Criterion) {
    let spec = VarietySpec::a_k(2);
    c.bench_function("sphere_slice_a2_2000", |b| b.iter(|| sample_sphere_slice(&spec, 1.0, black_box(2000), 1).unwrap()));
}

fn measures(c: &mut Criterion) {
    let link = a2_link(4000);
    c.bench_function("hausdorff_measure_a2_link", |b| b.iter(|| hausdorff_measure(black_box(&link), 3).unwrap()));
    let plane = VarietySpec::real_plane_r4();
    let grid = default_eps_grid();
    c.bench_function("density_profile_plane", |b| b.iter(|| density_profile(&plane, &[0.0; 4], 2, &grid, 300, 1).unwrap()));
    c.bench_function("n_eps_measure", |b| b.iter(|| n_eps_measure(0.2, 0.5, black_box(5000), 1).unwrap()));
}

fn graphs(c: &mut Criterion) {
    let link = a2_link(3000);
    c.bench_function("graph_build_a2", |b| b.iter(|| build_graph(black_box(&link), 2.0).unwrap()));
    let g = build_graph(&link, 2.0).unwrap();
    c.bench_function("inner_distance_a2", |b| b.iter(|| inner_distance(&g, 0, black_box(1500)).ok()));
}

fn separation(c: &mut Criterion) {
    let link = circle_link(5000);
    let a = seed_patch(&link, &[1.0, 0.0, 0.0], 0.5);
    let bs = seed_patch(&link, &[-1.0, 0.0, 0.0], 0.5);
    c.bench_function("conflict_set_circle", |b| b.iter(|| conflict_set(&link, &a, &bs, 0.05).unwrap()));
    c.bench_function("bs_conical_check", |b| b.iter(|| bs_conical_check(0.3, 0.1, black_box(2000), 1).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = sampling, measures, graphs, separation
}
criterion_main!(benches);
