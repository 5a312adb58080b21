use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use photolab_core::barycenter::homotopy_audit;
use photolab_core::geom::{generate_mesh, MeshSpec};
use photolab_core::multiplicity::{seed_points, sweep, SeedSpec, SweepConfig};
use photolab_core::photography::Photographer;
use photolab_core::potential::DoubleWell;
use photolab_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn photographs(c: &mut Criterion) {
    let m = generate_mesh(&MeshSpec::Icosphere { subdivisions: 4 }).unwrap();
    let w = DoubleWell::quartic_standard();
    let camera = Photographer::new(&m, &w, 0.05, 0.5).unwrap();
    let points = seed_points(&m, &SeedSpec::FarthestPoint { count: 32 }).unwrap();
    let mut group = c.benchmark_group("photograph_batch");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(camera.shoot_all(&points, exec)))
        });
    }
    group.finish();
}

fn homotopy(c: &mut Criterion) {
    let m = generate_mesh(&MeshSpec::Torus { major: 2.0, minor: 0.7, nu: 96, nv: 32 }).unwrap();
    let w = DoubleWell::quartic_standard();
    let points = seed_points(&m, &SeedSpec::FarthestPoint { count: 20 }).unwrap();
    let mut group = c.benchmark_group("homotopy_audit");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(homotopy_audit(&m, &w, 0.05, 0.3, &points, exec).unwrap()))
        });
    }
    group.finish();
}

fn small_sweep(c: &mut Criterion) {
    let m = generate_mesh(&MeshSpec::Torus { major: 2.0, minor: 0.7, nu: 32, nv: 16 }).unwrap();
    let w = DoubleWell::quartic_standard();
    let seeds = SeedSpec::FarthestPoint { count: 8 };
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SweepConfig { execution: exec, morse_k: 4, ..SweepConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| black_box(sweep(&m, &w, 0.1, 0.6, &seeds, cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, photographs, homotopy, small_sweep);
criterion_main!(benches);
