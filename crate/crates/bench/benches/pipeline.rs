use capcert_bench::{prepare, workloads};
use capcert_core::{
    analyze, blahut_arimoto, certify, project_to_pi, verify_theorem, ConstraintSet, Distribution,
    DEFAULT_SUPPORT_TOL,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn capacity(c: &mut Criterion) {
    let mut group = c.benchmark_group("capacity");
    for (name, w) in workloads() {
        group.bench_with_input(BenchmarkId::new("blahut_arimoto", name), &w, |b, w| {
            b.iter(|| blahut_arimoto(black_box(w), 1e-9, 1_000_000).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("analyze", name), &w, |b, w| {
            b.iter(|| {
                analyze(
                    black_box(w),
                    &ConstraintSet::empty(),
                    1e-9,
                    1_000_000,
                    DEFAULT_SUPPORT_TOL,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("projection");
    for (name, w) in workloads() {
        let (_, pi, _) = prepare(&w).unwrap();
        let p = Distribution::point_mass(w.n_inputs(), 0);
        group.bench_function(name, |b| {
            b.iter(|| project_to_pi(black_box(&p), &pi).unwrap())
        });
    }
    group.finish();
}

fn certificate(c: &mut Criterion) {
    let mut group = c.benchmark_group("certificate");
    group.sample_size(10);
    for (name, w) in workloads() {
        let (capacity, pi, exp) = prepare(&w).unwrap();
        group.bench_function(BenchmarkId::new("certify-1000", name), |b| {
            b.iter(|| certify(&w, &pi, &exp, capacity, 1000, 0).unwrap())
        });
        let cert = certify(&w, &pi, &exp, capacity, 1000, 0).unwrap();
        group.bench_function(BenchmarkId::new("verify-1000", name), |b| {
            b.iter(|| verify_theorem(&w, &pi, &cert, 1000, 0, 1e-9).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, capacity, projection, certificate);
criterion_main!(benches);
