use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vpflow::{alpha_distance, perturb, prescribed_cut, rasterize, signed_distance, step, PeriodicGrid, ShapeSpec, StepConfig, TorusSet};

fn disc(n: usize) -> TorusSet {
    let g = PeriodicGrid::square(n).unwrap();
    rasterize(&ShapeSpec::disc(g, (0.5, 0.5), 0.25).unwrap()).unwrap()
}

fn distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("signed_distance");
    for n in [128, 256, 512] {
        let s = disc(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| b.iter(|| signed_distance(s).unwrap()));
    }
    group.finish();
}

fn cut(c: &mut Criterion) {
    let mut group = c.benchmark_group("prescribed_cut");
    group.sample_size(10);
    for n in [64, 128, 256] {
        let s = perturb(&disc(n), 0.03, 1).unwrap();
        let pot = signed_distance(&s).unwrap().map(|v| v / 0.005);
        group.bench_with_input(BenchmarkId::from_parameter(n), &pot, |b, pot| b.iter(|| prescribed_cut(pot, 0.0).unwrap()));
    }
    group.finish();
}

fn flow_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(10);
    let cfg = StepConfig::new(0.005).unwrap();
    for n in [64, 128] {
        let s = perturb(&disc(n), 0.03, 2).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| b.iter(|| step(s, &cfg).unwrap()));
    }
    group.finish();
}

fn alpha(c: &mut Criterion) {
    let mut group = c.benchmark_group("alpha_distance");
    for n in [128, 256] {
        let a = disc(n);
        let b = perturb(&a, 0.03, 3).unwrap().shifted(5, -3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(a, b), |bch, (a, b)| bch.iter(|| alpha_distance(a, b).unwrap()));
    }
    group.finish();
}

criterion_group!(kernels, distance, cut, flow_step, alpha);
criterion_main!(kernels);
