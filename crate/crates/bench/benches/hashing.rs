use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lplsh_bench::{index, planted, recall_scheme};
use lplsh_core::rng::seeded;
use lplsh_core::{eval_hash, linear_scan_nn, sample_hash, sample_stable, LpSpace, StableParams};

fn stable(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_stable");
    for p in [1.2, 1.5, 2.0] {
        let params = StableParams::new(p).unwrap();
        let mut rng = seeded(1);
        g.bench_with_input(BenchmarkId::from_parameter(p), &params, |b, params| {
            b.iter(|| sample_stable(params, &mut rng))
        });
    }
    g.finish();
}

fn hashing(c: &mut Criterion) {
    let scheme = recall_scheme();
    let mut g = c.benchmark_group("eval_hash");
    for d in [16usize, 128] {
        let h = sample_hash(&scheme, d, 3).unwrap();
        let x: Vec<f64> = (0..d).map(|i| (i as f64 * 0.37).sin()).collect();
        g.bench_with_input(BenchmarkId::from_parameter(d), &x, |b, x| b.iter(|| eval_hash(&h, black_box(x))));
    }
    g.finish();
}

fn queries(c: &mut Criterion) {
    let scheme = recall_scheme();
    let inst = planted(2_000, 32, 50);
    let idx = index(&inst, &scheme, 3, 60);
    let space = LpSpace::new(1.5, 32).unwrap();
    let mut g = c.benchmark_group("query");
    g.sample_size(20);
    g.bench_function("lsh", |b| {
        b.iter(|| {
            for (_, q) in inst.queries.iter() {
                black_box(idx.query(q).unwrap());
            }
        })
    });
    g.bench_function("linear_scan", |b| {
        b.iter(|| {
            for (_, q) in inst.queries.iter() {
                black_box(linear_scan_nn(&inst.data, q, &space).unwrap());
            }
        })
    });
    g.finish();
}

criterion_group!(benches, stable, hashing, queries);
criterion_main!(benches);
