use criterion::{black_box, criterion_group, criterion_main, Criterion};

use flowpersp_bench::pedestrian_stream;
use flowpersp_core::{estimate_coarse, estimate_dense, CoarseConfig, DenseConfig};

fn bench_estimators(c: &mut Criterion) {
    let seq = pedestrian_stream(600.0);
    c.bench_function("dense_10min", |b| {
        b.iter(|| estimate_dense(black_box(&seq), &DenseConfig::default()).unwrap())
    });
    c.bench_function("coarse_10min", |b| {
        b.iter(|| estimate_coarse(black_box(&seq), &CoarseConfig::default()).unwrap())
    });
}

fn bench_flowlog(c: &mut Criterion) {
    let seq = pedestrian_stream(60.0);
    let text = seq.to_flowlog();
    c.bench_function("flowlog_parse_1min", |b| {
        b.iter(|| {
            black_box(&text)
                .parse::<flowpersp_core::FlowSequence>()
                .unwrap()
        })
    });
    c.bench_function("flowlog_write_1min", |b| {
        b.iter(|| black_box(&seq).to_flowlog())
    });
}

criterion_group!(benches, bench_estimators, bench_flowlog);
criterion_main!(benches);
