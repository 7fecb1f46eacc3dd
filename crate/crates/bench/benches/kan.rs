use std::hint::black_box;

use chebykan::{Mat, PolyKind};
use chebykan_bench::{kan_fixture, mnist_fixture};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn layer_forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("kan_layer");
    for degree in [2, 3, 5] {
        let (mut layer, x) = kan_fixture(64, 128, 64, degree, PolyKind::First);
        let g = Mat::filled(64, 64, 1.0);
        group.bench_with_input(BenchmarkId::new("forward", degree), &degree, |b, _| {
            b.iter(|| black_box(layer.infer(black_box(&x)).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("forward_backward", degree), &degree, |b, _| {
            b.iter(|| {
                layer.forward(black_box(&x)).unwrap();
                black_box(layer.backward(black_box(&g)).unwrap())
            })
        });
    }
    group.finish();
}

fn mnist_step(c: &mut Criterion) {
    let (mut net, x) = mnist_fixture(64, 3);
    let g = Mat::filled(64, 10, 0.1);
    c.bench_function("mnist_batch64_forward_backward", |b| {
        b.iter(|| {
            net.forward(black_box(&x)).unwrap();
            net.backward_params(black_box(&g)).unwrap();
        })
    });
}

criterion_group!(benches, layer_forward_backward, mnist_step);
criterion_main!(benches);
