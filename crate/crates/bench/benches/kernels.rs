use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use rinkid_bench::random_tensor;
use rinkid_core::Tensor;

fn bench_matmul(c: &mut Criterion) {
    let a = random_tensor(&[64, 64], 1, false);
    let b = random_tensor(&[64, 64], 2, false);
    c.bench_function("matmul_64x64", |bench| {
        bench.iter(|| black_box(a.matmul(&b).unwrap()))
    });
}

fn bench_matmul_backward(c: &mut Criterion) {
    let a = random_tensor(&[64, 64], 3, true);
    let b = random_tensor(&[64, 64], 4, true);
    c.bench_function("matmul_64x64_fwd_bwd", |bench| {
        bench.iter(|| {
            a.zero_grad();
            b.zero_grad();
            let out = a.matmul(&b).unwrap().sum();
            out.backward().unwrap();
            black_box(out.item())
        })
    });
}

fn bench_conv2d(c: &mut Criterion) {
    // First embedder stage on a cropped frame.
    let x = random_tensor(&[1, 28, 28], 5, false);
    let w = random_tensor(&[8, 1, 3, 3], 6, false);
    let b = random_tensor(&[8], 7, false);
    c.bench_function("conv2d_28x28_s2", |bench| {
        bench.iter(|| black_box(x.conv2d(&w, &b, 2, 1).unwrap()))
    });
}

fn bench_softmax(c: &mut Criterion) {
    let x = random_tensor(&[17, 17], 8, false);
    c.bench_function("softmax_rows_17x17", |bench| {
        bench.iter(|| black_box(x.softmax(1).unwrap()))
    });
}

fn bench_layer_norm(c: &mut Criterion) {
    let x = random_tensor(&[17, 64], 9, false);
    let gain = Tensor::from_vec(vec![1.0; 64], &[64]).unwrap();
    let bias = Tensor::from_vec(vec![0.0; 64], &[64]).unwrap();
    c.bench_function("layer_norm_17x64", |bench| {
        bench.iter(|| black_box(x.layer_norm(&gain, &bias, 1e-5).unwrap()))
    });
}

criterion_group!(
    kernels,
    bench_matmul,
    bench_matmul_backward,
    bench_conv2d,
    bench_softmax,
    bench_layer_norm
);
criterion_main!(kernels);
