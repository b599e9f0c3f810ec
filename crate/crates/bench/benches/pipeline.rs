use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use rinkid_bench::fixture_tracklet;
use rinkid_core::model::{Model, ModelConfig};
use rinkid_core::seeds::rng_from;
use rinkid_core::shiftsync::read_clock;
use rinkid_core::synthgen::{gen_tracklet, render_clock_strip, SynthConfig, TeamSide};
use rinkid_core::weaklabel::{augment_window, sample_window, AugmentConfig, SampledWindow};

fn bench_gen_tracklet(c: &mut Criterion) {
    let cfg = SynthConfig::default();
    let mut seed = 0u64;
    c.bench_function("gen_tracklet_default", |b| {
        b.iter(|| {
            seed += 1;
            black_box(gen_tracklet(&cfg, "t", TeamSide::Home, Some(12), seed).unwrap())
        })
    });
}

fn bench_forward_window(c: &mut Criterion) {
    let model = Model::init(&ModelConfig::default(), 1).unwrap();
    let t = fixture_tracklet(16, 2);
    let window = SampledWindow {
        frames: t.frames.clone(),
        start: 0,
        tracklet_id: t.id.clone(),
    };
    let aug = AugmentConfig::default();
    let cropped = rinkid_core::weaklabel::augment_identity(&window, &aug).unwrap();
    c.bench_function("forward_window_m16_d64", |b| {
        b.iter(|| black_box(model.forward(&cropped.frames).unwrap()))
    });
}

fn bench_sample_and_augment(c: &mut Criterion) {
    let t = fixture_tracklet(48, 3);
    let aug = AugmentConfig::default();
    let mut rng = rng_from(4);
    c.bench_function("sample_and_augment_window", |b| {
        b.iter(|| {
            let w = sample_window(&t, &t.visibility, 16, &mut rng).unwrap();
            black_box(augment_window(&w, &aug, &mut rng).unwrap())
        })
    });
}

fn bench_read_clock(c: &mut Criterion) {
    let strip = render_clock_strip(754).unwrap();
    c.bench_function("read_clock", |b| {
        b.iter(|| black_box(read_clock(&strip).unwrap()))
    });
}

criterion_group!(
    pipeline,
    bench_gen_tracklet,
    bench_forward_window,
    bench_sample_and_augment,
    bench_read_clock
);
criterion_main!(pipeline);
