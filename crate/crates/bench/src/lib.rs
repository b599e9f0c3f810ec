//! Shared fixtures for the rinkid benchmarks.

use rinkid_core::seeds::rng_from;
use rinkid_core::synthgen::{gen_tracklet, SynthConfig, TeamSide, Tracklet};
use rinkid_core::Tensor;

use rand::Rng;

pub fn random_tensor(shape: &[usize], seed: u64, grad: bool) -> Tensor {
    let mut rng = rng_from(seed);
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    if grad {
        Tensor::param(data, shape).unwrap()
    } else {
        Tensor::from_vec(data, shape).unwrap()
    }
}

pub fn fixture_tracklet(n: usize, seed: u64) -> Tracklet {
    let mut cfg = SynthConfig::default();
    cfg.len_range = (n, n);
    gen_tracklet(&cfg, "bench", TeamSide::Home, Some(12), seed).unwrap()
}
