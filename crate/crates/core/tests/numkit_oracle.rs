//! Finite-difference oracles for every differentiable op, plus softmax
//! distribution properties. The numeric oracle lives here, independent of
//! the backward implementations it checks.

use proptest::prelude::*;
use rand::Rng;
use rinkid_core::numkit::Tensor;
use rinkid_core::seeds::rng_from;

const FD_H: f64 = 1e-5;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Check every analytic gradient of `loss_of(params)` against central finite
/// differences, rebuilding the graph per probe.
fn check_grads(params: &[Tensor], loss_of: &dyn Fn(&[Tensor]) -> Tensor, tol: f64, what: &str) {
    let loss = loss_of(params);
    loss.backward().unwrap();
    let grads: Vec<Vec<f64>> = params
        .iter()
        .map(|p| p.grad().unwrap_or_else(|| vec![0.0; p.len()]))
        .collect();
    for (pi, p) in params.iter().enumerate() {
        let base = p.to_vec();
        for j in 0..base.len() {
            let mut plus = base.clone();
            plus[j] += FD_H;
            p.set_data(&plus).unwrap();
            let f_plus = loss_of(params).item();
            let mut minus = base.clone();
            minus[j] -= FD_H;
            p.set_data(&minus).unwrap();
            let f_minus = loss_of(params).item();
            p.set_data(&base).unwrap();
            let fd = (f_plus - f_minus) / (2.0 * FD_H);
            let an = grads[pi][j];
            assert!(
                rel_err(an, fd) < tol,
                "{what}: param {pi}[{j}] analytic {an} vs fd {fd} (rel {})",
                rel_err(an, fd)
            );
        }
        p.zero_grad();
    }
}

fn rand_param(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = rng_from(seed);
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    Tensor::param(data, shape).unwrap()
}

#[test]
fn matmul_gradients_match_finite_differences_tightly() {
    // 3x4 · 4x2 with every gradient entry within 1e-6 relative error.
    let a = rand_param(&[3, 4], 1);
    let b = rand_param(&[4, 2], 2);
    check_grads(
        &[a, b],
        &|p| p[0].matmul(&p[1]).unwrap().sum(),
        1e-6,
        "matmul",
    );
}

#[test]
fn elementwise_op_gradients() {
    let x = rand_param(&[2, 3], 3);
    let y = rand_param(&[2, 3], 4);
    check_grads(
        &[x.clone(), y.clone()],
        &|p| p[0].mul(&p[1]).unwrap().scale(0.7).sum(),
        1e-4,
        "mul+scale",
    );
    check_grads(&[x.clone()], &|p| p[0].exp().sum(), 1e-4, "exp");
    check_grads(&[x.clone()], &|p| p[0].gelu().sum(), 1e-4, "gelu");
    // Keep relu probes away from the kink.
    let far = Tensor::param(vec![-1.5, -0.6, 0.4, 1.9, 0.8, -1.1], &[2, 3]).unwrap();
    check_grads(&[far], &|p| p[0].relu().sum(), 1e-4, "relu");
}

#[test]
fn add_with_row_broadcast_gradients() {
    let x = rand_param(&[3, 4], 5);
    let bias = rand_param(&[4], 6);
    check_grads(
        &[x, bias],
        &|p| {
            let sq = p[0].add(&p[1]).unwrap();
            sq.mul(&sq).unwrap().sum()
        },
        1e-4,
        "add row broadcast",
    );
}

#[test]
fn shape_op_gradients() {
    let x = rand_param(&[3, 4], 7);
    check_grads(
        &[x.clone()],
        &|p| {
            let t = p[0].transpose().unwrap();
            t.mul(&t).unwrap().sum()
        },
        1e-4,
        "transpose",
    );
    check_grads(
        &[x.clone()],
        &|p| {
            let r = p[0].reshape(&[2, 6]).unwrap();
            let left = r.slice_cols(0, 3).unwrap();
            let right = r.slice_cols(3, 3).unwrap();
            left.mul(&right).unwrap().sum()
        },
        1e-4,
        "reshape+slice_cols",
    );
    check_grads(
        &[x.clone()],
        &|p| {
            let top = p[0].slice_rows(0, 1).unwrap();
            let rest = p[0].slice_rows(1, 2).unwrap();
            let cat = Tensor::concat_rows(&[rest, top]).unwrap();
            cat.mul(&cat).unwrap().sum()
        },
        1e-4,
        "slice_rows+concat_rows",
    );
    let y = rand_param(&[3, 2], 8);
    check_grads(
        &[x, y],
        &|p| {
            let cat = Tensor::concat_cols(&[p[0].clone(), p[1].clone()]).unwrap();
            cat.mul(&cat).unwrap().sum()
        },
        1e-4,
        "concat_cols",
    );
}

#[test]
fn softmax_and_layer_norm_gradients() {
    let x = rand_param(&[3, 4], 9);
    let w = rand_param(&[3, 4], 10);
    check_grads(
        &[x.clone(), w.clone()],
        &|p| p[0].softmax(1).unwrap().mul(&p[1]).unwrap().sum(),
        1e-4,
        "softmax axis 1",
    );
    check_grads(
        &[x.clone(), w.clone()],
        &|p| p[0].softmax(0).unwrap().mul(&p[1]).unwrap().sum(),
        1e-4,
        "softmax axis 0",
    );
    let gain = rand_param(&[4], 11);
    let bias = rand_param(&[4], 12);
    check_grads(
        &[x, gain, bias],
        &|p| {
            let ln = p[0].layer_norm(&p[1], &p[2], 1e-5).unwrap();
            ln.mul(&ln).unwrap().sum()
        },
        1e-4,
        "layer_norm",
    );
}

#[test]
fn cross_entropy_through_softmax_gradients() {
    let logits = rand_param(&[5], 13);
    let mut target = vec![0.0; 5];
    target[2] = 1.0;
    check_grads(
        &[logits],
        &|p| p[0].softmax(0).unwrap().cross_entropy(&target).unwrap(),
        1e-4,
        "softmax+cross_entropy",
    );
}

#[test]
fn conv_and_pool_gradients() {
    let x = rand_param(&[2, 6, 6], 14);
    let w = rand_param(&[3, 2, 3, 3], 15);
    let b = rand_param(&[3], 16);
    check_grads(
        &[x, w, b],
        &|p| {
            let c = p[0].conv2d(&p[1], &p[2], 2, 1).unwrap();
            let c = c.mul(&c).unwrap();
            c.global_mean_pool().unwrap().sum()
        },
        1e-4,
        "conv2d+mean_pool",
    );
}

#[test]
fn shared_subgraph_accumulates_path_contributions() {
    // One node feeds two consumers; the gradient is the sum over paths.
    let x = rand_param(&[2, 2], 17);
    check_grads(
        &[x],
        &|p| {
            let shared = p[0].gelu();
            let via_a = shared.scale(1.5);
            let via_b = shared.mul(&shared).unwrap();
            via_a.add(&via_b).unwrap().sum()
        },
        1e-4,
        "shared subgraph",
    );
}

proptest! {
    #[test]
    fn softmax_sums_to_one(values in proptest::collection::vec(-30.0f64..30.0, 1..12)) {
        let n = values.len();
        let t = Tensor::from_vec(values, &[n]).unwrap();
        let s: f64 = t.softmax(0).unwrap().data().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-9);
    }

    /// Adding a constant shifts the max by the same amount, so after the
    /// max-subtraction the computation is bitwise identical. Inputs and the
    /// shift are multiples of 2^-10 to keep all sums exact.
    #[test]
    fn softmax_invariant_to_constant_shift_bitwise(
        grid in proptest::collection::vec(-2048i32..2048, 2..10),
        shift in -524288i32..524288,
    ) {
        let scale = 1.0 / 1024.0;
        let base: Vec<f64> = grid.iter().map(|&g| g as f64 * scale).collect();
        let shifted: Vec<f64> = grid.iter().map(|&g| (g + shift) as f64 * scale).collect();
        let n = base.len();
        let a = Tensor::from_vec(base, &[n]).unwrap().softmax(0).unwrap();
        let b = Tensor::from_vec(shifted, &[n]).unwrap().softmax(0).unwrap();
        for (x, y) in a.data().iter().zip(b.data().iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
