//! Adam optimizer over named parameter tensors.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numkit::Tensor;

/// Per-parameter first/second moment buffers plus the shared step counter.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    moments: HashMap<String, (Vec<f64>, Vec<f64>)>,
}

impl Adam {
    /// Reference defaults: β1=0.9, β2=0.999, ε=1e-8.
    pub fn new(lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            moments: HashMap::new(),
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Adam {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update over every named parameter. Parameters with
    /// no accumulated gradient are treated as having a zero gradient.
    pub fn step(&mut self, params: &[(String, Tensor)]) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (name, p) in params {
            let guard = p.grad_ref();
            let grad = guard.as_deref();
            if let Some(g) = grad {
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("gradient of `{name}`")));
                }
            }
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (vec![0.0; p.len()], vec![0.0; p.len()]));
            if m.len() != p.len() {
                return Err(Error::shape(
                    "adam_step",
                    format!("moment buffer for `{name}` has stale size"),
                ));
            }
            let mut data = p.data_mut();
            for i in 0..data.len() {
                let gi = grad.map_or(0.0, |g| g[i]);
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                data[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Learning-rate schedule: the base rate is multiplied by `factor` once per
/// crossed milestone.
#[derive(Debug, Clone)]
pub struct LrSchedule {
    pub base: f64,
    pub factor: f64,
    pub milestones: Vec<u64>,
}

impl LrSchedule {
    pub fn new(base: f64, factor: f64, milestones: Vec<u64>) -> Result<LrSchedule> {
        if !milestones.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("lr milestones must be strictly increasing"));
        }
        Ok(LrSchedule {
            base,
            factor,
            milestones,
        })
    }

    /// Rate in effect for 1-based iteration `iter`.
    pub fn at(&self, iter: u64) -> f64 {
        let crossed = self.milestones.iter().filter(|&&ms| iter > ms).count() as i32;
        self.base * self.factor.powi(crossed)
    }
}

pub fn zero_grads(params: &[(String, Tensor)]) {
    for (_, p) in params {
        p.zero_grad();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(vals: &[f64]) -> Tensor {
        Tensor::param(vals.to_vec(), &[vals.len()]).unwrap()
    }

    /// Builds a loss whose gradient w.r.t. `p` equals `coeffs`.
    fn linear_loss(p: &Tensor, coeffs: &[f64]) -> Tensor {
        let c = Tensor::from_vec(coeffs.to_vec(), &[coeffs.len()]).unwrap();
        p.mul(&c).unwrap().sum()
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let p = param(&[1.0, -2.0]);
        linear_loss(&p, &[0.3, -0.7]).backward().unwrap();
        let mut opt = Adam::new(0.01);
        opt.step(&[("p".into(), p.clone())]).unwrap();
        let d = p.to_vec();
        // Bias correction makes the first step ≈ lr * sign(g).
        assert!((d[0] - (1.0 - 0.01)).abs() < 1e-8, "{d:?}");
        assert!((d[1] - (-2.0 + 0.01)).abs() < 1e-8, "{d:?}");
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let p = param(&[1.5, -4.0]);
        linear_loss(&p, &[0.0, 0.0]).backward().unwrap();
        let mut opt = Adam::new(0.1);
        opt.step(&[("p".into(), p.clone())]).unwrap();
        assert_eq!(p.to_vec(), vec![1.5, -4.0]);
        // Same with no gradient accumulated at all.
        p.zero_grad();
        opt.step(&[("p".into(), p.clone())]).unwrap();
        assert_eq!(p.to_vec(), vec![1.5, -4.0]);
    }

    #[test]
    fn two_steps_match_hand_trace() {
        // Constant gradient g: bias correction cancels exactly, so each step
        // is -lr * g / (|g| + eps).
        let g = 0.5;
        let lr = 0.1;
        let p = param(&[1.0]);
        let mut opt = Adam::new(lr);
        for _ in 0..2 {
            p.zero_grad();
            linear_loss(&p, &[g]).backward().unwrap();
            opt.step(&[("p".into(), p.clone())]).unwrap();
        }
        let expected = 1.0 - 2.0 * lr * g / (g + 1e-8);
        assert!(
            (p.item() - expected).abs() < 1e-12,
            "{} vs {expected}",
            p.item()
        );
        assert_eq!(opt.step_count(), 2);
    }

    #[test]
    fn non_finite_gradient_is_rejected_with_name() {
        let p = param(&[1.0]);
        linear_loss(&p, &[f64::NAN]).backward().unwrap();
        let mut opt = Adam::new(0.1);
        let err = opt.step(&[("conv1.w".into(), p)]).unwrap_err().to_string();
        assert!(err.contains("conv1.w"), "{err}");
    }

    #[test]
    fn schedule_decays_after_milestones() {
        let s = LrSchedule::new(1e-4, 0.2, vec![2500, 5000]).unwrap();
        assert_eq!(s.at(1), 1e-4);
        assert_eq!(s.at(2500), 1e-4);
        assert!((s.at(2501) - 2e-5).abs() < 1e-18);
        assert!((s.at(5001) - 4e-6).abs() < 1e-19);
        assert!(LrSchedule::new(1e-4, 0.2, vec![5000, 2500]).is_err());
    }
}
