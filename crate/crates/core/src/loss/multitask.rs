//! Multi-task objective with learned homoscedastic weights.
//!
//! The combined loss is `Σᵢ exp(−2sᵢ)·Lᵢ + Σᵢ sᵢ` over the holistic and two
//! digit cross-entropies, which is the `1/σᵢ²·Lᵢ + log σᵢ` weighting under
//! the substitution `σᵢ = exp(sᵢ)`. The log-parameterization keeps σ
//! strictly positive and the objective finite everywhere.

use crate::error::Result;
use crate::loss::labels::LabelTriple;
use crate::model::HeadOutputs;
use crate::numkit::Tensor;

/// The three task weights, stored as unconstrained `sᵢ = log σᵢ`.
pub struct LossWeights {
    s: [Tensor; 3],
}

impl LossWeights {
    /// Learned weights initialized at s=0 (σ=1, equal task weighting).
    pub fn learned() -> LossWeights {
        LossWeights {
            s: std::array::from_fn(|_| Tensor::param(vec![0.0], &[1]).expect("scalar")),
        }
    }

    /// Frozen weights with the given σ values (config toggle used in tests).
    pub fn fixed(sigmas: [f64; 3]) -> LossWeights {
        LossWeights {
            s: sigmas.map(|sg| Tensor::from_vec(vec![sg.ln()], &[1]).expect("scalar")),
        }
    }

    pub fn log_sigmas(&self) -> [f64; 3] {
        [self.s[0].item(), self.s[1].item(), self.s[2].item()]
    }

    pub fn sigmas(&self) -> [f64; 3] {
        self.log_sigmas().map(f64::exp)
    }

    pub fn tensors(&self) -> &[Tensor; 3] {
        &self.s
    }

    pub fn named_params(&self) -> Vec<(String, Tensor)> {
        self.s
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("loss.s{}", i + 1), t.clone()))
            .collect()
    }

    pub fn set_log_sigmas(&self, values: [f64; 3]) -> Result<()> {
        for (t, v) in self.s.iter().zip(values) {
            t.set_data(&[v])?;
        }
        Ok(())
    }
}

/// Per-task cross-entropies (useful for logging) next to the combined loss.
pub struct LossBreakdown {
    pub total: Tensor,
    pub holistic: f64,
    pub first_digit: f64,
    pub second_digit: f64,
}

/// Combine the three head losses under the learned weighting. Gradients flow
/// into the head probabilities and into s₁..s₃.
pub fn multitask_loss(out: &HeadOutputs, y: &LabelTriple, w: &LossWeights) -> Result<Tensor> {
    Ok(multitask_loss_detailed(out, y, w)?.total)
}

pub fn multitask_loss_detailed(
    out: &HeadOutputs,
    y: &LabelTriple,
    w: &LossWeights,
) -> Result<LossBreakdown> {
    let l0 = out.p0.cross_entropy(&y.holistic_one_hot(out.p0.len()))?;
    let l1 = out.p1.cross_entropy(&y.first_digit_one_hot())?;
    let l2 = out.p2.cross_entropy(&y.second_digit_one_hot())?;
    let (h, f, s2) = (l0.item(), l1.item(), l2.item());
    let mut total: Option<Tensor> = None;
    for (s, l) in w.s.iter().zip([l0, l1, l2]) {
        let term = s.scale(-2.0).exp().mul(&l)?.add(s)?;
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    Ok(LossBreakdown {
        total: total.expect("three terms"),
        holistic: h,
        first_digit: f,
        second_digit: s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::labels::{encode_labels, one_hot, ClassSpace, DIGIT_CLASSES};
    use crate::numkit::Adam;

    fn outputs_from(p0: Vec<f64>, p1: Vec<f64>, p2: Vec<f64>) -> HeadOutputs {
        let k = p0.len();
        HeadOutputs {
            p0: Tensor::from_vec(p0, &[k]).unwrap(),
            p1: Tensor::from_vec(p1, &[DIGIT_CLASSES]).unwrap(),
            p2: Tensor::from_vec(p2, &[DIGIT_CLASSES]).unwrap(),
        }
    }

    #[test]
    fn perfect_predictions_with_unit_sigma_give_zero_loss() {
        let space = ClassSpace::new(21).unwrap();
        let y = encode_labels(Some(12), &space).unwrap();
        let out = outputs_from(
            one_hot(y.holistic, 21),
            one_hot(y.first_digit, DIGIT_CLASSES),
            one_hot(y.second_digit, DIGIT_CLASSES),
        );
        let w = LossWeights::fixed([1.0, 1.0, 1.0]);
        let loss = multitask_loss(&out, &y, &w).unwrap();
        assert_eq!(loss.item(), 0.0);
    }

    #[test]
    fn uniform_predictions_match_analytic_value() {
        let space = ClassSpace::new(86).unwrap();
        let y = encode_labels(Some(12), &space).unwrap();
        let out = outputs_from(
            vec![1.0 / 86.0; 86],
            vec![1.0 / 11.0; 11],
            vec![1.0 / 11.0; 11],
        );
        let w = LossWeights::fixed([1.0, 1.0, 1.0]);
        let loss = multitask_loss(&out, &y, &w).unwrap().item();
        let want = 86.0f64.ln() + 2.0 * 11.0f64.ln();
        assert!((loss - want).abs() < 1e-9, "{loss} vs {want}");
    }

    #[test]
    fn doubling_sigma_quarters_the_task_weight_and_adds_ln2() {
        let space = ClassSpace::new(21).unwrap();
        let y = encode_labels(Some(7), &space).unwrap();
        let out = outputs_from(
            vec![1.0 / 21.0; 21],
            vec![1.0 / 11.0; 11],
            vec![1.0 / 11.0; 11],
        );
        let l0 = 21.0f64.ln();
        let base = multitask_loss(&out, &y, &LossWeights::fixed([1.0, 1.0, 1.0]))
            .unwrap()
            .item();
        let doubled = multitask_loss(&out, &y, &LossWeights::fixed([2.0, 1.0, 1.0]))
            .unwrap()
            .item();
        let want = base - l0 + 0.25 * l0 + 2.0f64.ln();
        assert!((doubled - want).abs() < 1e-9, "{doubled} vs {want}");
    }

    #[test]
    fn gradient_in_s_matches_closed_form() {
        let space = ClassSpace::new(21).unwrap();
        let y = encode_labels(Some(13), &space).unwrap();
        // Deliberately unequal task losses.
        let mut p0 = vec![0.3 / 20.0; 21];
        p0[y.holistic] = 0.7;
        let mut p1 = vec![0.6 / 10.0; 11];
        p1[y.first_digit] = 0.4;
        let mut p2 = vec![0.15 / 10.0; 11];
        p2[y.second_digit] = 0.85;
        let out = outputs_from(p0, p1, p2);
        let w = LossWeights::learned();
        w.set_log_sigmas([0.2, -0.3, 0.05]).unwrap();
        let detail = multitask_loss_detailed(&out, &y, &w).unwrap();
        detail.total.backward().unwrap();
        let tasks = [detail.holistic, detail.first_digit, detail.second_digit];
        for (i, (s, l)) in w.tensors().iter().zip(tasks).enumerate() {
            let got = s.grad().unwrap()[0];
            let want = -2.0 * (-2.0 * s.item()).exp() * l + 1.0;
            assert!((got - want).abs() < 1e-9, "s{}: {got} vs {want}", i + 1);
        }
    }

    #[test]
    fn optimizing_s_alone_converges_to_sigma_sq_equals_twice_loss() {
        // With the task losses frozen, the stationary point of each sᵢ
        // satisfies exp(2sᵢ) = 2·Lᵢ.
        let frozen = [0.7, 1.3, 0.25];
        let w = LossWeights::learned();
        let params = w.named_params();
        let mut opt = Adam::new(0.05);
        for _ in 0..3000 {
            for (_, p) in &params {
                p.zero_grad();
            }
            let mut total: Option<Tensor> = None;
            for (s, &l) in w.tensors().iter().zip(&frozen) {
                let lt = Tensor::scalar(l);
                let term = s.scale(-2.0).exp().mul(&lt).unwrap().add(s).unwrap();
                total = Some(match total {
                    None => term,
                    Some(acc) => acc.add(&term).unwrap(),
                });
            }
            total.unwrap().backward().unwrap();
            opt.step(&params).unwrap();
        }
        for (s, &l) in w.tensors().iter().zip(&frozen) {
            let sigma_sq = (2.0 * s.item()).exp();
            assert!(
                (sigma_sq - 2.0 * l).abs() < 2e-3,
                "sigma^2 {sigma_sq} vs 2L {}",
                2.0 * l
            );
        }
    }

    #[test]
    fn loss_invariant_under_consistent_roster_permutation() {
        let space = ClassSpace::new(6).unwrap();
        let y = encode_labels(Some(3), &space).unwrap();
        let p0 = vec![0.05, 0.1, 0.2, 0.4, 0.15, 0.1];
        let p1 = {
            let mut v = vec![0.02; 11];
            v[3] = 0.8;
            v
        };
        let p2 = {
            let mut v = vec![0.03; 11];
            v[10] = 0.7;
            v
        };
        let w = LossWeights::fixed([1.0, 0.8, 1.2]);
        let base = multitask_loss(&outputs_from(p0.clone(), p1.clone(), p2.clone()), &y, &w)
            .unwrap()
            .item();

        // Permute the holistic indexing and the label consistently; digit
        // labels depend on the number itself, not the roster order.
        let perm = [2usize, 4, 0, 5, 1, 3];
        let mut p0_perm = vec![0.0; 6];
        for (old, &new) in perm.iter().enumerate() {
            p0_perm[new] = p0[old];
        }
        let y_perm = LabelTriple {
            holistic: perm[y.holistic],
            ..y
        };
        let permuted = multitask_loss(&outputs_from(p0_perm, p1, p2), &y_perm, &w)
            .unwrap()
            .item();
        assert!((base - permuted).abs() < 1e-12);
    }
}
