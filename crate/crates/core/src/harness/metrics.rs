//! Accuracy, support-weighted F1, and the metrics log format.

use crate::error::{Error, Result};

/// One line of the training log. `wall_clock_s` is the only field that is
/// not a pure function of the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub iteration: u64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    /// Most recent periodic test accuracy; NaN before the first eval.
    pub eval_accuracy: f64,
    pub weighted_f1: f64,
    pub wall_clock_s: f64,
}

pub const METRICS_HEADER: &str =
    "iteration,train_loss,train_accuracy,eval_accuracy,weighted_f1,wall_clock_s";

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.3}",
            self.iteration,
            self.train_loss,
            self.train_accuracy,
            self.eval_accuracy,
            self.weighted_f1,
            self.wall_clock_s
        )
    }
}

pub fn metrics_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Drop the wall-clock column; what remains is a pure function of the seed
/// and is what determinism checks compare.
pub fn strip_wall_clock(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rfind(',') {
            Some(pos) => &line[..pos],
            None => line,
        })
        .map(|l| format!("{l}\n"))
        .collect()
}

pub fn accuracy(preds: &[usize], truths: &[usize]) -> Result<f64> {
    if preds.len() != truths.len() || preds.is_empty() {
        return Err(Error::invalid("accuracy needs equal, nonempty prediction/truth lists"));
    }
    let correct = preds.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Support-weighted mean of per-class F1. A class with no true positives
/// contributes F1 = 0; classes absent from the truth carry zero weight.
pub fn weighted_f1(preds: &[usize], truths: &[usize], num_classes: usize) -> Result<f64> {
    if preds.len() != truths.len() || preds.is_empty() {
        return Err(Error::invalid("weighted_f1 needs equal, nonempty prediction/truth lists"));
    }
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&p, &t) in preds.iter().zip(truths) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::invalid(format!(
                "class index out of range: pred {p}, truth {t}, K={num_classes}"
            )));
        }
        if p == t {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let n = truths.len() as f64;
    let mut total = 0.0;
    for c in 0..num_classes {
        let support = (tp[c] + fn_[c]) as f64;
        if support == 0.0 {
            continue;
        }
        let denom = (2 * tp[c] + fp[c] + fn_[c]) as f64;
        let f1 = if denom == 0.0 {
            0.0
        } else {
            2.0 * tp[c] as f64 / denom
        };
        total += support / n * f1;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct_means_unit_accuracy_and_f1() {
        let preds = vec![1, 2, 0, 3];
        assert_eq!(accuracy(&preds, &preds).unwrap(), 1.0);
        assert_eq!(weighted_f1(&preds, &preds, 4).unwrap(), 1.0);
    }

    #[test]
    fn weighted_f1_hand_computed_example() {
        // truths [A,A,A,B], preds [A,A,B,B] -> (3*0.8 + 1*(2/3)) / 4.
        let truths = vec![0, 0, 0, 1];
        let preds = vec![0, 0, 1, 1];
        let got = weighted_f1(&preds, &truths, 2).unwrap();
        let want = (3.0 * 0.8 + 2.0 / 3.0) / 4.0;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn symmetric_single_swap_zeroes_both() {
        // truths [A,B], preds [B,A]: no true positives anywhere.
        let got = weighted_f1(&[1, 0], &[0, 1], 2).unwrap();
        assert_eq!(got, 0.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn wall_clock_strip_removes_last_column_only() {
        let rows = vec![
            MetricsRow {
                iteration: 50,
                train_loss: 1.25,
                train_accuracy: 0.5,
                eval_accuracy: f64::NAN,
                weighted_f1: f64::NAN,
                wall_clock_s: 1.234,
            },
            MetricsRow {
                iteration: 100,
                train_loss: 0.75,
                train_accuracy: 0.625,
                eval_accuracy: 0.7,
                weighted_f1: 0.68,
                wall_clock_s: 2.5,
            },
        ];
        let csv = metrics_to_csv(&rows);
        let stripped = strip_wall_clock(&csv);
        assert!(stripped.lines().next().unwrap().ends_with("weighted_f1"));
        assert!(stripped.lines().nth(1).unwrap().ends_with("NaN"));
        assert!(!stripped.contains("1.234"));
        assert!(stripped.contains("100,0.750000,0.625000,0.700000,0.680000"));
    }
}
