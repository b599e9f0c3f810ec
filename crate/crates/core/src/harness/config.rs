use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::synthgen::SynthConfig;
use crate::weaklabel::AugmentConfig;

/// How training windows are cut from a tracklet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Algorithm-2 sampling guided by approximate frame labels.
    ApproxLabels,
    /// Uniform random window start, no visibility information.
    Uniform,
}

/// Mask source applied at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Time-windowed shift vectors recovered via the clock reader.
    Shifts,
    /// Full-game roster vectors.
    Roster,
    /// No masking.
    None,
}

impl std::fmt::Display for MaskMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaskMode::Shifts => write!(f, "shifts"),
            MaskMode::Roster => write!(f, "roster"),
            MaskMode::None => write!(f, "none"),
        }
    }
}

/// Every knob of a training/evaluation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub synth: SynthConfig,
    pub augment: AugmentConfig,
    /// φ — approximate-label threshold.
    pub visibility_threshold: f64,
    /// p_s — probability of drawing a null-class tracklet.
    pub null_sample_prob: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub lr_decay_factor: f64,
    pub lr_milestones: Vec<u64>,
    pub total_iters: u64,
    pub metrics_every: u64,
    /// Periodic test-set evaluation cadence; 0 = only at the end.
    pub eval_every: u64,
    /// Stop once periodic eval accuracy reaches this value.
    pub stop_at_eval_accuracy: Option<f64>,
    /// Stop once the windowed train accuracy reaches this value.
    pub stop_at_train_accuracy: Option<f64>,
    pub seed: u64,
    pub sampling: SamplingMode,
    pub mask: MaskMode,
    pub train_tracklets: usize,
    pub test_tracklets: usize,
    /// Train-accuracy threshold for the convergence comparison.
    pub convergence_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            model: ModelConfig::default(),
            synth: SynthConfig::default(),
            augment: AugmentConfig::default(),
            visibility_threshold: 0.5,
            null_sample_prob: 0.1,
            lr: 1e-4,
            batch_size: 16,
            lr_decay_factor: 0.2,
            lr_milestones: vec![2500, 5000],
            total_iters: 6000,
            metrics_every: 50,
            eval_every: 500,
            stop_at_eval_accuracy: None,
            stop_at_train_accuracy: None,
            seed: 0,
            sampling: SamplingMode::ApproxLabels,
            mask: MaskMode::Shifts,
            train_tracklets: 600,
            test_tracklets: 100,
            convergence_threshold: 0.8,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.synth.validate()?;
        if self.model.num_classes != self.synth.num_classes {
            return Err(Error::invalid(format!(
                "model num_classes {} != synth num_classes {}",
                self.model.num_classes, self.synth.num_classes
            )));
        }
        if !(self.visibility_threshold > 0.0 && self.visibility_threshold < 1.0) {
            return Err(Error::invalid("visibility_threshold must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.null_sample_prob) {
            return Err(Error::invalid("null_sample_prob must lie in [0, 1]"));
        }
        if self.batch_size == 0 || self.total_iters == 0 || self.metrics_every == 0 {
            return Err(Error::invalid("batch_size, total_iters, metrics_every must be positive"));
        }
        if !self.lr_milestones.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("lr milestones must be strictly increasing"));
        }
        if self.augment.crop_margin >= self.synth.frame_h.min(self.synth.frame_w) {
            return Err(Error::invalid("augment crop margin consumes the whole frame"));
        }
        Ok(())
    }
}
