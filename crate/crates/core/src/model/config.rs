use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::DIGIT_CLASSES;

/// Layer-norm variance floor used throughout the network.
pub const LN_EPS: f64 = 1e-5;

/// Architecture hyperparameters. Paper-scale values are d=512, l=2, h=8,
/// D_h=64, m=30, K=86; the defaults here are the desk-scale configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Frame feature width d.
    pub feature_dim: usize,
    /// Encoder layers l.
    pub layers: usize,
    /// Attention heads per layer h.
    pub heads: usize,
    /// Per-head width D_h; the attention inner width is h·D_h.
    pub head_dim: usize,
    /// Window length m (frames per sampled sequence).
    pub window_len: usize,
    /// Holistic classes K (null + jersey numbers).
    pub num_classes: usize,
    /// Base channel count of the conv embedder (stages c, 2c, 4c).
    pub embed_channels: usize,
}

impl Default for ModelConfig {
    fn default() -> ModelConfig {
        ModelConfig {
            feature_dim: 64,
            layers: 2,
            heads: 4,
            head_dim: 16,
            window_len: 16,
            num_classes: 21,
            embed_channels: 8,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("feature_dim", self.feature_dim),
            ("heads", self.heads),
            ("head_dim", self.head_dim),
            ("window_len", self.window_len),
            ("embed_channels", self.embed_channels),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("num_classes must be at least 2"));
        }
        Ok(())
    }

    /// Attention inner width h·D_h.
    pub fn attn_dim(&self) -> usize {
        self.heads * self.head_dim
    }

    /// Hidden width of the per-layer MLP.
    pub fn mlp_hidden(&self) -> usize {
        2 * self.feature_dim
    }

    pub fn digit_classes(&self) -> usize {
        DIGIT_CLASSES
    }
}
