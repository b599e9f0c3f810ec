//! Weakly supervised training support: approximate frame labels,
//! visibility-guaranteed window sampling, stratified tracklet draws, and
//! per-window augmentation.

mod augment;
mod labels;
mod window;

pub use augment::{augment_identity, augment_window, centered_crop, AugmentConfig, WindowTransform};
pub use labels::{
    approx_labels, read_label_cache, write_label_cache, FrameLabels, FrameScorer, LabelSource,
    ModelScorer, OracleScorer, TemplateScorer,
};
pub use window::{
    draw_training_tracklet, sample_window, sample_window_at, sample_window_uniform, window_indices,
    window_start, SampledWindow, StratifiedSampler,
};
