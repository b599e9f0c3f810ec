//! Label encoding and the learned-weight multi-task objective.

mod labels;
mod multitask;

pub use labels::{encode_labels, one_hot, ClassSpace, LabelTriple, DIGIT_ABSENT, DIGIT_CLASSES};
pub use multitask::{multitask_loss, multitask_loss_detailed, LossBreakdown, LossWeights};
