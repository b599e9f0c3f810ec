//! Jersey-number identification from player tracklets.
//!
//! The pipeline, end to end: synthesize tracklets with per-frame visibility
//! ground truth ([`synthgen`]), derive approximate frame labels and
//! visibility-guaranteed training windows ([`weaklabel`]), classify windows
//! with a transformer encoder over conv frame features ([`model`]) trained
//! under a learned-weight multi-task loss ([`loss`]), then mask tracklet
//! predictions with on-ice shift data recovered via a template-matching
//! clock reader ([`shiftsync`]). [`harness`] ties it together: training
//! loop, metrics, ablations and the convergence comparison. [`numkit`] is
//! the autodiff substrate underneath.

pub mod error;
pub mod harness;
pub mod loss;
pub mod model;
pub mod numkit;
pub mod seeds;
pub mod shiftsync;
pub mod synthgen;
pub mod weaklabel;

pub use error::{Error, Result};
pub use harness::{EvalSummary, MetricsRow, RunConfig};
pub use loss::{ClassSpace, LabelTriple, LossWeights};
pub use model::{Model, ModelConfig};
pub use numkit::{Adam, LrSchedule, Tensor};
pub use shiftsync::{ShiftDb, ShiftVector};
pub use synthgen::{Frame, ShiftRecord, SynthConfig, TeamSide, Tracklet};
pub use weaklabel::{FrameLabels, SampledWindow};
