//! Training loop, metrics, evaluation, ablation grids, and the convergence
//! comparison.

mod ablate;
mod config;
mod converge;
mod data;
mod eval;
mod metrics;
mod train;

pub use ablate::{ablate, ablation_csv, ablation_grid, AblationAxis, AblationRow, ABLATION_HEADER};
pub use config::{MaskMode, RunConfig, SamplingMode};
pub use converge::{
    convergence_compare, convergence_csv, CensoredIters, ConvergenceRun, ConvergenceSummary,
    CONVERGENCE_HEADER,
};
pub use data::{generate_data, generate_to_dir, label_tracklets, load_data, GeneratedData, PreparedData};
pub use eval::{evaluate, tracklet_probabilities, EvalSummary};
pub use metrics::{accuracy, metrics_to_csv, strip_wall_clock, weighted_f1, MetricsRow, METRICS_HEADER};
pub use train::{train, train_to_dir, TrainOutcome};
