//! Convergence comparison: approximate-label sampling vs uniform sampling,
//! measured as iterations until the windowed train accuracy first reaches
//! the configured threshold.

use crate::error::Result;
use crate::harness::config::{RunConfig, SamplingMode};
use crate::harness::data::{generate_data, label_tracklets, PreparedData};
use crate::harness::train::train;
use crate::weaklabel::OracleScorer;

/// Iterations to the threshold; runs that never reach it within the budget
/// record the budget itself and are flagged censored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoredIters {
    pub iterations: u64,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub seed: u64,
    pub approx: CensoredIters,
    pub uniform: CensoredIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSummary {
    pub threshold: f64,
    pub budget: u64,
    pub runs: Vec<ConvergenceRun>,
    pub median_approx: f64,
    pub median_uniform: f64,
}

pub const CONVERGENCE_HEADER: &str =
    "seed,approx_iters,approx_censored,uniform_iters,uniform_censored";

pub fn convergence_csv(summary: &ConvergenceSummary) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in &summary.runs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.seed, r.approx.iterations, r.approx.censored, r.uniform.iterations, r.uniform.censored
        ));
    }
    out.push_str(&format!(
        "# median_approx={} median_uniform={} threshold={} budget={}\n",
        summary.median_approx, summary.median_uniform, summary.threshold, summary.budget
    ));
    out
}

fn median(values: &[u64]) -> f64 {
    let mut v: Vec<u64> = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

fn iters_to_threshold(cfg: &RunConfig, data: &PreparedData) -> Result<CensoredIters> {
    let outcome = train(cfg, data)?;
    match outcome
        .rows
        .iter()
        .find(|r| r.train_accuracy >= cfg.convergence_threshold)
    {
        Some(row) => Ok(CensoredIters {
            iterations: row.iteration,
            censored: false,
        }),
        None => Ok(CensoredIters {
            iterations: cfg.total_iters,
            censored: true,
        }),
    }
}

/// For each seed, train twice on identical data — once with approximate-label
/// sampling and once with uniform sampling — and report per-seed pairs plus
/// the medians. The effect needs sparse visibility to show up; with every
/// frame visible the two samplers draw near-identical windows.
pub fn convergence_compare(base: &RunConfig, seeds: &[u64]) -> Result<ConvergenceSummary> {
    base.validate()?;
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut cfg = base.clone();
        cfg.seed = seed;
        cfg.stop_at_train_accuracy = Some(cfg.convergence_threshold);
        cfg.eval_every = 0;
        let generated = generate_data(&cfg)?;
        let labels = label_tracklets(&generated.train, &OracleScorer, cfg.visibility_threshold)?;
        let data = PreparedData::from_generated(generated, labels.into_iter().collect());

        cfg.sampling = SamplingMode::ApproxLabels;
        let approx = iters_to_threshold(&cfg, &data)?;
        cfg.sampling = SamplingMode::Uniform;
        let uniform = iters_to_threshold(&cfg, &data)?;
        runs.push(ConvergenceRun {
            seed,
            approx,
            uniform,
        });
    }
    let median_approx = median(&runs.iter().map(|r| r.approx.iterations).collect::<Vec<_>>());
    let median_uniform = median(&runs.iter().map(|r| r.uniform.iterations).collect::<Vec<_>>());
    Ok(ConvergenceSummary {
        threshold: base.convergence_threshold,
        budget: base.total_iters,
        runs,
        median_approx,
        median_uniform,
    })
}
