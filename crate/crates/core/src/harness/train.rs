//! The training loop: stratified draw → window sample → augment → forward →
//! multi-task loss → Adam step with milestone decay.

use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::harness::config::{MaskMode, RunConfig, SamplingMode};
use crate::harness::data::PreparedData;
use crate::harness::eval::{evaluate, EvalSummary};
use crate::harness::metrics::{metrics_to_csv, MetricsRow};
use crate::loss::{encode_labels, multitask_loss, ClassSpace};
use crate::model::Model;
use crate::numkit::{zero_grads, Adam, LrSchedule, Tensor};
use crate::seeds::{rng_from, stream_seed, Stream};
use crate::shiftsync::unmasked_identity;
use crate::weaklabel::{augment_window, sample_window, sample_window_uniform, StratifiedSampler};

pub struct TrainOutcome {
    pub model: Model,
    pub rows: Vec<MetricsRow>,
    pub final_eval: EvalSummary,
    pub iterations_run: u64,
    pub stopped_early: bool,
    pub wall_s: f64,
}

pub fn train(cfg: &RunConfig, data: &PreparedData) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.train.is_empty() || data.test.is_empty() {
        return Err(Error::invalid("training needs nonempty train and test splits"));
    }
    let started = Instant::now();
    let space = ClassSpace::new(cfg.model.num_classes)?;
    let sampler = StratifiedSampler::from_labels(
        data.train.iter().map(|e| e.tracklet.label.is_none()),
    )?;
    let model = Model::init(&cfg.model, stream_seed(cfg.seed, Stream::ModelInit))?;
    let params = model.named_params();
    let schedule = LrSchedule::new(cfg.lr, cfg.lr_decay_factor, cfg.lr_milestones.clone())?;
    let mut opt = Adam::new(cfg.lr);
    let mut sample_rng = rng_from(stream_seed(cfg.seed, Stream::Sampler));
    let mut aug_rng = rng_from(stream_seed(cfg.seed, Stream::Augment));

    let mut rows: Vec<MetricsRow> = Vec::new();
    let mut window_loss = 0.0;
    let mut window_iters = 0u64;
    let mut window_correct = 0usize;
    let mut window_total = 0usize;
    let mut last_eval_acc = f64::NAN;
    let mut last_eval_f1 = f64::NAN;
    let mut stopped_early = false;
    let mut iterations_run = 0;

    for iter in 1..=cfg.total_iters {
        iterations_run = iter;
        opt.set_lr(schedule.at(iter));
        zero_grads(&params);

        let mut batch_loss: Option<Tensor> = None;
        for _ in 0..cfg.batch_size {
            let idx = sampler.draw(cfg.null_sample_prob, &mut sample_rng);
            let t = &data.train[idx].tracklet;
            let window = match cfg.sampling {
                SamplingMode::ApproxLabels => {
                    let labels = data.labels_for(&t.id)?;
                    sample_window(t, &labels.bits, cfg.model.window_len, &mut sample_rng)?
                }
                SamplingMode::Uniform => {
                    sample_window_uniform(t, cfg.model.window_len, &mut sample_rng)?
                }
            };
            let window = augment_window(&window, &cfg.augment, &mut aug_rng)?;
            let out = model.forward(&window.frames)?;
            let y = encode_labels(t.label, &space)?;
            if unmasked_identity(&out.p0.data()) == y.holistic {
                window_correct += 1;
            }
            window_total += 1;
            let loss = multitask_loss(&out, &y, &model.loss_weights)?;
            batch_loss = Some(match batch_loss {
                None => loss,
                Some(acc) => acc.add(&loss)?,
            });
        }
        let mean_loss = batch_loss
            .expect("batch_size >= 1")
            .scale(1.0 / cfg.batch_size as f64);
        if !mean_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at iteration {iter}")));
        }
        window_loss += mean_loss.item();
        window_iters += 1;
        mean_loss.backward()?;
        opt.step(&params)?;

        if cfg.eval_every > 0 && iter % cfg.eval_every == 0 {
            let ev = evaluate(&model, &data.test, None, MaskMode::None, &cfg.augment)?;
            last_eval_acc = ev.accuracy;
            last_eval_f1 = ev.weighted_f1;
        }

        if iter % cfg.metrics_every == 0 {
            rows.push(MetricsRow {
                iteration: iter,
                train_loss: window_loss / window_iters.max(1) as f64,
                train_accuracy: window_correct as f64 / window_total.max(1) as f64,
                eval_accuracy: last_eval_acc,
                weighted_f1: last_eval_f1,
                wall_clock_s: started.elapsed().as_secs_f64(),
            });
            window_loss = 0.0;
            window_iters = 0;
            window_correct = 0;
            window_total = 0;

            if let Some(th) = cfg.stop_at_train_accuracy {
                if rows.last().map(|r| r.train_accuracy >= th).unwrap_or(false) {
                    stopped_early = true;
                    break;
                }
            }
        }

        if let Some(th) = cfg.stop_at_eval_accuracy {
            if last_eval_acc.is_finite() && last_eval_acc >= th {
                stopped_early = true;
                break;
            }
        }
    }

    let final_eval = evaluate(&model, &data.test, None, MaskMode::None, &cfg.augment)?;
    Ok(TrainOutcome {
        model,
        rows,
        final_eval,
        iterations_run,
        stopped_early,
        wall_s: started.elapsed().as_secs_f64(),
    })
}

/// Train, then write `checkpoint.rkck` and `metrics.csv` into `out_dir`.
pub fn train_to_dir(cfg: &RunConfig, data: &PreparedData, out_dir: &Path) -> Result<TrainOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outcome = train(cfg, data)?;
    outcome.model.save(&out_dir.join("checkpoint.rkck"))?;
    let csv = metrics_to_csv(&outcome.rows);
    let mpath = out_dir.join("metrics.csv");
    std::fs::write(&mpath, csv).map_err(|e| Error::io(&mpath, e))?;
    Ok(outcome)
}
