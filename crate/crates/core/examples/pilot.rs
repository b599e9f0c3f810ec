use rinkid_core::harness::*;
use rinkid_core::weaklabel::OracleScorer;
use std::time::Instant;

fn main() {
    let mut cfg = RunConfig::default();
    cfg.seed = std::env::args().nth(1).map(|a| a.parse().unwrap()).unwrap_or(7);
    cfg.eval_every = 250;
    cfg.metrics_every = 50;
    cfg.stop_at_eval_accuracy = Some(0.85);
    let t0 = Instant::now();
    let gen = generate_data(&cfg).unwrap();
    println!("gen: {:.1}s ({} train / {} test)", t0.elapsed().as_secs_f64(), gen.train.len(), gen.test.len());
    let nulls = gen.train.iter().filter(|e| e.tracklet.label.is_none()).count();
    println!("null fraction: {:.3}", nulls as f64 / gen.train.len() as f64);
    let labels = label_tracklets(&gen.train, &OracleScorer, cfg.visibility_threshold).unwrap();
    let data = PreparedData::from_generated(gen, labels.into_iter().collect());
    let t1 = Instant::now();
    let out = train(&cfg, &data).unwrap();
    for r in &out.rows {
        if r.iteration % 250 == 0 {
            println!("iter {:5}  loss {:.4}  train_acc {:.3}  eval_acc {:.3}  f1 {:.3}  t {:.0}s",
                r.iteration, r.train_loss, r.train_accuracy, r.eval_accuracy, r.weighted_f1, r.wall_clock_s);
        }
    }
    println!("train wall: {:.1}s for {} iters ({:.3} s/iter), stopped_early={}",
        t1.elapsed().as_secs_f64(), out.iterations_run,
        t1.elapsed().as_secs_f64() / out.iterations_run as f64, out.stopped_early);
    println!("final eval: acc {:.3} f1 {:.3}", out.final_eval.accuracy, out.final_eval.weighted_f1);
}
