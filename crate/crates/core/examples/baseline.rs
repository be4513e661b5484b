//! Random baseline: fit statistics from ground truth and sample labels.

use gesture_labeler::prelude::*;

fn main() -> Result<()> {
    let corpus = gesture_labeler::io::load_corpus(fixture::data_path("mini_corpus.jsonl"))?;
    let gt = gesture_labeler::io::load_labels(fixture::data_path("mini_gt.jsonl"))?;
    let stats = derive_stats(&gt, &corpus)?;
    println!("start rate {:.3}", stats.start_rate);
    for (id, p) in &stats.gesture_probs {
        println!("{id:<14} p {p:.3} window {:.2} ± {:.2}", stats.window_mean[id], stats.window_std[id]);
    }
    let cfg = EngineConfig {
        seed: 42,
        ..Default::default()
    };
    let run = Labeler::Baseline(&stats).label_corpus(&corpus, &cfg)?;
    println!("{} labels over {} sentences", run.labels.len(), corpus.len());
    Ok(())
}
