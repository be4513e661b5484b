//! Evaluate moving-window and baseline labels against the bundled ground
//! truth and print a per-gesture table.

use gesture_labeler::metrics::BackendCalls;
use gesture_labeler::prelude::*;

fn main() -> Result<()> {
    let refs = fixture::default_reference_set();
    let corpus = gesture_labeler::io::load_corpus(fixture::data_path("mini_corpus.jsonl"))?;
    let gt = gesture_labeler::io::load_labels(fixture::data_path("mini_gt.jsonl"))?;
    let cfg = EngineConfig::default();

    let scorer = Scorer::new(&JaccardBackend);
    let moving = Labeler::Moving { refs: &refs, scorer: &scorer }.label_corpus(&corpus, &cfg)?;
    let calls = BackendCalls::from(scorer.stats());
    let report = evaluate(&moving.labels, &gt, &refs, &moving.timings, calls, &cfg)?;
    print!("{}", report.to_csv());

    let stats = derive_stats(&gt, &corpus)?;
    let base = Labeler::Baseline(&stats).label_corpus(&corpus, &cfg)?;
    let base_report = evaluate(&base.labels, &gt, &refs, &base.timings, BackendCalls::default(), &cfg)?;
    let pct = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{:.1}", v * 100.0));
    println!("mean AP  moving {} baseline {}", pct(report.mean_ap), pct(base_report.mean_ap));
    println!("mean IOU moving {} baseline {}", pct(report.mean_iou), pct(base_report.mean_iou));
    Ok(())
}
