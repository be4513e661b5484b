//! Calibrate per-gesture windows on the bundled mini corpus, then label it
//! with the fixed-window algorithm.

use gesture_labeler::prelude::*;

fn main() -> Result<()> {
    let refs = fixture::default_reference_set();
    let corpus = gesture_labeler::io::load_corpus(fixture::data_path("mini_corpus.jsonl"))?;
    let cfg = EngineConfig::default();
    let backend = JaccardBackend;

    // The mini corpus is small, so accept windows seen at least twice.
    let table = calibrate_windows(&corpus, &refs, &cfg, &Scorer::new(&backend), 2)?;
    for (id, entry) in table.iter() {
        match entry.win {
            Some(w) => println!("{id:<14} win {w}"),
            None => println!("{id:<14} uncalibrated ({})", entry.reason.as_deref().unwrap_or("-")),
        }
    }

    let scorer = Scorer::new(&backend);
    let run = Labeler::Fixed {
        refs: &refs,
        windows: &table,
        scorer: &scorer,
    }
    .label_corpus(&corpus, &cfg)?;
    println!("{} labels, {} backend calls", run.labels.len(), scorer.stats().backend_calls);
    for l in run.labels.iter().take(5) {
        println!("  {} {} [{}, {}) {:.2}", l.sentence_id, l.gesture_id, l.start, l.end(), l.score);
    }
    Ok(())
}
