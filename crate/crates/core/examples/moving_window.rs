//! Moving-window labeling with a scripted backend: one sentence holding
//! three gestures back to back.

use gesture_labeler::prelude::*;

fn main() -> Result<()> {
    let refs = fixture::default_reference_set();
    let backend = ScriptedBackend::from_entries(
        0.1,
        [
            ("Hey", "Hey", 0.9),
            ("I'm so sorry", "I'm so sorry", 0.85),
            ("Can you forgive me", "Can you forgive me", 0.8),
        ],
    )?;
    let sentence = TokenizedSentence::new("s1", "Hey I'm so sorry Can you forgive me");
    let cfg = EngineConfig {
        th0: 0.3,
        th1: 1.0,
        ..Default::default()
    };
    let scorer = Scorer::new(&backend);
    for l in label_moving(&sentence, &refs, &cfg, &scorer)? {
        println!(
            "{:<12} {:?} score {:.2}",
            l.gesture_id,
            sentence.span_text(l.start, l.len)?,
            l.score
        );
    }
    let st = scorer.stats();
    println!("{} queries, {} distinct pairs scored", st.queries, st.distinct);
    Ok(())
}
