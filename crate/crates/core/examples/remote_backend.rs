//! Score through the HTTP similarity protocol. Pass an endpoint URL to use a
//! real scoring service; otherwise a local mock serving Jaccard scores is
//! started.

use std::sync::Arc;

use gesture_labeler::prelude::*;
use gesture_labeler::similarity::mock::MockScoringServer;

fn main() -> Result<()> {
    let mock;
    let endpoint = match std::env::args().nth(1) {
        Some(url) => url,
        None => {
            mock = MockScoringServer::start(Arc::new(JaccardBackend))?;
            mock.url()
        }
    };
    let remote = RemoteBackend::new(&endpoint, RemoteOptions::default())?;
    println!("model: {}", remote.health()?);

    let refs = fixture::default_reference_set();
    let sentence = TokenizedSentence::new("r1", "Hello there, I'm so sorry I am late");
    let scorer = Scorer::new(&remote);
    for l in label_moving(&sentence, &refs, &EngineConfig::default(), &scorer)? {
        println!("{} {:?} {:.3}", l.gesture_id, sentence.span_text(l.start, l.len)?, l.score);
    }
    println!("{} pairs sent", scorer.stats().backend_calls);
    Ok(())
}
