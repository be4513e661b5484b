//! Run the annotation API on the mini corpus.
//!
//! ```text
//! cargo run --example annotation_service -- 8080 /tmp/gt.jsonl
//! curl -s localhost:8080/gestures
//! curl -s -XPOST localhost:8080/sessions -H 'content-type: application/json' -d '{"annotator_id":"a1"}'
//! ```

use gesture_labeler::prelude::*;
use gesture_labeler::service::{serve_blocking, ServiceConfig, DEFAULT_SESSION_SIZE};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let port: u16 = args.next().and_then(|p| p.parse().ok()).unwrap_or(8080);
    let gt_out = args.next().unwrap_or_else(|| "gt.jsonl".to_owned());
    let cfg = ServiceConfig {
        refs: fixture::default_reference_set(),
        corpus: gesture_labeler::io::load_corpus(fixture::data_path("mini_corpus.jsonl"))?,
        gt_out: gt_out.into(),
        session_size: DEFAULT_SESSION_SIZE,
        seed: 0,
        w_max: 10,
        ui_dir: None,
    };
    println!("listening on http://127.0.0.1:{port}");
    serve_blocking(cfg, ([127, 0, 0, 1], port).into())
}
