//! Test-only helpers: an independent, deliberately naive moving-window
//! labeler and random scripted cases to compare it against.

#![allow(dead_code)]

use gesture_labeler::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gesture(id: &str) -> Gesture {
    Gesture {
        id: id.to_owned(),
        name: id.to_owned(),
        description: String::new(),
        kind: GestureKind::Symbolic,
    }
}

pub fn refs_of(entries: &[(&str, &[&str])]) -> ReferenceSet {
    ReferenceSet::new(
        "test",
        entries
            .iter()
            .map(|(id, sents)| (gesture(id), sents.iter().map(|s| s.to_string()).collect()))
            .collect(),
    )
    .unwrap()
}

/// (score, gesture, ref, win) as plain data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pick {
    pub v: f64,
    pub g: usize,
    pub i: usize,
    pub win: usize,
    pub j: usize,
}

/// True when `a` should be preferred over `b`: higher score, then lower
/// gesture index, lower reference index, smaller window.
fn prefer(a: &Pick, b: &Pick) -> bool {
    if a.v != b.v {
        return a.v > b.v;
    }
    if a.g != b.g {
        return a.g < b.g;
    }
    if a.i != b.i {
        return a.i < b.i;
    }
    a.win < b.win
}

fn sim(backend: &dyn SimilarityBackend, reference: &str, tokens: &[String], j: usize, win: usize) -> f64 {
    backend.score(reference, &tokens[j..j + win].join(" ")).unwrap()
}

fn v_star(
    tokens: &[String],
    j: usize,
    refs: &ReferenceSet,
    excluded: &[usize],
    w_max: usize,
    backend: &dyn SimilarityBackend,
) -> Option<Pick> {
    let n = tokens.len();
    let mut best: Option<Pick> = None;
    for g in 0..refs.len() {
        if excluded.contains(&g) {
            continue;
        }
        for (i, reference) in refs.references(g).iter().enumerate() {
            let mut win = 1;
            while win <= w_max && j + win <= n {
                let p = Pick {
                    v: sim(backend, reference, tokens, j, win),
                    g,
                    i,
                    win,
                    j,
                };
                if best.map_or(true, |b| prefer(&p, &b)) {
                    best = Some(p);
                }
                win += 1;
            }
        }
    }
    best
}

/// v* at `j` subject to the context-change check, with up to `p` picks.
fn checked(
    tokens: &[String],
    j: usize,
    refs: &ReferenceSet,
    cfg: &EngineConfig,
    backend: &dyn SimilarityBackend,
) -> Option<Pick> {
    let mut excluded = Vec::new();
    for _ in 0..cfg.p {
        let best = v_star(tokens, j, refs, &excluded, cfg.w_max, backend)?;
        if best.v <= cfg.th0 {
            return None;
        }
        let can_expand = j + best.win + 1 <= tokens.len() && best.win + 1 <= cfg.w_max;
        if can_expand {
            let reference = &refs.references(best.g)[best.i];
            let v_check = sim(backend, reference, tokens, j, best.win + 1);
            let reject = match cfg.check1_mode {
                Check1Mode::Drop => best.v - v_check > cfg.th1,
                Check1Mode::Rise => v_check - best.v > cfg.th1,
            };
            if reject {
                excluded.push(best.g);
                continue;
            }
        }
        return Some(best);
    }
    None
}

/// Straight-line moving-window labeling: no cache, no batching.
pub fn naive_moving(
    s: &TokenizedSentence,
    refs: &ReferenceSet,
    cfg: &EngineConfig,
    backend: &dyn SimilarityBackend,
) -> Vec<(String, usize, usize, f64, usize)> {
    let tokens = &s.tokens;
    let n = tokens.len();
    let mut out = Vec::new();
    let mut j = 0;
    while j < n {
        let Some(first) = checked(tokens, j, refs, cfg, backend) else {
            j += 1;
            continue;
        };
        let mut replacement: Option<Pick> = None;
        for jc in j + 1..j + first.win {
            if let Some(c) = checked(tokens, jc, refs, cfg, backend) {
                if c.v > first.v && replacement.map_or(true, |r| prefer(&c, &r)) {
                    replacement = Some(c);
                }
            }
        }
        let chosen = replacement.unwrap_or(first);
        out.push((refs.gesture(chosen.g).id.clone(), chosen.j, chosen.win, chosen.v, chosen.i));
        j = chosen.j + chosen.win;
    }
    out
}

pub fn as_tuples(labels: &[LabelSpan]) -> Vec<(String, usize, usize, f64, usize)> {
    labels
        .iter()
        .map(|l| (l.gesture_id.clone(), l.start, l.len, l.score, l.ref_sentence_index.unwrap()))
        .collect()
}

pub struct RandomCase {
    pub sentence: TokenizedSentence,
    pub refs: ReferenceSet,
    pub cfg: EngineConfig,
    pub backend: ScriptedBackend,
}

/// Random sentence (0..=30 tokens), up to 5 gestures, `w_max <= 10`, and a
/// scripted table covering every span with scores on a coarse grid so that
/// ties occur.
pub fn random_case(seed: u64) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = ["a", "b", "c", "d", "e", "f"];
    let n = rng.random_range(0..=30);
    let text: Vec<&str> = (0..n).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
    let sentence = TokenizedSentence::new(format!("case{seed}"), text.join(" "));

    let k = rng.random_range(1..=5);
    let mut entries = Vec::new();
    for g in 0..k {
        let m = rng.random_range(1..=3);
        let sents = (0..m).map(|i| format!("ref-{g}-{i}")).collect();
        entries.push((gesture(&format!("g{g}")), sents));
    }
    let refs = ReferenceSet::new("rand", entries).unwrap();

    let w_max = rng.random_range(1..=10);
    let mut backend = ScriptedBackend::new(0.0).unwrap();
    for g in 0..refs.len() {
        for r in refs.references(g) {
            for j in 0..n {
                for win in 1..=(w_max + 1).min(n - j) {
                    let v = rng.random_range(0..=20) as f64 / 20.0;
                    backend.insert(r.clone(), sentence.span_text(j, win).unwrap(), v).unwrap();
                }
            }
        }
    }
    let cfg = EngineConfig {
        th0: rng.random_range(0..=10) as f64 / 10.0,
        th1: rng.random_range(0..=10) as f64 / 10.0,
        p: rng.random_range(1..=4),
        w_max,
        check1_mode: if rng.random_bool(0.5) {
            Check1Mode::Drop
        } else {
            Check1Mode::Rise
        },
        ..Default::default()
    };
    RandomCase {
        sentence,
        refs,
        cfg,
        backend,
    }
}

pub fn mini_corpus() -> Vec<TokenizedSentence> {
    gesture_labeler::io::load_corpus(fixture::data_path("mini_corpus.jsonl")).unwrap()
}

pub fn mini_gt() -> Vec<LabelSpan> {
    gesture_labeler::io::load_labels(fixture::data_path("mini_gt.jsonl")).unwrap()
}
