//! Moving-window labeling: window sizes vary per position, guarded by a
//! context-change check (expand the winning window by one word) and a
//! backtracking check (look for a strictly better start inside the winner).

use crate::error::Result;
use crate::model::{best_candidate, Candidate, Check1Mode, EngineConfig, LabelSpan, ReferenceSet, TokenizedSentence};
use crate::similarity::Scorer;

/// Every `(gesture, ref, start, win)` key the labeler may request for `s`.
pub fn all_keys<'a>(
    s: &'a TokenizedSentence,
    refs: &'a ReferenceSet,
    w_max: usize,
) -> impl Iterator<Item = (usize, usize, usize, usize)> + 'a {
    let n = s.len();
    (0..n).flat_map(move |j| {
        (0..refs.len()).flat_map(move |g| {
            (0..refs.references(g).len())
                .flat_map(move |i| (1..=w_max.min(n - j)).map(move |win| (g, i, j, win)))
        })
    })
}

fn rejects(mode: Check1Mode, best: f64, expanded: f64, th1: f64) -> bool {
    match mode {
        Check1Mode::Drop => best - expanded > th1,
        Check1Mode::Rise => expanded - best > th1,
    }
}

/// Best acceptable candidate starting at `j`, or `None`.
///
/// Gestures whose pick fails the context-change check are excluded and the
/// search repeats, at most `cfg.p` picks in total. The check runs only when
/// the expanded window still fits in the sentence and in `w_max`.
pub fn select_candidate(
    s: &TokenizedSentence,
    j: usize,
    refs: &ReferenceSet,
    cfg: &EngineConfig,
    scorer: &Scorer<'_>,
    excluded: &[usize],
    tries: u32,
) -> Result<Option<Candidate>> {
    let n = s.len();
    let mut excluded = excluded.to_vec();
    let mut tries = tries;
    let max_win = cfg.w_max.min(n.saturating_sub(j));
    loop {
        if tries >= cfg.p {
            return Ok(None);
        }
        let mut cands = Vec::new();
        for g in (0..refs.len()).filter(|g| !excluded.contains(g)) {
            for i in 0..refs.references(g).len() {
                for win in 1..=max_win {
                    cands.push(Candidate {
                        score: scorer.score(refs, g, i, s, j, win)?,
                        gesture_index: g,
                        ref_index: i,
                        win,
                        start: j,
                    });
                }
            }
        }
        let best = match best_candidate(cands) {
            Some(b) if b.score > cfg.th0 => b,
            _ => return Ok(None),
        };
        let expanded = best.win + 1;
        if j + expanded > n || expanded > cfg.w_max {
            return Ok(Some(best));
        }
        let check = scorer.score(refs, best.gesture_index, best.ref_index, s, j, expanded)?;
        if !rejects(cfg.check1_mode, best.score, check, cfg.th1) {
            return Ok(Some(best));
        }
        excluded.push(best.gesture_index);
        tries += 1;
    }
}

pub fn label_moving(
    s: &TokenizedSentence,
    refs: &ReferenceSet,
    cfg: &EngineConfig,
    scorer: &Scorer<'_>,
) -> Result<Vec<LabelSpan>> {
    if cfg.prefetch {
        scorer.prefetch(refs, s, all_keys(s, refs, cfg.w_max))?;
    }
    let n = s.len();
    let mut labels = Vec::new();
    let mut j = 0;
    while j < n {
        let Some(first) = select_candidate(s, j, refs, cfg, scorer, &[], 0)? else {
            j += 1;
            continue;
        };
        let mut chosen = first;
        for jc in j + 1..j + first.win {
            if let Some(c) = select_candidate(s, jc, refs, cfg, scorer, &[], 0)? {
                // Strictly better than the original pick; among replacements
                // the ranking order decides, earlier start on full ties.
                if c.score > first.score && c.rank_cmp(&chosen).is_gt() {
                    chosen = c;
                }
            }
        }
        labels.push(LabelSpan::predicted(
            &s.id,
            &refs.gesture(chosen.gesture_index).id,
            chosen.start,
            chosen.win,
            chosen.score,
            Some(chosen.ref_index),
        ));
        j = chosen.start + chosen.win;
    }
    Ok(labels)
}
