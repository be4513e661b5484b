//! Fixed-window labeling: every gesture is scored with its own window size,
//! calibrated offline from a corpus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{best_candidate, Candidate, EngineConfig, LabelSpan, ReferenceSet, TokenizedSentence};
use crate::similarity::Scorer;

/// Minimum number of accepted scores for a window size to count as valid.
pub const DEFAULT_MIN_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostic {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    /// `mean - std`; only meaningful when `valid`.
    pub score: f64,
    pub valid: bool,
}

impl WindowDiagnostic {
    fn from_scores(scores: &[f64], min_count: usize) -> Self {
        let count = scores.len();
        if count == 0 {
            return Self {
                count,
                mean: 0.0,
                std: 0.0,
                score: 0.0,
                valid: false,
            };
        }
        let mean = scores.iter().sum::<f64>() / count as f64;
        let var = scores.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        let std = var.sqrt();
        Self {
            count,
            mean,
            std,
            score: mean - std,
            valid: count >= min_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowEntry {
    pub win: Option<usize>,
    /// Why the gesture has no window, when `win` is `None`.
    pub reason: Option<String>,
    pub diagnostics: BTreeMap<usize, WindowDiagnostic>,
}

/// Window size per gesture id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowTable {
    entries: BTreeMap<String, WindowEntry>,
}

#[derive(Serialize, Deserialize)]
struct WindowsFile {
    windows: BTreeMap<String, Option<usize>>,
    #[serde(default)]
    diagnostics: BTreeMap<String, BTreeMap<String, WindowDiagnostic>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    reasons: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
}

impl WindowTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same window for every gesture in `refs`.
    pub fn uniform(refs: &ReferenceSet, win: usize) -> Self {
        let mut t = Self::new();
        for g in refs.gestures() {
            t.set(&g.id, win);
        }
        t
    }

    pub fn set(&mut self, gesture_id: &str, win: usize) {
        let e = self.entries.entry(gesture_id.to_owned()).or_default();
        e.win = Some(win);
        e.reason = None;
    }

    pub fn set_uncalibrated(&mut self, gesture_id: &str, reason: impl Into<String>) {
        let e = self.entries.entry(gesture_id.to_owned()).or_default();
        e.win = None;
        e.reason = Some(reason.into());
    }

    pub fn get(&self, gesture_id: &str) -> Option<&WindowEntry> {
        self.entries.get(gesture_id)
    }

    pub fn window(&self, gesture_id: &str) -> Option<usize> {
        self.entries.get(gesture_id).and_then(|e| e.win)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &WindowEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn to_json(&self, config_hash: Option<&str>) -> serde_json::Value {
        let file = WindowsFile {
            windows: self.entries.iter().map(|(k, e)| (k.clone(), e.win)).collect(),
            diagnostics: self
                .entries
                .iter()
                .map(|(k, e)| {
                    let d = e.diagnostics.iter().map(|(w, d)| (w.to_string(), *d)).collect();
                    (k.clone(), d)
                })
                .collect(),
            reasons: self
                .entries
                .iter()
                .filter_map(|(k, e)| e.reason.clone().map(|r| (k.clone(), r)))
                .collect(),
            config_hash: config_hash.map(str::to_owned),
        };
        serde_json::to_value(file).expect("window table serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let file: WindowsFile =
            serde_json::from_value(value).map_err(|e| Error::invalid(format!("windows.json: {e}")))?;
        let mut t = Self::new();
        for (id, win) in file.windows {
            if win == Some(0) {
                return Err(Error::invalid(format!("window for {id:?} must be at least 1")));
            }
            let mut diagnostics = BTreeMap::new();
            for (w, d) in file.diagnostics.get(&id).into_iter().flatten() {
                let w: usize = w
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad window key {w:?} for {id:?}")))?;
                diagnostics.insert(w, *d);
            }
            let reason = file.reasons.get(&id).cloned();
            t.entries.insert(id, WindowEntry { win, reason, diagnostics });
        }
        Ok(t)
    }

    /// `(gesture index, window)` for each calibrated gesture of `refs`.
    fn resolve(&self, refs: &ReferenceSet, w_max: usize) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for (gi, g) in refs.gestures().iter().enumerate() {
            let entry = self
                .entries
                .get(&g.id)
                .ok_or_else(|| Error::invalid(format!("window table has no entry for {:?}", g.id)))?;
            if let Some(win) = entry.win {
                if win == 0 || win > w_max {
                    return Err(Error::invalid(format!(
                        "window {win} for {:?} outside [1, {w_max}]",
                        g.id
                    )));
                }
                out.push((gi, win));
            }
        }
        Ok(out)
    }
}

/// Runs the fixed-window scan with explicit `(gesture, window)` pairs and
/// returns the accepted candidates in emission order.
pub(crate) fn scan(
    s: &TokenizedSentence,
    refs: &ReferenceSet,
    windows: &[(usize, usize)],
    th0: f64,
    scorer: &Scorer<'_>,
) -> Result<Vec<Candidate>> {
    let n = s.len();
    let mut accepted = Vec::new();
    let mut j = 0;
    while j < n {
        let mut cands = Vec::new();
        for &(g, win) in windows {
            if j + win > n {
                continue;
            }
            for i in 0..refs.references(g).len() {
                cands.push(Candidate {
                    score: scorer.score(refs, g, i, s, j, win)?,
                    gesture_index: g,
                    ref_index: i,
                    win,
                    start: j,
                });
            }
        }
        match best_candidate(cands) {
            Some(best) if best.score > th0 => {
                accepted.push(best);
                j += best.win;
            }
            _ => j += 1,
        }
    }
    Ok(accepted)
}

pub fn label_fixed(
    s: &TokenizedSentence,
    refs: &ReferenceSet,
    windows: &WindowTable,
    cfg: &EngineConfig,
    scorer: &Scorer<'_>,
) -> Result<Vec<LabelSpan>> {
    let resolved = windows.resolve(refs, cfg.w_max)?;
    Ok(scan(s, refs, &resolved, cfg.th0, scorer)?
        .into_iter()
        .map(|c| {
            LabelSpan::predicted(
                &s.id,
                &refs.gesture(c.gesture_index).id,
                c.start,
                c.win,
                c.score,
                Some(c.ref_index),
            )
        })
        .collect())
}

/// Picks a window size per gesture by sweeping `1..=w_max` over `corpus`
/// with each gesture in isolation. A window is valid when it produced at
/// least `min_count` accepted scores; among valid windows the one with the
/// largest `mean - std` (population std) wins, ties going to the smaller
/// window.
pub fn calibrate_windows(
    corpus: &[TokenizedSentence],
    refs: &ReferenceSet,
    cfg: &EngineConfig,
    scorer: &Scorer<'_>,
    min_count: usize,
) -> Result<WindowTable> {
    if corpus.is_empty() {
        return Err(Error::invalid("calibration needs a non-empty corpus"));
    }
    let mut table = WindowTable::new();
    for (gi, g) in refs.gestures().iter().enumerate() {
        let mut entry = WindowEntry::default();
        let mut best: Option<(usize, f64)> = None;
        for win in 1..=cfg.w_max {
            let mut scores = Vec::new();
            for s in corpus {
                scores.extend(scan(s, refs, &[(gi, win)], cfg.th0, scorer)?.iter().map(|c| c.score));
            }
            let d = WindowDiagnostic::from_scores(&scores, min_count);
            if d.valid && best.is_none_or(|(_, b)| d.score > b) {
                best = Some((win, d.score));
            }
            entry.diagnostics.insert(win, d);
        }
        match best {
            Some((win, _)) => entry.win = Some(win),
            None => {
                entry.reason = Some(format!(
                    "no window size produced at least {min_count} scores above th0 = {}",
                    cfg.th0
                ))
            }
        }
        table.entries.insert(g.id.clone(), entry);
    }
    Ok(table)
}
