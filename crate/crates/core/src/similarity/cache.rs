use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use once_cell::sync::OnceCell;
use serde::{Deserialize, Serialize};

use super::SimilarityBackend;
use crate::error::Result;
use crate::model::{ReferenceSet, TokenizedSentence};

/// Identifies one similarity query: reference sentence `ref_index` of
/// `gesture_id` against the window `[start, start + win)` of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScoreKey {
    pub gesture_id: String,
    pub ref_index: usize,
    pub sentence_id: String,
    pub start: usize,
    pub win: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallStats {
    /// Scores requested by labelers.
    pub queries: u64,
    /// Pairs actually sent to the backend.
    pub backend_calls: u64,
    /// Distinct keys requested.
    pub distinct: u64,
}

type Cell = Arc<OnceCell<f64>>;

/// Routes labeler queries to a backend, memoizing by [`ScoreKey`].
///
/// With memoization the backend sees each key at most once, including under
/// concurrent use: the first caller for a key computes it and the others
/// wait on the same cell. Sentence ids must be unique across everything
/// scored through one `Scorer`.
pub struct Scorer<'a> {
    backend: &'a dyn SimilarityBackend,
    memoize: bool,
    cells: Mutex<HashMap<ScoreKey, Cell>>,
    seen: Mutex<HashSet<ScoreKey>>,
    queries: AtomicU64,
    backend_calls: AtomicU64,
}

impl<'a> Scorer<'a> {
    pub fn new(backend: &'a dyn SimilarityBackend) -> Self {
        Self::with_memoization(backend, true)
    }

    /// Every query goes to the backend. Counters still run.
    pub fn uncached(backend: &'a dyn SimilarityBackend) -> Self {
        Self::with_memoization(backend, false)
    }

    fn with_memoization(backend: &'a dyn SimilarityBackend, memoize: bool) -> Self {
        Self {
            backend,
            memoize,
            cells: Mutex::default(),
            seen: Mutex::default(),
            queries: AtomicU64::new(0),
            backend_calls: AtomicU64::new(0),
        }
    }

    pub fn backend(&self) -> &dyn SimilarityBackend {
        self.backend
    }

    pub fn is_memoized(&self) -> bool {
        self.memoize
    }

    pub fn stats(&self) -> CallStats {
        CallStats {
            queries: self.queries.load(Ordering::Relaxed),
            backend_calls: self.backend_calls.load(Ordering::Relaxed),
            distinct: self.seen.lock().unwrap().len() as u64,
        }
    }

    fn key(
        refs: &ReferenceSet,
        gesture: usize,
        ref_index: usize,
        sentence: &TokenizedSentence,
        start: usize,
        win: usize,
    ) -> ScoreKey {
        ScoreKey {
            gesture_id: refs.gesture(gesture).id.clone(),
            ref_index,
            sentence_id: sentence.id.clone(),
            start,
            win,
        }
    }

    /// Similarity of reference `ref_index` of gesture `gesture` against the
    /// window of `win` tokens at `start`.
    pub fn score(
        &self,
        refs: &ReferenceSet,
        gesture: usize,
        ref_index: usize,
        sentence: &TokenizedSentence,
        start: usize,
        win: usize,
    ) -> Result<f64> {
        let candidate = sentence.span_text(start, win)?;
        let reference = &refs.references(gesture)[ref_index];
        let key = Self::key(refs, gesture, ref_index, sentence, start, win);
        self.queries.fetch_add(1, Ordering::Relaxed);

        if !self.memoize {
            self.seen.lock().unwrap().insert(key);
            self.backend_calls.fetch_add(1, Ordering::Relaxed);
            return self.backend.score(reference, &candidate);
        }

        let cell = {
            let mut cells = self.cells.lock().unwrap();
            cells.entry(key.clone()).or_default().clone()
        };
        let value = cell.get_or_try_init(|| {
            self.backend_calls.fetch_add(1, Ordering::Relaxed);
            self.backend.score(reference, &candidate)
        })?;
        self.seen.lock().unwrap().insert(key);
        Ok(*value)
    }

    /// Scores every listed `(gesture, ref_index, start, win)` not yet known in
    /// a single batch call. No-op without memoization.
    pub fn prefetch(
        &self,
        refs: &ReferenceSet,
        sentence: &TokenizedSentence,
        keys: impl IntoIterator<Item = (usize, usize, usize, usize)>,
    ) -> Result<()> {
        if !self.memoize {
            return Ok(());
        }
        let mut pending: Vec<(Cell, &str, String)> = Vec::new();
        {
            let mut cells = self.cells.lock().unwrap();
            let mut seen = self.seen.lock().unwrap();
            for (g, i, start, win) in keys {
                let key = Self::key(refs, g, i, sentence, start, win);
                let cell = cells.entry(key.clone()).or_default().clone();
                let fresh = seen.insert(key);
                if fresh && cell.get().is_none() {
                    let reference = refs.references(g)[i].as_str();
                    pending.push((cell, reference, sentence.span_text(start, win)?));
                }
            }
        }
        if pending.is_empty() {
            return Ok(());
        }
        let pairs: Vec<(&str, &str)> = pending.iter().map(|(_, r, c)| (*r, c.as_str())).collect();
        let scores = self.backend.batch_score(&pairs)?;
        if scores.len() != pairs.len() {
            return Err(crate::error::Error::Protocol(format!(
                "backend returned {} scores for {} pairs",
                scores.len(),
                pairs.len()
            )));
        }
        self.backend_calls
            .fetch_add(pairs.len() as u64, Ordering::Relaxed);
        for ((cell, _, _), s) in pending.iter().zip(scores) {
            // A concurrent caller may have filled the cell first; same value.
            let _ = cell.set(s);
        }
        Ok(())
    }
}
