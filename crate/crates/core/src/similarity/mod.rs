//! Semantic similarity between a reference sentence and a candidate span.
//!
//! Backends implement [`SimilarityBackend`]; labelers never call a backend
//! directly but go through a [`Scorer`], which memoizes scores per
//! (reference, sentence, start, window) key and counts backend traffic.

mod cache;
mod jaccard;
pub mod mock;
mod remote;
mod scripted;

pub use cache::{CallStats, ScoreKey, Scorer};
pub use jaccard::{jaccard_score, JaccardBackend};
pub use remote::{RemoteBackend, RemoteOptions};
pub use scripted::ScriptedBackend;

use crate::error::Result;

/// A deterministic scorer for ordered (reference, candidate) pairs.
///
/// Scores lie in `[0, 1]`. The pair is ordered: `score(a, b)` need not equal
/// `score(b, a)`.
pub trait SimilarityBackend: Send + Sync {
    /// Short identifier recorded in run manifests.
    fn identity(&self) -> String;

    fn score(&self, reference: &str, candidate: &str) -> Result<f64>;

    /// Scores many pairs at once; output order matches input order.
    fn batch_score(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        pairs.iter().map(|(r, c)| self.score(r, c)).collect()
    }
}

impl<B: SimilarityBackend + ?Sized> SimilarityBackend for std::sync::Arc<B> {
    fn identity(&self) -> String {
        (**self).identity()
    }

    fn score(&self, reference: &str, candidate: &str) -> Result<f64> {
        (**self).score(reference, candidate)
    }

    fn batch_score(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        (**self).batch_score(pairs)
    }
}
