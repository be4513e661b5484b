use std::collections::HashSet;

use super::SimilarityBackend;
use crate::error::Result;

/// Token-set Jaccard overlap. Needs no model, so the engine can run end to
/// end without a scoring service.
#[derive(Debug, Default, Clone, Copy)]
pub struct JaccardBackend;

fn normalized_tokens(s: &str) -> HashSet<String> {
    s.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn jaccard_score(reference: &str, candidate: &str) -> f64 {
    let a = normalized_tokens(reference);
    let b = normalized_tokens(candidate);
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let inter = a.intersection(&b).count();
            let union = a.len() + b.len() - inter;
            inter as f64 / union as f64
        }
    }
}

impl SimilarityBackend for JaccardBackend {
    fn identity(&self) -> String {
        "jaccard".to_owned()
    }

    fn score(&self, reference: &str, candidate: &str) -> Result<f64> {
        Ok(jaccard_score(reference, candidate))
    }
}
