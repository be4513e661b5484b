//! Domain types shared by every labeler: gestures and their reference
//! sentences, tokenized objective sentences, label spans and candidates.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureKind {
    Symbolic,
    Deictic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gesture {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub kind: GestureKind,
}

/// A set of gestures, each with the reference sentences describing the
/// contexts in which it is produced.
///
/// Gesture order is significant: it is the first tie-breaker when two
/// candidates score the same.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    author: String,
    gestures: Vec<Gesture>,
    sentences: Vec<Vec<String>>,
    warnings: Vec<String>,
}

impl ReferenceSet {
    pub fn new(author: impl Into<String>, entries: Vec<(Gesture, Vec<String>)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut gestures = Vec::with_capacity(entries.len());
        let mut sentences = Vec::with_capacity(entries.len());
        for (gesture, refs) in entries {
            if gesture.id.is_empty() {
                return Err(Error::invalid("gesture id must be non-empty"));
            }
            if !seen.insert(gesture.id.clone()) {
                return Err(Error::invalid(format!("duplicate gesture id {:?}", gesture.id)));
            }
            if refs.is_empty() {
                return Err(Error::invalid(format!(
                    "gesture {:?} has no reference sentences",
                    gesture.id
                )));
            }
            if refs.iter().any(|s| s.trim().is_empty()) {
                return Err(Error::invalid(format!(
                    "gesture {:?} has an empty reference sentence",
                    gesture.id
                )));
            }
            gestures.push(gesture);
            sentences.push(refs);
        }

        // Distinct gestures are assumed to describe distinct contexts.
        let mut warnings = Vec::new();
        let mut owner: std::collections::HashMap<&str, &str> = Default::default();
        for (g, refs) in gestures.iter().zip(&sentences) {
            for s in refs {
                if let Some(prev) = owner.insert(s.as_str(), g.id.as_str()) {
                    if prev != g.id {
                        warnings.push(format!(
                            "reference sentence {:?} is shared by gestures {:?} and {:?}",
                            s, prev, g.id
                        ));
                    }
                }
            }
        }

        Ok(Self {
            author: author.into(),
            gestures,
            sentences,
            warnings,
        })
    }

    pub fn author(&self) -> &str {
        &self.author
    }

    pub fn gestures(&self) -> &[Gesture] {
        &self.gestures
    }

    pub fn len(&self) -> usize {
        self.gestures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gestures.is_empty()
    }

    pub fn gesture(&self, index: usize) -> &Gesture {
        &self.gestures[index]
    }

    /// Reference sentences of the gesture at `index`.
    pub fn references(&self, index: usize) -> &[String] {
        &self.sentences[index]
    }

    pub fn index_of(&self, gesture_id: &str) -> Option<usize> {
        self.gestures.iter().position(|g| g.id == gesture_id)
    }

    pub fn contains(&self, gesture_id: &str) -> bool {
        self.index_of(gesture_id).is_some()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Total number of reference sentences over all gestures.
    pub fn total_references(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// A copy holding only the gestures at `indices`, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> ReferenceSet {
        let entries = indices
            .iter()
            .map(|&i| (self.gestures[i].clone(), self.sentences[i].clone()))
            .collect();
        // Restricting a valid set cannot fail.
        ReferenceSet::new(self.author.clone(), entries).expect("subset of a valid reference set")
    }

    /// Keep only the reference sentence at `pick(gesture_index)` for each gesture.
    pub fn single_reference(&self, mut pick: impl FnMut(usize, usize) -> usize) -> ReferenceSet {
        let entries = self
            .gestures
            .iter()
            .zip(&self.sentences)
            .enumerate()
            .map(|(gi, (g, refs))| {
                let i = pick(gi, refs.len()) % refs.len();
                (g.clone(), vec![refs[i].clone()])
            })
            .collect();
        ReferenceSet::new(self.author.clone(), entries).expect("subset of a valid reference set")
    }
}

/// An objective sentence as an ordered sequence of words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenizedSentence {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
}

impl TokenizedSentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = crate::tokenize::tokenize(&text);
        Self {
            id: id.into(),
            text,
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The `win` consecutive tokens starting at `start`, joined by single spaces.
    pub fn span_text(&self, start: usize, win: usize) -> Result<String> {
        if win == 0 {
            return Err(Error::precondition("window size must be at least 1"));
        }
        match start.checked_add(win) {
            Some(end) if end <= self.len() => Ok(self.tokens[start..end].join(" ")),
            _ => Err(Error::precondition(format!(
                "span (start {start}, len {win}) exceeds sentence {:?} of {} tokens",
                self.id,
                self.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Predicted,
    GroundTruth,
}

/// One gesture label over a contiguous run of tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpan {
    pub sentence_id: String,
    pub gesture_id: String,
    pub start: usize,
    pub len: usize,
    pub score: f64,
    pub source: LabelSource,
    pub ref_sentence_index: Option<usize>,
    pub annotator_id: Option<String>,
}

impl LabelSpan {
    pub fn predicted(
        sentence_id: &str,
        gesture_id: &str,
        start: usize,
        len: usize,
        score: f64,
        ref_sentence_index: Option<usize>,
    ) -> Self {
        Self {
            sentence_id: sentence_id.to_owned(),
            gesture_id: gesture_id.to_owned(),
            start,
            len,
            score,
            source: LabelSource::Predicted,
            ref_sentence_index,
            annotator_id: None,
        }
    }

    pub fn ground_truth(
        sentence_id: &str,
        gesture_id: &str,
        start: usize,
        len: usize,
        annotator_id: Option<&str>,
    ) -> Self {
        Self {
            sentence_id: sentence_id.to_owned(),
            gesture_id: gesture_id.to_owned(),
            start,
            len,
            score: 1.0,
            source: LabelSource::GroundTruth,
            ref_sentence_index: None,
            annotator_id: annotator_id.map(str::to_owned),
        }
    }

    /// One past the last covered token.
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn overlaps(&self, other: &LabelSpan) -> bool {
        self.sentence_id == other.sentence_id
            && self.start < other.end()
            && other.start < self.end()
    }
}

/// A scored (reference sentence, span) pair considered at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub score: f64,
    pub gesture_index: usize,
    pub ref_index: usize,
    pub win: usize,
    pub start: usize,
}

impl Candidate {
    /// Ranking order: `Greater` means `self` is preferred.
    ///
    /// Higher score first, then smaller gesture index, smaller reference
    /// index, smaller window and finally earlier start.
    pub fn rank_cmp(&self, other: &Candidate) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.gesture_index.cmp(&self.gesture_index))
            .then_with(|| other.ref_index.cmp(&self.ref_index))
            .then_with(|| other.win.cmp(&self.win))
            .then_with(|| other.start.cmp(&self.start))
    }
}

/// The preferred candidate under [`Candidate::rank_cmp`].
pub fn rank_candidates(cands: &[Candidate]) -> Result<Candidate> {
    best_candidate(cands.iter().copied())
        .ok_or_else(|| Error::precondition("cannot rank an empty candidate list"))
}

pub(crate) fn best_candidate(cands: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    cands.into_iter().max_by(Candidate::rank_cmp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check1Mode {
    /// Reject when the score drops by more than `th1` on expansion.
    #[default]
    Drop,
    /// Reject when the score rises by more than `th1` on expansion.
    Rise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub th0: f64,
    pub th1: f64,
    pub p: u32,
    pub w_max: usize,
    pub seed: u64,
    pub check1_mode: Check1Mode,
    pub prefetch: bool,
    pub iou_valid_min: f64,
    pub score_min: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            th0: 0.3,
            th1: 0.3,
            p: 3,
            w_max: 10,
            seed: 0,
            check1_mode: Check1Mode::Drop,
            prefetch: true,
            iou_valid_min: 0.5,
            score_min: 0.5,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("th0", self.th0),
            ("th1", self.th1),
            ("iou_valid_min", self.iou_valid_min),
            ("score_min", self.score_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.p == 0 {
            return Err(Error::invalid("p must be a positive integer"));
        }
        if self.w_max == 0 {
            return Err(Error::invalid("w_max must be at least 1"));
        }
        Ok(())
    }

    /// Stable digest of the configuration, embedded in every written artifact.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(score: f64, g: usize, r: usize, win: usize) -> Candidate {
        Candidate {
            score,
            gesture_index: g,
            ref_index: r,
            win,
            start: 0,
        }
    }

    fn gesture(id: &str) -> Gesture {
        Gesture {
            id: id.into(),
            name: id.into(),
            description: String::new(),
            kind: GestureKind::Symbolic,
        }
    }

    #[test]
    fn span_text_joins_tokens() {
        let s = TokenizedSentence::new("s", "Hey I'm so sorry");
        assert_eq!(s.span_text(1, 3).unwrap(), "I'm so sorry");
        let s = TokenizedSentence::new("s", "Hey");
        assert_eq!(s.span_text(0, 1).unwrap(), "Hey");
    }

    #[test]
    fn span_text_out_of_range() {
        let s = TokenizedSentence::new("s", "a b");
        assert!(matches!(s.span_text(1, 2), Err(Error::Precondition(_))));
        assert!(matches!(s.span_text(0, 0), Err(Error::Precondition(_))));
        assert!(s.span_text(usize::MAX, 2).is_err());
    }

    #[test]
    fn rank_strict_max() {
        let best = rank_candidates(&[cand(0.8, 0, 0, 1), cand(0.3, 1, 0, 1)]).unwrap();
        assert_eq!(best.gesture_index, 0);
        assert_eq!(best.score, 0.8);
    }

    #[test]
    fn rank_tie_prefers_gesture_order() {
        let best = rank_candidates(&[cand(0.5, 1, 0, 2), cand(0.5, 0, 3, 1)]).unwrap();
        assert_eq!((best.gesture_index, best.ref_index), (0, 3));
    }

    #[test]
    fn rank_tie_prefers_smaller_window() {
        let best = rank_candidates(&[cand(0.5, 0, 1, 4), cand(0.5, 0, 1, 2)]).unwrap();
        assert_eq!(best.win, 2);
    }

    #[test]
    fn rank_empty_is_error() {
        assert!(rank_candidates(&[]).is_err());
    }

    #[test]
    fn reference_set_validation() {
        assert!(ReferenceSet::new("x", vec![(gesture("a"), vec![])]).is_err());
        assert!(ReferenceSet::new("x", vec![(gesture(""), vec!["hi".into()])]).is_err());
        assert!(ReferenceSet::new(
            "x",
            vec![(gesture("a"), vec!["hi".into()]), (gesture("a"), vec!["yo".into()])]
        )
        .is_err());

        let refs = ReferenceSet::new(
            "x",
            vec![(gesture("a"), vec!["hi".into()]), (gesture("b"), vec!["hi".into()])],
        )
        .unwrap();
        assert_eq!(refs.warnings().len(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(EngineConfig::default().validate().is_ok());
        let bad = EngineConfig {
            w_max: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = EngineConfig {
            th0: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_hash_tracks_fields() {
        let a = EngineConfig::default();
        let b = EngineConfig {
            th0: 0.6,
            ..Default::default()
        };
        assert_eq!(a.hash(), EngineConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
    }
}
