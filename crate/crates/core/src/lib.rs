//! Labels word spans of sentences with Symbolic and Deictic gestures.
//!
//! A sentence is scanned for sub-sentences that are semantically close to
//! designer-written *reference sentences* of each gesture. Three labelers are
//! provided:
//!
//! - [`labeler::baseline`] draws labels from ground-truth statistics without
//!   any similarity scores;
//! - [`labeler::fixed`] scores each gesture with one calibrated window size;
//! - [`labeler::moving`] searches all window sizes up to `w_max` with a
//!   context-change check and a backtracking check.
//!
//! Similarity comes from a pluggable [`similarity::SimilarityBackend`]: a
//! Jaccard stand-in, a scripted lookup table, or a remote cross-encoder
//! service. [`metrics`] compares predictions with ground truth, and
//! [`service`] hosts the annotation API used to collect that ground truth.
//!
//! ```
//! use gesture_labeler::prelude::*;
//!
//! let refs = fixture::default_reference_set();
//! let sentence = TokenizedSentence::new("s1", "Hey, I'm so sorry");
//! let backend = JaccardBackend;
//! let scorer = Scorer::new(&backend);
//! let labels = label_moving(&sentence, &refs, &EngineConfig::default(), &scorer).unwrap();
//! assert!(labels.iter().any(|l| l.gesture_id == "i_apologize"));
//! ```

pub mod cli;
pub mod error;
pub mod fixture;
pub mod io;
pub mod labeler;
pub mod metrics;
pub mod model;
pub mod service;
pub mod similarity;
pub mod tokenize;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::fixture;
    pub use crate::labeler::{
        calibrate_windows, derive_stats, label_baseline, label_fixed, label_moving, Algorithm,
        BaselineStats, Labeler, WindowTable,
    };
    pub use crate::metrics::{average_precision, corpus_iou, evaluate, span_iou, EvaluationReport};
    pub use crate::model::{
        rank_candidates, Candidate, Check1Mode, EngineConfig, Gesture, GestureKind, LabelSource,
        LabelSpan, ReferenceSet, TokenizedSentence,
    };
    pub use crate::similarity::{
        JaccardBackend, RemoteBackend, RemoteOptions, Scorer, ScriptedBackend, SimilarityBackend,
    };
    pub use crate::tokenize::tokenize;
}
