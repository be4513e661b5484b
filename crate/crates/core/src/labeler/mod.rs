//! The three labeling algorithms and a driver that runs one over a corpus.

pub mod baseline;
pub mod fixed;
pub mod moving;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use baseline::{derive_stats, label_baseline, BaselineStats};
pub use fixed::{calibrate_windows, label_fixed, WindowTable};
pub use moving::{label_moving, select_candidate};

use crate::error::Result;
use crate::model::{EngineConfig, LabelSpan, ReferenceSet, TokenizedSentence};
use crate::similarity::Scorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Baseline,
    Fixed,
    Moving,
}

/// Everything an algorithm needs besides the sentence itself.
pub enum Labeler<'a> {
    Baseline(&'a BaselineStats),
    Fixed {
        refs: &'a ReferenceSet,
        windows: &'a WindowTable,
        scorer: &'a Scorer<'a>,
    },
    Moving {
        refs: &'a ReferenceSet,
        scorer: &'a Scorer<'a>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceTiming {
    pub sentence_id: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusRun {
    pub labels: Vec<LabelSpan>,
    pub timings: Vec<SentenceTiming>,
}

impl Labeler<'_> {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Labeler::Baseline(_) => Algorithm::Baseline,
            Labeler::Fixed { .. } => Algorithm::Fixed,
            Labeler::Moving { .. } => Algorithm::Moving,
        }
    }

    pub fn label(&self, s: &TokenizedSentence, cfg: &EngineConfig) -> Result<Vec<LabelSpan>> {
        match self {
            Labeler::Baseline(stats) => label_baseline(s, stats, cfg),
            Labeler::Fixed {
                refs,
                windows,
                scorer,
            } => label_fixed(s, refs, windows, cfg, scorer),
            Labeler::Moving { refs, scorer } => label_moving(s, refs, cfg, scorer),
        }
    }

    /// Labels every sentence in order, timing each one. Stops at the first error.
    pub fn label_corpus(&self, corpus: &[TokenizedSentence], cfg: &EngineConfig) -> Result<CorpusRun> {
        cfg.validate()?;
        let mut run = CorpusRun::default();
        for s in corpus {
            let t = Instant::now();
            run.labels.extend(self.label(s, cfg)?);
            run.timings.push(SentenceTiming {
                sentence_id: s.id.clone(),
                seconds: t.elapsed().as_secs_f64(),
            });
        }
        Ok(run)
    }
}
