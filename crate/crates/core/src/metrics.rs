//! Agreement between predicted and ground-truth labels: token-level IOU,
//! all-point average precision with greedy IOU matching, and timing.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeler::SentenceTiming;
use crate::model::{EngineConfig, LabelSpan, ReferenceSet};
use crate::similarity::CallStats;

/// Token-level intersection over union of two spans of the same sentence.
pub fn span_iou(a: &LabelSpan, b: &LabelSpan) -> Result<f64> {
    if a.sentence_id != b.sentence_id {
        return Err(Error::precondition(format!(
            "cannot compare spans of sentences {:?} and {:?}",
            a.sentence_id, b.sentence_id
        )));
    }
    Ok(interval_iou(a.start, a.end(), b.start, b.end()))
}

fn interval_iou(a0: usize, a1: usize, b0: usize, b1: usize) -> f64 {
    let inter = a1.min(b1).saturating_sub(a0.max(b0));
    if inter == 0 {
        return 0.0;
    }
    let union = (a1 - a0) + (b1 - b0) - inter;
    inter as f64 / union as f64
}

fn covered<'a>(
    labels: &'a [LabelSpan],
    gesture_id: &str,
    score_min: f64,
) -> BTreeSet<(&'a str, usize)> {
    labels
        .iter()
        .filter(|l| l.gesture_id == gesture_id && l.score >= score_min)
        .flat_map(|l| (l.start..l.end()).map(move |t| (l.sentence_id.as_str(), t)))
        .collect()
}

/// IOU of the (sentence, token) sets covered by `gesture_id` in each list,
/// counting only labels scoring at least `score_min`. `None` when neither
/// list covers any token.
pub fn corpus_iou(
    pred: &[LabelSpan],
    gt: &[LabelSpan],
    gesture_id: &str,
    score_min: f64,
) -> Option<f64> {
    let p = covered(pred, gesture_id, score_min);
    let g = covered(gt, gesture_id, score_min);
    let union = p.union(&g).count();
    if union == 0 {
        return None;
    }
    Some(p.intersection(&g).count() as f64 / union as f64)
}

/// All-point average precision for one gesture.
///
/// Predictions are ranked by score (ties: sentence id, then start). Each one
/// takes the unmatched ground-truth span of the same sentence with the
/// highest IOU and is a true positive when that IOU reaches `iou_min`.
/// `None` when the gesture has no ground truth.
pub fn average_precision(
    pred: &[LabelSpan],
    gt: &[LabelSpan],
    gesture_id: &str,
    iou_min: f64,
) -> Option<f64> {
    let mut truth: HashMap<&str, Vec<(&LabelSpan, bool)>> = HashMap::new();
    let mut n_gt = 0usize;
    for l in gt.iter().filter(|l| l.gesture_id == gesture_id) {
        truth.entry(&l.sentence_id).or_default().push((l, false));
        n_gt += 1;
    }
    if n_gt == 0 {
        return None;
    }
    for spans in truth.values_mut() {
        spans.sort_by_key(|(l, _)| l.start);
    }

    let mut ranked: Vec<&LabelSpan> = pred.iter().filter(|l| l.gesture_id == gesture_id).collect();
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.sentence_id.cmp(&b.sentence_id))
            .then_with(|| a.start.cmp(&b.start))
    });

    let mut tp = 0usize;
    // Sum of precisions at true positives; each one raises recall by 1/n_gt.
    let mut precision_sum = 0.0;
    for (rank, p) in ranked.iter().enumerate() {
        let Some(spans) = truth.get_mut(p.sentence_id.as_str()) else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for (k, (g, used)) in spans.iter().enumerate() {
            if *used {
                continue;
            }
            let iou = interval_iou(p.start, p.end(), g.start, g.end());
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((k, iou));
            }
        }
        if let Some((k, iou)) = best {
            if iou >= iou_min {
                spans[k].1 = true;
                tp += 1;
                precision_sum += tp as f64 / (rank + 1) as f64;
            }
        }
    }
    Some(precision_sum / n_gt as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureMetrics {
    pub ap: Option<f64>,
    pub iou: Option<f64>,
    pub n_gt: usize,
    pub n_pred: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActSummary {
    pub mean: f64,
    pub std: f64,
    pub sentences: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BackendCalls {
    pub total: u64,
    pub distinct: u64,
}

impl From<CallStats> for BackendCalls {
    fn from(s: CallStats) -> Self {
        Self {
            total: s.backend_calls,
            distinct: s.distinct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub iou_valid_min: f64,
    pub score_min: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_gesture: BTreeMap<String, GestureMetrics>,
    pub mean_ap: Option<f64>,
    pub mean_iou: Option<f64>,
    /// Gestures left out of `mean_ap` / `mean_iou` because the metric is undefined.
    pub excluded_ap: Vec<String>,
    pub excluded_iou: Vec<String>,
    pub act_seconds: ActSummary,
    pub backend_calls: BackendCalls,
    pub config_echo: ConfigEcho,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn act_summary(timings: &[SentenceTiming]) -> ActSummary {
    let xs: Vec<f64> = timings.iter().map(|t| t.seconds).collect();
    let Some(m) = mean(&xs) else {
        return ActSummary::default();
    };
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    ActSummary {
        mean: m,
        std: var.sqrt(),
        sentences: xs.len(),
    }
}

/// Per-gesture AP and IOU over the gestures of `refs`, with macro means over
/// the gestures where each metric is defined.
pub fn evaluate(
    pred: &[LabelSpan],
    gt: &[LabelSpan],
    refs: &ReferenceSet,
    timings: &[SentenceTiming],
    calls: BackendCalls,
    cfg: &EngineConfig,
) -> Result<EvaluationReport> {
    let mut offenders: BTreeSet<&str> = BTreeSet::new();
    for l in pred.iter().chain(gt) {
        if !refs.contains(&l.gesture_id) {
            offenders.insert(&l.gesture_id);
        }
    }
    if !offenders.is_empty() {
        return Err(Error::invalid(format!(
            "gesture ids not in the reference set: {}",
            offenders.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }

    let mut per_gesture = BTreeMap::new();
    let (mut aps, mut ious) = (Vec::new(), Vec::new());
    let (mut excluded_ap, mut excluded_iou) = (Vec::new(), Vec::new());
    for g in refs.gestures() {
        let id = g.id.as_str();
        let ap = average_precision(pred, gt, id, cfg.iou_valid_min);
        let iou = corpus_iou(pred, gt, id, cfg.score_min);
        match ap {
            Some(v) => aps.push(v),
            None => excluded_ap.push(id.to_owned()),
        }
        match iou {
            Some(v) => ious.push(v),
            None => excluded_iou.push(id.to_owned()),
        }
        per_gesture.insert(
            id.to_owned(),
            GestureMetrics {
                ap,
                iou,
                n_gt: gt.iter().filter(|l| l.gesture_id == id).count(),
                n_pred: pred.iter().filter(|l| l.gesture_id == id).count(),
            },
        );
    }

    Ok(EvaluationReport {
        per_gesture,
        mean_ap: mean(&aps),
        mean_iou: mean(&ious),
        excluded_ap,
        excluded_iou,
        act_seconds: act_summary(timings),
        backend_calls: calls,
        config_echo: ConfigEcho {
            iou_valid_min: cfg.iou_valid_min,
            score_min: cfg.score_min,
            config_hash: cfg.hash(),
        },
    })
}

impl EvaluationReport {
    /// CSV with AP and IOU as percentages; undefined cells are left empty.
    pub fn to_csv(&self) -> String {
        let pct = |v: Option<f64>| v.map(|x| format!("{:.2}", x * 100.0)).unwrap_or_default();
        let mut out = String::from("gesture,ap_pct,iou_pct,n_gt,n_pred\n");
        for (id, m) in &self.per_gesture {
            out.push_str(&format!("{id},{},{},{},{}\n", pct(m.ap), pct(m.iou), m.n_gt, m.n_pred));
        }
        out.push_str(&format!("MEAN,{},{},,\n", pct(self.mean_ap), pct(self.mean_iou)));
        out
    }
}
