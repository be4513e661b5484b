//! Statistical labeling without similarity scores: gestures and window sizes
//! are drawn from distributions fitted to ground-truth labels.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EngineConfig, LabelSpan, ReferenceSet, TokenizedSentence};

/// Default label start rate when no ground truth is available.
pub const DEFAULT_START_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub gesture_probs: BTreeMap<String, f64>,
    pub window_mean: BTreeMap<String, f64>,
    pub window_std: BTreeMap<String, f64>,
    /// Probability of starting a label at a scanned token.
    pub start_rate: f64,
}

impl BaselineStats {
    /// Uniform gestures, window ~ N(3, 1), for use without ground truth.
    pub fn fallback(refs: &ReferenceSet, start_rate: f64) -> Self {
        let p = 1.0 / refs.len().max(1) as f64;
        let ids = || refs.gestures().iter().map(|g| g.id.clone());
        Self {
            gesture_probs: ids().map(|id| (id, p)).collect(),
            window_mean: ids().map(|id| (id, 3.0)).collect(),
            window_std: ids().map(|id| (id, 1.0)).collect(),
            start_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.start_rate) {
            return Err(Error::invalid(format!("start_rate {} outside [0, 1]", self.start_rate)));
        }
        let mut total = 0.0;
        for (id, &p) in &self.gesture_probs {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::invalid(format!("probability of {id:?} is {p}")));
            }
            total += p;
            if p == 0.0 {
                continue;
            }
            match (self.window_mean.get(id), self.window_std.get(id)) {
                (Some(&m), Some(&s)) if m >= 1.0 && s >= 0.0 && m.is_finite() && s.is_finite() => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "gesture {id:?} needs window_mean >= 1 and window_std >= 0"
                    )))
                }
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("gesture probabilities sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Fits label frequencies, per-gesture window mean / population std, and the
/// start rate (labels per corpus token) from ground truth.
pub fn derive_stats(gt: &[LabelSpan], corpus: &[TokenizedSentence]) -> Result<BaselineStats> {
    if gt.is_empty() {
        return Err(Error::invalid(
            "no ground-truth labels; supply statistics explicitly instead",
        ));
    }
    let lengths: HashMap<&str, usize> = corpus.iter().map(|s| (s.id.as_str(), s.len())).collect();
    let mut windows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for l in gt {
        if !lengths.contains_key(l.sentence_id.as_str()) {
            return Err(Error::invalid(format!(
                "ground-truth label refers to unknown sentence {:?}",
                l.sentence_id
            )));
        }
        windows.entry(l.gesture_id.clone()).or_default().push(l.len as f64);
    }
    let total = gt.len() as f64;
    let tokens: usize = corpus.iter().map(TokenizedSentence::len).sum();

    let mut stats = BaselineStats {
        gesture_probs: BTreeMap::new(),
        window_mean: BTreeMap::new(),
        window_std: BTreeMap::new(),
        start_rate: (total / tokens as f64).min(1.0),
    };
    for (id, ws) in windows {
        let n = ws.len() as f64;
        let mean = ws.iter().sum::<f64>() / n;
        let var = ws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
        stats.gesture_probs.insert(id.clone(), n / total);
        stats.window_mean.insert(id.clone(), mean);
        stats.window_std.insert(id, var.sqrt());
    }
    Ok(stats)
}

/// Per-sentence seed, so output does not depend on corpus order.
pub fn sentence_seed(seed: u64, sentence_id: &str) -> u64 {
    // FNV-1a over the id, folded into the run seed with a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in sentence_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Sampler {
    ids: Vec<String>,
    pick: WeightedIndex<f64>,
    windows: Vec<Normal<f64>>,
}

impl Sampler {
    fn new(stats: &BaselineStats) -> Result<Self> {
        stats.validate()?;
        let live: Vec<(&String, f64)> = stats
            .gesture_probs
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|(id, &p)| (id, p))
            .collect();
        let pick = WeightedIndex::new(live.iter().map(|(_, p)| *p))
            .map_err(|e| Error::invalid(format!("gesture distribution: {e}")))?;
        let windows = live
            .iter()
            .map(|(id, _)| {
                Normal::new(stats.window_mean[*id], stats.window_std[*id])
                    .map_err(|e| Error::invalid(format!("window distribution of {id:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            ids: live.into_iter().map(|(id, _)| id.clone()).collect(),
            pick,
            windows,
        })
    }
}

pub fn label_baseline(
    s: &TokenizedSentence,
    stats: &BaselineStats,
    cfg: &EngineConfig,
) -> Result<Vec<LabelSpan>> {
    let sampler = Sampler::new(stats)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sentence_seed(cfg.seed, &s.id));
    let n = s.len();
    let mut labels = Vec::new();
    // No score can lie strictly above a threshold of 1.
    if cfg.th0 >= 1.0 {
        return Ok(labels);
    }
    let mut j = 0;
    while j < n {
        if !rng.random_bool(stats.start_rate) {
            j += 1;
            continue;
        }
        let g = sampler.pick.sample(&mut rng);
        let drawn = sampler.windows[g].sample(&mut rng).round();
        let limit = cfg.w_max.min(n - j);
        let win = if drawn < 1.0 {
            1
        } else {
            (drawn as usize).min(limit)
        };
        let score = loop {
            let u: f64 = rng.random();
            let v = 1.0 - u * (1.0 - cfg.th0);
            if v > cfg.th0 {
                break v;
            }
        };
        labels.push(LabelSpan::predicted(&s.id, &sampler.ids[g], j, win, score, None));
        j += win;
    }
    Ok(labels)
}
