//! Equal error rate, sampling-rate accounting and the fully supervised
//! reference.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::{self, TrainConfig};
use crate::dataset::PreparedData;
use crate::error::{Error, Result};

/// One point on an EER-versus-budget curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub strategy: String,
    pub seed: u64,
    pub iteration: usize,
    pub sampling_rate_pct: f64,
    /// Test-half EER; absent when the dataset has no ground truth.
    pub eer: Option<f64>,
    pub wall_time_s: f64,
}

/// Equal error rate of `scores` (higher means more likely positive).
///
/// Thresholds sweep the distinct score values plus ±∞; a sample is called
/// positive when its score is `>=` the threshold. The EER is read where
/// `FPR − FNR` changes sign, interpolating linearly between the two
/// bracketing thresholds.
pub fn compute_eer(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            op: "compute_eer",
            left_name: "scores",
            left: (scores.len(), 1),
            right_name: "labels",
            right: (labels.len(), 1),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("compute_eer scores"));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedEer);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // walk thresholds upward: at each distinct value v, FPR counts negatives >= v,
    // FNR counts positives < v
    let (p, n) = (positives as f64, negatives as f64);
    let mut neg_below = 0usize;
    let mut pos_below = 0usize;
    let mut prev = (1.0, 0.0); // threshold −∞
    let mut idx = 0;
    loop {
        let point = if idx < order.len() {
            let v = scores[order[idx]];
            let fpr = (negatives - neg_below) as f64 / n;
            let fnr = pos_below as f64 / p;
            while idx < order.len() && scores[order[idx]] == v {
                if labels[order[idx]] == 1 {
                    pos_below += 1;
                } else {
                    neg_below += 1;
                }
                idx += 1;
            }
            (fpr, fnr)
        } else {
            (0.0, 1.0) // threshold +∞
        };
        if let Some(eer) = crossing(prev, point) {
            return Ok(eer);
        }
        if idx >= order.len() && point == (0.0, 1.0) {
            break;
        }
        prev = point;
    }
    // the sweep ends at FPR − FNR = −1, so a crossing always exists
    unreachable!("EER sweep found no crossing")
}

/// Crossing of FPR = FNR on the segment from `a` to `b` (FPR, FNR pairs),
/// if `a` lies strictly above and `b` on or below the diagonal.
fn crossing(a: (f64, f64), b: (f64, f64)) -> Option<f64> {
    let da = a.0 - a.1;
    let db = b.0 - b.1;
    if da > 0.0 && db <= 0.0 {
        if db == 0.0 {
            return Some(b.0);
        }
        let t = da / (da - db);
        Some(a.0 + t * (b.0 - a.0))
    } else if da == 0.0 && db <= 0.0 {
        Some(a.0)
    } else {
        None
    }
}

/// Cumulative labels queried as a percentage of half the pool:
/// `(Σ |Dₖ| / (pool_total / 2)) × 100`.
pub fn sampling_rate(display_sizes: &[usize], pool_total: usize) -> f64 {
    let queried: usize = display_sizes.iter().sum();
    (queried as f64 / (pool_total as f64 / 2.0)) * 100.0
}

/// EER reported for fully supervised training on the Jefferson benchmark
/// (0.94%). Kept for reference lines in reports; not reproducible here.
pub const JEFFERSON_FULLY_SUPERVISED_EER: f64 = 0.0094;

/// Trains one classifier on the whole labeled training half and returns its
/// test-half EER.
pub fn fully_supervised_baseline(data: &PreparedData, config: &TrainConfig) -> Result<f64> {
    let train_labels = data.labels_of(&data.train_ids)?;
    let x = data.features.select_rows(&data.train_ids);
    let model = classifier::train(&x, &train_labels, config)?;
    data.test_eer(&model)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}
