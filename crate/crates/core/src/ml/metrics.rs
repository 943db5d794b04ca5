//! Threshold metrics and rank-statistic AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const THRESHOLD: f64 = 0.5;

/// `None` marks a metric that is undefined on the given sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub count: usize,
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

/// Mann-Whitney AUC with midranks for tied scores; `None` unless both
/// classes are present.
pub fn auc(scores: &[(f64, bool)]) -> Option<f64> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]].0 == scores[order[i]].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| scores[k].1).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn evaluate(scores: &[(f64, bool)]) -> Result<Metrics> {
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for &(s, y) in scores {
        match (s > THRESHOLD, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let precision = match (tp + fp, fn_) {
        (0, 0) => Some(1.0),
        (0, _) => None,
        (d, _) => Some(tp as f64 / d as f64),
    };
    let recall = match tp + fn_ {
        0 => None,
        d => Some(tp as f64 / d as f64),
    };
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(Metrics {
        count: scores.len(),
        accuracy: (tp + tn) as f64 / scores.len() as f64,
        auc: auc(scores),
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_flipped() {
        let perfect = [(0.9, true), (0.8, true), (0.1, false), (0.3, false)];
        let m = evaluate(&perfect).unwrap();
        assert_eq!((m.accuracy, m.auc, m.precision, m.recall, m.f1), (1.0, Some(1.0), Some(1.0), Some(1.0), Some(1.0)));
        let flipped: Vec<_> = perfect.iter().map(|&(s, y)| (s, !y)).collect();
        let m = evaluate(&flipped).unwrap();
        assert_eq!((m.accuracy, m.auc), (0.0, Some(0.0)));
    }

    #[test]
    fn ties_take_midranks() {
        assert_eq!(auc(&[(0.5, true), (0.5, false)]), Some(0.5));
        assert_eq!(auc(&[(0.7, true), (0.5, true), (0.5, false), (0.1, false)]), Some(0.875));
    }

    #[test]
    fn undefined_cases() {
        let m = evaluate(&[(0.1, false), (0.2, false)]).unwrap();
        assert_eq!(m.precision, Some(1.0));
        assert_eq!(m.recall, None);
        assert_eq!(m.auc, None);
        let m = evaluate(&[(0.1, true)]).unwrap();
        assert_eq!(m.precision, None);
        assert!(evaluate(&[]).is_err());
    }
}
