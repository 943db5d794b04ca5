//! Brute-force oracles used by the test suites. Nothing here calls the
//! progression checker; the LTL oracle evaluates formulas directly on
//! ultimately periodic words.

pub mod lasso;
pub mod random;

use std::path::PathBuf;

/// Absolute path of a file in the shared `fixtures/` directory.
pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    let p = fixture_path(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// AUC as the fraction of (positive, negative) pairs ranked correctly,
/// ties counting one half.
pub fn pairwise_auc(scores: &[(f64, bool)]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

/// Area under the ROC curve by the trapezoid rule over distinct scores.
pub fn trapezoid_auc(scores: &[(f64, bool)]) -> Option<f64> {
    let p = scores.iter().filter(|s| s.1).count() as f64;
    let n = scores.len() as f64 - p;
    if p == 0.0 || n == 0.0 {
        return None;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut tp, mut fp, mut area) = (0.0, 0.0, 0.0);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let (tpr, fpr) = (tp / p, fp / n);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Some(area)
}

/// All order-preserving merges of `left` and `right`, by exhaustive
/// placement of the left elements.
pub fn brute_force_merges(left: &[usize], right: &[usize]) -> Vec<Vec<usize>> {
    let n = left.len() + right.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != left.len() {
            continue;
        }
        let (mut l, mut r) = (left.iter(), right.iter());
        out.push(
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { *l.next().unwrap() } else { *r.next().unwrap() })
                .collect(),
        );
    }
    out.sort();
    out
}
