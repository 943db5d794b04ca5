//! Binary classifiers over permutation feature rows and their metrics.

pub mod dataset;
pub mod gbt;
pub mod logreg;
pub mod metrics;

pub use dataset::{read_rows_csv, write_rows_csv, FeatureRow};
pub use gbt::{train_gbt, GbtModel, GbtParams};
pub use logreg::{train_logreg, LogRegModel, LogRegParams};
pub use metrics::{auc, evaluate, Metrics};

use crate::error::Result;

/// A trained binary classifier.
pub trait Classifier {
    /// Probability of the positive class.
    fn predict(&self, x: &[u32]) -> Result<f64>;
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Log-odds of the clamped positive rate.
pub(crate) fn base_log_odds(positives: usize, total: usize) -> f64 {
    let p = (positives as f64 / total as f64).clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

/// Mean logistic loss of raw margins against labels.
pub(crate) fn log_loss(margins: &[f64], labels: &[bool]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| {
            // log(1 + e^m) - y*m, computed stably
            let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            softplus - if y { m } else { 0.0 }
        })
        .sum();
    total / margins.len() as f64
}
