//! Logistic regression baseline on one-hot `(module, position)` features,
//! fitted by batch gradient descent from zero.

use serde::{Deserialize, Serialize};

use super::dataset::{dimension, FeatureRow};
use super::{base_log_odds, sigmoid, Classifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub iterations: usize,
    pub step: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            iterations: 500,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub n_features: usize,
    pub bias: f64,
    /// Indexed by `position * n + (module - 1)`.
    pub weights: Vec<f64>,
    pub degenerate: bool,
}

fn active(x: &[u32]) -> impl Iterator<Item = usize> + '_ {
    let n = x.len();
    x.iter().enumerate().map(move |(pos, &m)| pos * n + (m as usize - 1))
}

impl Classifier for LogRegModel {
    fn predict(&self, x: &[u32]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(sigmoid(self.bias + active(x).map(|i| self.weights[i]).sum::<f64>()))
    }
}

pub fn train_logreg(rows: &[FeatureRow], params: &LogRegParams) -> Result<LogRegModel> {
    let n = dimension(rows)?;
    if !(params.step > 0.0) {
        return Err(Error::Param("step size must be positive".into()));
    }
    let positives = rows.iter().filter(|r| r.label).count();
    if positives == 0 || positives == rows.len() {
        return Ok(LogRegModel {
            n_features: n,
            bias: base_log_odds(positives, rows.len()),
            weights: vec![0.0; n * n],
            degenerate: true,
        });
    }
    let mut bias = 0.0;
    let mut weights = vec![0.0; n * n];
    let scale = 1.0 / rows.len() as f64;
    for _ in 0..params.iterations {
        let mut gb = 0.0;
        let mut gw = vec![0.0; n * n];
        for r in rows {
            let z = bias + active(&r.x).map(|i| weights[i]).sum::<f64>();
            let err = sigmoid(z) - if r.label { 1.0 } else { 0.0 };
            gb += err;
            for i in active(&r.x) {
                gw[i] += err;
            }
        }
        bias -= params.step * gb * scale;
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= params.step * g * scale;
        }
    }
    Ok(LogRegModel {
        n_features: n,
        bias,
        weights,
        degenerate: false,
    })
}
