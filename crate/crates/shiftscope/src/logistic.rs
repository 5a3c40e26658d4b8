//! From-scratch L2-regularized logistic separator.
//!
//! Used in two places: the classifier two-sample test (does a separator
//! tell reference from current better than chance?) and the density-ratio
//! trick behind the shared-support construction. Deliberately not a
//! learning-stack import: a fixed iteration budget and step rule keep
//! results reproducible bit for bit.

use nalgebra::{DMatrix, DVector};

pub const DEFAULT_ITERATIONS: usize = 500;
pub const DEFAULT_LEARNING_RATE: f64 = 0.5;
pub const DEFAULT_L2: f64 = 1e-3;

/// A fitted logistic model over internally standardized inputs.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    weights: DVector<f64>,
    bias: f64,
    feature_means: Vec<f64>,
    feature_scales: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LogisticModel {
    /// Fit by full-batch gradient descent on the mean log-loss plus
    /// (l2 / 2) |w|^2, bias unregularized, starting from zero weights.
    ///
    /// Inputs are standardized internally with training-set statistics so
    /// the fixed step size behaves across feature scales.
    pub fn fit(x: &DMatrix<f64>, y: &[f64], l2: f64, iterations: usize, learning_rate: f64) -> Self {
        assert_eq!(x.nrows(), y.len(), "one target per row");
        let n = x.nrows();
        let d = x.ncols();

        let mut feature_means = vec![0.0; d];
        let mut feature_scales = vec![1.0; d];
        for j in 0..d {
            let col = x.column(j);
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            feature_means[j] = mean;
            let sd = var.sqrt();
            feature_scales[j] = if sd > 0.0 { sd } else { 1.0 };
        }

        let mut scaled = x.clone();
        for j in 0..d {
            for i in 0..n {
                scaled[(i, j)] = (scaled[(i, j)] - feature_means[j]) / feature_scales[j];
            }
        }

        let mut weights = DVector::zeros(d);
        let mut bias = 0.0;
        let inv_n = 1.0 / n as f64;
        for _ in 0..iterations {
            let logits = &scaled * &weights;
            let mut residual = DVector::zeros(n);
            for i in 0..n {
                residual[i] = sigmoid(logits[i] + bias) - y[i];
            }
            let grad_w = scaled.transpose() * &residual * inv_n + l2 * &weights;
            let grad_b = residual.sum() * inv_n;
            weights -= learning_rate * grad_w;
            bias -= learning_rate * grad_b;
        }

        LogisticModel {
            weights,
            bias,
            feature_means,
            feature_scales,
        }
    }

    pub fn fit_default(x: &DMatrix<f64>, y: &[f64]) -> Self {
        Self::fit(x, y, DEFAULT_L2, DEFAULT_ITERATIONS, DEFAULT_LEARNING_RATE)
    }

    /// Log-odds of class 1 at a point.
    pub fn decision(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.weights.len(), "query dimension mismatch");
        let mut z = self.bias;
        for j in 0..x.len() {
            z += self.weights[j] * (x[j] - self.feature_means[j]) / self.feature_scales[j];
        }
        z
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    /// Hard prediction at the fixed 0.5 threshold.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) >= 0.0
    }
}
