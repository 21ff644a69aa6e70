//! Sample mean and standard error for Monte-Carlo estimates.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean, `s/√n` with the unbiased sample variance.
    pub stderr: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Summarizes `values` in the given order, so results are reproducible bit for bit.
    pub fn from_samples(values: &[f64]) -> McEstimate {
        let n = values.len();
        if n == 0 {
            return McEstimate { mean: f64::NAN, stderr: f64::NAN, samples: 0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return McEstimate { mean, stderr: f64::NAN, samples: 1 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        McEstimate { mean, stderr: (var / n as f64).sqrt(), samples: n }
    }

    /// `true` when `mean ≤ bound + k·stderr`.
    pub fn within(&self, bound: f64, k: f64) -> bool {
        self.mean <= bound + k * self.stderr
    }

    /// `|mean − target| ≤ k·stderr`, with a small absolute floor for zero-variance samples.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-12
    }
}
