//! Naive Bayes over independent per-bin features.
//!
//! The Bernoulli kernel (default) uses Laplace-smoothed per-class bin
//! probabilities. The Gaussian kernel fits a per-class mean and variance per
//! feature, with a small variance floor.

use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset};

/// Laplace smoothing for the Bernoulli kernel.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Variance floor relative to the largest feature variance (Gaussian kernel).
pub const VAR_SMOOTHING: f64 = 1e-9;
/// Relative log-joint difference treated as an exact tie.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NbcKernel {
    #[default]
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum Likelihood {
    Bernoulli {
        alpha: f64,
        theta: [Vec<f64>; 2],
    },
    Gaussian {
        mean: [Vec<f64>; 2],
        var: [Vec<f64>; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbcModel {
    /// `p(P=0)`, `p(P=1)`.
    pub class_priors: [f64; 2],
    pub likelihood: Likelihood,
    /// Training data held a single class; the model predicts the majority.
    pub degenerate: bool,
}

impl NbcModel {
    pub fn fit(train: &Dataset, kernel: NbcKernel) -> NbcModel {
        match kernel {
            NbcKernel::Bernoulli => Self::fit_bernoulli(train, DEFAULT_ALPHA),
            NbcKernel::Gaussian => Self::fit_gaussian(train),
        }
    }

    fn priors(train: &Dataset) -> ([f64; 2], bool) {
        let counts = train.class_counts();
        let n = train.len().max(1) as f64;
        let degenerate = !train.has_both_classes();
        if degenerate {
            log::warn!("naive Bayes trained on a single class; predicting the majority label");
        }
        ([counts[0] as f64 / n, counts[1] as f64 / n], degenerate)
    }

    pub fn fit_bernoulli(train: &Dataset, alpha: f64) -> NbcModel {
        let k = train.n_features();
        let counts = train.class_counts();
        let mut ones = [vec![0usize; k], vec![0usize; k]];
        for (row, &label) in train.rows().zip(train.labels()) {
            for (c, &v) in ones[label as usize].iter_mut().zip(row) {
                *c += v as usize;
            }
        }
        let theta = [0, 1].map(|c| {
            ones[c]
                .iter()
                .map(|&n1| (n1 as f64 + alpha) / (counts[c] as f64 + 2.0 * alpha))
                .collect()
        });
        let (class_priors, degenerate) = Self::priors(train);
        NbcModel {
            class_priors,
            likelihood: Likelihood::Bernoulli { alpha, theta },
            degenerate,
        }
    }

    pub fn fit_gaussian(train: &Dataset) -> NbcModel {
        let k = train.n_features();
        let counts = train.class_counts();
        let mut sum = [vec![0.0; k], vec![0.0; k]];
        let mut all_sum = vec![0.0; k];
        for (row, &label) in train.rows().zip(train.labels()) {
            for j in 0..k {
                sum[label as usize][j] += row[j] as f64;
                all_sum[j] += row[j] as f64;
            }
        }
        let mean: [Vec<f64>; 2] = [0, 1].map(|c| {
            sum[c]
                .iter()
                .map(|&s| s / counts[c].max(1) as f64)
                .collect()
        });
        let n = train.len().max(1) as f64;
        let all_mean: Vec<f64> = all_sum.iter().map(|s| s / n).collect();

        let mut sq = [vec![0.0; k], vec![0.0; k]];
        let mut all_sq = vec![0.0; k];
        for (row, &label) in train.rows().zip(train.labels()) {
            let c = label as usize;
            for j in 0..k {
                let x = row[j] as f64;
                sq[c][j] += (x - mean[c][j]).powi(2);
                all_sq[j] += (x - all_mean[j]).powi(2);
            }
        }
        let max_var = all_sq.iter().map(|s| s / n).fold(0.0, f64::max);
        let eps = if max_var > 0.0 {
            VAR_SMOOTHING * max_var
        } else {
            VAR_SMOOTHING
        };
        let var = [0, 1].map(|c| {
            sq[c]
                .iter()
                .map(|&s| s / counts[c].max(1) as f64 + eps)
                .collect()
        });
        let (class_priors, degenerate) = Self::priors(train);
        NbcModel {
            class_priors,
            likelihood: Likelihood::Gaussian { mean, var },
            degenerate,
        }
    }

    /// `log p(c) + sum_j log p(S(j) | c)` for both classes.
    pub fn log_joint(&self, features: &[u8]) -> [f64; 2] {
        [0, 1].map(|c| {
            let prior = self.class_priors[c].ln();
            let like: f64 = match &self.likelihood {
                Likelihood::Bernoulli { theta, .. } => features
                    .iter()
                    .zip(&theta[c])
                    .map(|(&s, &t)| if s == 1 { t.ln() } else { (1.0 - t).ln() })
                    .sum(),
                Likelihood::Gaussian { mean, var } => features
                    .iter()
                    .zip(mean[c].iter().zip(&var[c]))
                    .map(|(&s, (&mu, &v))| {
                        -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (s as f64 - mu).powi(2) / v)
                    })
                    .sum(),
            };
            prior + like
        })
    }

    /// Normalised class posterior.
    pub fn posterior(&self, features: &[u8]) -> [f64; 2] {
        let lj = self.log_joint(features);
        let m = lj[0].max(lj[1]);
        if m == f64::NEG_INFINITY {
            return [0.5, 0.5];
        }
        let e = lj.map(|v| (v - m).exp());
        let z = e[0] + e[1];
        [e[0] / z, e[1] / z]
    }

    pub fn predict(&self, rows: &[u8]) -> Vec<u8> {
        let k = self.n_features();
        rows.chunks_exact(k).map(|r| self.predict_one(r)).collect()
    }

    pub fn n_features(&self) -> usize {
        match &self.likelihood {
            Likelihood::Bernoulli { theta, .. } => theta[0].len(),
            Likelihood::Gaussian { mean, .. } => mean[0].len(),
        }
    }
}

impl Classifier for NbcModel {
    fn predict_one(&self, features: &[u8]) -> u8 {
        let lj = self.log_joint(features);
        // ties, up to rounding in the log sums, go to class 0
        let scale = lj[0].abs().max(lj[1].abs()).max(1.0);
        if !scale.is_finite() {
            return u8::from(lj[1] > lj[0]);
        }
        u8::from(lj[1] - lj[0] > TIE_TOLERANCE * scale)
    }
}
