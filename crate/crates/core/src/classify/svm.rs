//! Soft-margin linear SVM.
//!
//! Minimises `0.5 * |d|^2 + C * sum_i max(0, 1 - y_i (d . x_i + b))` with
//! labels mapped `{0, 1} -> {-1, +1}` and an unregularised bias.
//!
//! The solver runs SMO (maximal-violating-pair working set) on the dual.
//! Each outer iteration performs up to `n` pair updates, forms the primal
//! candidate implied by the dual variables, refits its bias exactly, and then
//! moves the primal iterate to the best point on the segment towards the
//! candidate. The primal iterate therefore never gets worse, and it
//! converges because the candidate does.

use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_BOX_CONSTRAINT: f64 = 1.0;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
/// Relative duality gap accepted as converged.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Maximal KKT violation accepted as converged.
pub const DEFAULT_KKT_TOLERANCE: f64 = 1e-3;

const TAU: f64 = 1e-12;
const LINE_SEARCH_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub kkt_tolerance: f64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            kkt_tolerance: DEFAULT_KKT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub box_constraint: f64,
    /// Right-hand side of the decision rule; kept at 0 with the offset folded into `bias`.
    pub decision_offset: f64,
}

impl SvmModel {
    pub fn decision_value(&self, features: &[f64]) -> f64 {
        dot(&self.weights, features) + self.bias - self.decision_offset
    }

    pub fn predict(&self, rows: &[u8]) -> Vec<u8> {
        rows.chunks_exact(self.weights.len())
            .map(|r| self.predict_one(r))
            .collect()
    }

    pub fn predict_dense(&self, rows: &[f64]) -> Vec<u8> {
        rows.chunks_exact(self.weights.len())
            .map(|r| u8::from(self.decision_value(r) > 0.0))
            .collect()
    }

    pub fn fit(train: &Dataset, box_constraint: f64) -> Result<SvmModel> {
        Ok(SvmProblem::from_dataset(train)?
            .solve(box_constraint, &SvmOptions::default())?
            .model)
    }
}

impl Classifier for SvmModel {
    fn predict_one(&self, features: &[u8]) -> u8 {
        let s: f64 = self
            .weights
            .iter()
            .zip(features)
            .map(|(w, &x)| w * x as f64)
            .sum();
        u8::from(s + self.bias > self.decision_offset)
    }
}

/// Solver output with its convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: SvmModel,
    /// Primal hinge objective after each outer iteration, starting from the initial point.
    pub objective_history: Vec<f64>,
    /// Dual objective after each outer iteration.
    pub dual_history: Vec<f64>,
    pub iterations: usize,
    pub duality_gap: f64,
}

/// Training rows prepared once and solved for any box constraint.
#[derive(Debug, Clone)]
pub struct SvmProblem {
    n: usize,
    k: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    gram: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SvmProblem {
    pub fn new(features: &[f64], n_features: usize, labels: &[u8]) -> Result<Self> {
        if n_features == 0 || features.len() != labels.len() * n_features {
            return Err(Error::Shape(format!(
                "{} feature values do not form {} rows of {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if labels.is_empty() {
            return Err(Error::EmptyInput("svm training set is empty".into()));
        }
        let n = labels.len();
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { -1.0 })
            .collect();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            let xi = &features[i * n_features..(i + 1) * n_features];
            for j in i..n {
                let v = dot(xi, &features[j * n_features..(j + 1) * n_features]);
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        Ok(SvmProblem {
            n,
            k: n_features,
            x: features.to_vec(),
            y,
            gram,
        })
    }

    pub fn from_dataset(train: &Dataset) -> Result<Self> {
        let x: Vec<f64> = train.features().iter().map(|&v| v as f64).collect();
        Self::new(&x, train.n_features(), train.labels())
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.k..(i + 1) * self.k]
    }

    fn margins(&self, d: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(d, self.row(i))).collect()
    }

    fn hinge_sum(&self, scores: &[f64], b: f64) -> f64 {
        scores
            .iter()
            .zip(&self.y)
            .map(|(s, y)| (1.0 - y * (s + b)).max(0.0))
            .sum()
    }

    /// Primal objective at `(d, b)` given precomputed `d . x_i`.
    fn primal(&self, d: &[f64], scores: &[f64], b: f64, c: f64) -> f64 {
        0.5 * dot(d, d) + c * self.hinge_sum(scores, b)
    }

    /// Exact minimiser over `b` of the hinge sum for fixed scores.
    fn best_bias(&self, scores: &[f64]) -> f64 {
        // Kinks where a term's slope switches off (+1 class) or on (-1 class).
        let mut kinks: Vec<f64> = scores
            .iter()
            .zip(&self.y)
            .map(|(s, &y)| if y > 0.0 { 1.0 - s } else { -1.0 - s })
            .collect();
        kinks.sort_by(f64::total_cmp);
        let n_pos = self.y.iter().filter(|&&y| y > 0.0).count() as i64;
        // slope left of every kink is -n_pos; each kink adds +1
        let mut slope = -n_pos;
        for (m, &kink) in kinks.iter().enumerate() {
            slope += 1;
            if slope > 0 {
                return kink;
            }
            if slope == 0 {
                // flat between this kink and the next
                return match kinks.get(m + 1) {
                    Some(&next) => 0.5 * (kink + next),
                    None => kink,
                };
            }
        }
        kinks.last().copied().unwrap_or(0.0)
    }

    /// Solves for box constraint `c`.
    pub fn solve(&self, c: f64, opts: &SvmOptions) -> Result<SvmFit> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "box constraint {c} must be positive"
            )));
        }
        let (n, k) = (self.n, self.k);
        let n_pos = self.y.iter().filter(|&&y| y > 0.0).count();
        if n_pos == 0 || n_pos == n {
            log::warn!("svm trained on a single class; predicting the constant label");
            let bias = if n_pos == n { 1.0 } else { -1.0 };
            let scores = vec![0.0; n];
            let obj = c * self.hinge_sum(&scores, bias);
            return Ok(SvmFit {
                model: SvmModel {
                    weights: vec![0.0; k],
                    bias,
                    box_constraint: c,
                    decision_offset: 0.0,
                },
                objective_history: vec![obj],
                dual_history: vec![0.0],
                iterations: 0,
                duality_gap: 0.0,
            });
        }

        let y = &self.y;
        let q = |i: usize, j: usize| y[i] * y[j] * self.gram[i * n + j];
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];

        let mut d_cur = vec![0.0; k];
        let mut s_cur = vec![0.0; n];
        let mut b_cur = self.best_bias(&s_cur);
        let mut p_cur = self.primal(&d_cur, &s_cur, b_cur, c);
        let mut objective_history = vec![p_cur];
        let mut dual_history = vec![0.0];
        let mut last_delta = f64::INFINITY;
        let mut gap = f64::INFINITY;

        for iteration in 1..=opts.max_iterations {
            let mut kkt_ok = false;
            for _ in 0..n {
                // maximal violating pair
                let mut i = usize::MAX;
                let mut g_max = f64::NEG_INFINITY;
                let mut j = usize::MAX;
                let mut g_min = f64::INFINITY;
                for t in 0..n {
                    let v = -y[t] * grad[t];
                    let up = if y[t] > 0.0 {
                        alpha[t] < c
                    } else {
                        alpha[t] > 0.0
                    };
                    let low = if y[t] > 0.0 {
                        alpha[t] > 0.0
                    } else {
                        alpha[t] < c
                    };
                    if up && v > g_max {
                        g_max = v;
                        i = t;
                    }
                    if low && v < g_min {
                        g_min = v;
                        j = t;
                    }
                }
                if i == usize::MAX || j == usize::MAX || g_max - g_min < opts.kkt_tolerance {
                    kkt_ok = true;
                    break;
                }
                let (old_i, old_j) = (alpha[i], alpha[j]);
                if y[i] != y[j] {
                    let quad =
                        (self.gram[i * n + i] + self.gram[j * n + j] + 2.0 * q(i, j)).max(TAU);
                    let delta = (-grad[i] - grad[j]) / quad;
                    let diff = alpha[i] - alpha[j];
                    alpha[i] += delta;
                    alpha[j] += delta;
                    if diff > 0.0 {
                        if alpha[j] < 0.0 {
                            alpha[j] = 0.0;
                            alpha[i] = diff;
                        }
                    } else if alpha[i] < 0.0 {
                        alpha[i] = 0.0;
                        alpha[j] = -diff;
                    }
                    if diff > 0.0 {
                        if alpha[i] > c {
                            alpha[i] = c;
                            alpha[j] = c - diff;
                        }
                    } else if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = c + diff;
                    }
                } else {
                    let quad =
                        (self.gram[i * n + i] + self.gram[j * n + j] - 2.0 * q(i, j)).max(TAU);
                    let delta = (grad[i] - grad[j]) / quad;
                    let sum = alpha[i] + alpha[j];
                    alpha[i] -= delta;
                    alpha[j] += delta;
                    if sum > c {
                        if alpha[i] > c {
                            alpha[i] = c;
                            alpha[j] = sum - c;
                        }
                    } else if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = sum;
                    }
                    if sum > c {
                        if alpha[j] > c {
                            alpha[j] = c;
                            alpha[i] = sum - c;
                        }
                    } else if alpha[i] < 0.0 {
                        alpha[i] = 0.0;
                        alpha[j] = sum;
                    }
                }
                let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
                for t in 0..n {
                    grad[t] += q(t, i) * di + q(t, j) * dj;
                }
            }

            // primal candidate implied by the dual variables
            let mut d_cand = vec![0.0; k];
            for t in 0..n {
                if alpha[t] != 0.0 {
                    let w = alpha[t] * y[t];
                    for (dv, xv) in d_cand.iter_mut().zip(self.row(t)) {
                        *dv += w * xv;
                    }
                }
            }
            let s_cand = self.margins(&d_cand);
            let b_cand = self.best_bias(&s_cand);

            // best point on the segment from the current iterate to the candidate
            let dd: Vec<f64> = d_cand.iter().zip(&d_cur).map(|(a, b)| a - b).collect();
            let ds: Vec<f64> = s_cand.iter().zip(&s_cur).map(|(a, b)| a - b).collect();
            let db = b_cand - b_cur;
            let (aa, ab, bb) = (dot(&d_cur, &d_cur), dot(&d_cur, &dd), dot(&dd, &dd));
            let along = |t: f64| {
                let hinge: f64 = (0..n)
                    .map(|i| (1.0 - y[i] * (s_cur[i] + t * ds[i] + b_cur + t * db)).max(0.0))
                    .sum();
                0.5 * (aa + 2.0 * t * ab + t * t * bb) + c * hinge
            };
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..LINE_SEARCH_STEPS {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if along(m1) <= along(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let mut best_t = 0.0;
            let mut best_p = p_cur;
            for t in [0.5 * (lo + hi), 1.0] {
                let p = along(t);
                if p < best_p {
                    best_t = t;
                    best_p = p;
                }
            }
            if best_t > 0.0 {
                for (dv, step) in d_cur.iter_mut().zip(&dd) {
                    *dv += best_t * step;
                }
                s_cur = self.margins(&d_cur);
                b_cur += best_t * db;
                let refit = self.best_bias(&s_cur);
                let p_ref = self.primal(&d_cur, &s_cur, refit, c);
                let p_here = self.primal(&d_cur, &s_cur, b_cur, c);
                if p_ref < p_here {
                    b_cur = refit;
                }
                let p_new = p_ref.min(p_here);
                // never accept an increase, including from rounding
                if p_new <= p_cur {
                    last_delta = p_cur - p_new;
                    p_cur = p_new;
                } else {
                    last_delta = 0.0;
                }
            } else {
                last_delta = 0.0;
            }

            let dual: f64 = alpha.iter().sum::<f64>() - 0.5 * dot(&d_cand, &d_cand);
            gap = p_cur - dual;
            objective_history.push(p_cur);
            dual_history.push(dual);

            if kkt_ok || gap <= opts.tolerance * p_cur.abs().max(1.0) {
                return Ok(SvmFit {
                    model: SvmModel {
                        weights: d_cur,
                        bias: b_cur,
                        box_constraint: c,
                        decision_offset: 0.0,
                    },
                    objective_history,
                    dual_history,
                    iterations: iteration,
                    duality_gap: gap,
                });
            }
        }
        Err(Error::Convergence {
            iterations: opts.max_iterations,
            duality_gap: gap,
            objective_delta: last_delta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Classifier;

    #[test]
    fn separable_single_feature() {
        let rows: Vec<Vec<u8>> = (0..20)
            .map(|i| vec![(i % 2) as u8, ((i / 3) % 2) as u8])
            .collect();
        let labels: Vec<u8> = rows.iter().map(|r| r[0]).collect();
        let d = Dataset::from_rows(&rows, &labels).unwrap();
        let m = SvmModel::fit(&d, 1.0).unwrap();
        assert_eq!(m.predict(d.features()), labels);
        assert_eq!(m.predict_one(&[1, 1]), 1);
        assert_eq!(m.predict_one(&[0, 0]), 0);
        assert_eq!(m.decision_offset, 0.0);
    }

    #[test]
    fn objective_never_increases() {
        // noisy, non-separable labels
        let rows: Vec<Vec<u8>> = (0..60u32)
            .map(|i| {
                (0..6)
                    .map(|b| (((i * 7 + b * 3) >> (b % 3)) & 1) as u8)
                    .collect()
            })
            .collect();
        let labels: Vec<u8> = (0..60).map(|i| ((i * 13 + 5) % 7 < 3) as u8).collect();
        let d = Dataset::from_rows(&rows, &labels).unwrap();
        let p = SvmProblem::from_dataset(&d).unwrap();
        for c in [0.01, 1.0, 100.0] {
            let fit = p.solve(c, &SvmOptions::default()).unwrap();
            assert!(
                fit.objective_history.windows(2).all(|w| w[1] <= w[0]),
                "c={c}"
            );
            assert!(fit.duality_gap >= -1e-9);
            let last_dual = *fit.dual_history.last().unwrap();
            assert!(last_dual <= *fit.objective_history.last().unwrap() + 1e-9);
        }
    }

    #[test]
    fn single_class_is_constant() {
        let d = Dataset::from_rows(&[vec![1, 0], vec![0, 1]], &[1, 1]).unwrap();
        let m = SvmModel::fit(&d, 1.0).unwrap();
        assert_eq!(m.predict(d.features()), vec![1, 1]);
    }

    #[test]
    fn iteration_cap_reports_gap() {
        let rows: Vec<Vec<u8>> = (0..40u32)
            .map(|i| (0..4).map(|b| ((i >> b) & 1) as u8).collect())
            .collect();
        let labels: Vec<u8> = (0..40).map(|i| ((i * 5 + 1) % 3 == 0) as u8).collect();
        let d = Dataset::from_rows(&rows, &labels).unwrap();
        let p = SvmProblem::from_dataset(&d).unwrap();
        let opts = SvmOptions {
            max_iterations: 1,
            tolerance: 0.0,
            kkt_tolerance: 0.0,
        };
        match p.solve(100.0, &opts) {
            Err(Error::Convergence {
                iterations,
                duality_gap,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert!(duality_gap.is_finite());
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
        assert!(p.solve(0.0, &SvmOptions::default()).is_err());
    }

    #[test]
    fn best_bias_is_exact() {
        let p = SvmProblem::new(&[0.0, 1.0, 2.0, 3.0], 1, &[0, 0, 1, 1]).unwrap();
        let scores = vec![0.0, 1.0, 2.0, 3.0];
        let b = p.best_bias(&scores);
        let h = |b: f64| p.hinge_sum(&scores, b);
        for probe in (-400..400).map(|i| i as f64 * 0.01) {
            assert!(h(b) <= h(probe) + 1e-12, "b={b} probe={probe}");
        }
    }
}
