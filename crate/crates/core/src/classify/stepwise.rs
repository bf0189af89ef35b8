//! Forward stepwise least-squares regression on binary features, thresholded
//! into a class label.

use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_PREDICTORS: usize = 15;
/// Selection stops once a step improves SSE by less than this fraction.
pub const DEFAULT_SSE_TOLERANCE: f64 = 1e-4;
pub const CUTOFF: f64 = 0.5;

/// A candidate whose residual norm falls below this fraction of its own norm
/// is linearly dependent on the selected set.
const COLLINEAR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub intercept: f64,
    /// One coefficient per feature; zero for features never selected.
    pub coefficients: Vec<f64>,
    /// Features in the order they entered the model.
    pub selected_features: Vec<usize>,
    /// SSE of the intercept-only model followed by the SSE after each step.
    pub sse_history: Vec<f64>,
    pub max_predictors: usize,
}

impl LrModel {
    pub fn fit(train: &Dataset, max_predictors: usize) -> Result<LrModel> {
        Self::fit_with(train, max_predictors, DEFAULT_SSE_TOLERANCE)
    }

    pub fn fit_with(train: &Dataset, max_predictors: usize, tolerance: f64) -> Result<LrModel> {
        if max_predictors == 0 {
            return Err(Error::InvalidConfig(
                "max_predictors must be at least 1".into(),
            ));
        }
        if train.is_empty() {
            return Err(Error::EmptyInput("regression training set is empty".into()));
        }
        let n = train.len();
        let k = train.n_features();
        let y: Vec<f64> = train.labels().iter().map(|&l| l as f64).collect();
        let mean = y.iter().sum::<f64>() / n as f64;
        let mut resid: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let mut sse = dot(&resid, &resid);
        let mut sse_history = vec![sse];

        let norm0 = 1.0 / (n as f64).sqrt();
        let ones = vec![norm0; n];
        // every candidate column kept orthogonal to the selected basis
        let mut cand: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let col: Vec<f64> = (0..n).map(|i| train.row(i)[j] as f64).collect();
                orthogonalize(col, &ones)
            })
            .collect();
        let raw_norms: Vec<f64> = (0..k)
            .map(|j| (0..n).map(|i| train.row(i)[j] as f64).sum::<f64>().max(1.0))
            .collect();
        let mut active = vec![true; k];
        let mut selected = Vec::new();

        while selected.len() < max_predictors && sse > 0.0 {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..k {
                if !active[j] {
                    continue;
                }
                let nn = dot(&cand[j], &cand[j]);
                if nn <= COLLINEAR * raw_norms[j] {
                    log::debug!("feature {j} is collinear with the selected set; dropped");
                    active[j] = false;
                    continue;
                }
                let reduction = dot(&resid, &cand[j]).powi(2) / nn;
                if best.is_none_or(|(_, r)| reduction > r) {
                    best = Some((j, reduction));
                }
            }
            let Some((j, reduction)) = best else { break };
            if reduction < tolerance * sse {
                break;
            }
            active[j] = false;
            selected.push(j);
            let nn = dot(&cand[j], &cand[j]).sqrt();
            let q: Vec<f64> = cand[j].iter().map(|v| v / nn).collect();
            let proj = dot(&resid, &q);
            for (r, qv) in resid.iter_mut().zip(&q) {
                *r -= proj * qv;
            }
            sse = dot(&resid, &resid);
            sse_history.push(sse.min(*sse_history.last().unwrap()));
            for (c, &a) in cand.iter_mut().zip(&active) {
                if a {
                    let col = std::mem::take(c);
                    *c = orthogonalize(col, &q);
                }
            }
        }
        if selected.is_empty() && sse > 0.0 {
            log::warn!("no informative feature; regression is intercept-only");
        }

        let (intercept, coefs) = least_squares(train, &selected, &y);
        let mut coefficients = vec![0.0; k];
        for (&j, c) in selected.iter().zip(coefs) {
            coefficients[j] = c;
        }
        Ok(LrModel {
            intercept,
            coefficients,
            selected_features: selected,
            sse_history,
            max_predictors,
        })
    }

    pub fn regress(&self, features: &[u8]) -> f64 {
        self.intercept
            + self
                .selected_features
                .iter()
                .map(|&j| self.coefficients[j] * features[j] as f64)
                .sum::<f64>()
    }

    pub fn predict(&self, rows: &[u8]) -> Vec<u8> {
        rows.chunks_exact(self.coefficients.len())
            .map(|r| self.predict_one(r))
            .collect()
    }
}

impl Classifier for LrModel {
    fn predict_one(&self, features: &[u8]) -> u8 {
        u8::from(self.regress(features) >= CUTOFF)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the component of `v` along the unit vector `q`.
fn orthogonalize(mut v: Vec<f64>, q: &[f64]) -> Vec<f64> {
    let p = dot(&v, q);
    for (x, qv) in v.iter_mut().zip(q) {
        *x -= p * qv;
    }
    v
}

/// Least-squares fit of `y` on an intercept and the `selected` columns via
/// modified Gram-Schmidt QR.
fn least_squares(train: &Dataset, selected: &[usize], y: &[f64]) -> (f64, Vec<f64>) {
    let n = train.len();
    let m = selected.len() + 1;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    cols.push(vec![1.0; n]);
    for &j in selected {
        cols.push((0..n).map(|i| train.row(i)[j] as f64).collect());
    }
    let mut r = vec![vec![0.0; m]; m];
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (c, mut v) in cols.into_iter().enumerate() {
        for (l, ql) in q.iter().enumerate() {
            let p = dot(ql, &v);
            r[l][c] = p;
            for (x, qv) in v.iter_mut().zip(ql) {
                *x -= p * qv;
            }
        }
        let nn = dot(&v, &v).sqrt();
        r[c][c] = nn;
        q.push(v.iter().map(|x| x / nn).collect());
    }
    let qty: Vec<f64> = q.iter().map(|ql| dot(ql, y)).collect();
    let mut beta = vec![0.0; m];
    for c in (0..m).rev() {
        let s: f64 = ((c + 1)..m).map(|l| r[c][l] * beta[l]).sum();
        beta[c] = (qty[c] - s) / r[c][c];
    }
    let intercept = beta[0];
    (intercept, beta[1..].to_vec())
}
