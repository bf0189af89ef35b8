//! Discrete hidden Markov model over quantised occupancy observations.
//!
//! Hidden state 0 is "PU absent" and state 1 is "PU present", so a decoded
//! state index is directly a PU label.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{evaluate, Metrics, Timings};
use crate::error::{Error, Result};
use crate::labeling::PuLabelVector;
use crate::occupancy::OccupancyVector;

pub const N_STATES: usize = 2;
/// Rows must sum to one within this tolerance.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;
/// Laplace pseudo-count used by [`estimate_hmm`].
pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    /// `transition[a][b] = P(q_{t+1} = b | q_t = a)`.
    pub transition: Vec<Vec<f64>>,
    /// `emission[a][m] = P(o_t = m | q_t = a)`.
    pub emission: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSequence(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSequence(pub Vec<usize>);

/// Most likely state path with its joint log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub states: StateSequence,
    pub log_probability: f64,
    /// Every path has probability zero; `states` is the tie-break path.
    pub zero_likelihood: bool,
}

fn check_stochastic(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "{name} has a negative or non-finite entry"
        )));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOLERANCE * v.len().max(1) as f64 {
        return Err(Error::InvalidConfig(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

impl HmmModel {
    pub fn new(
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let m = HmmModel {
            transition,
            emission,
            initial,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.transition.len() != N_STATES
            || self.emission.len() != N_STATES
            || self.initial.len() != N_STATES
            || self.transition.iter().any(|r| r.len() != N_STATES)
        {
            return Err(Error::Shape(format!("hmm must have {N_STATES} states")));
        }
        let m = self.emission[0].len();
        if m == 0 || self.emission.iter().any(|r| r.len() != m) {
            return Err(Error::Shape(
                "emission rows must share a non-zero symbol count".into(),
            ));
        }
        for (a, row) in self.transition.iter().enumerate() {
            check_stochastic(&format!("transition row {a}"), row)?;
        }
        for (a, row) in self.emission.iter().enumerate() {
            check_stochastic(&format!("emission row {a}"), row)?;
        }
        check_stochastic("initial distribution", &self.initial)
    }

    /// Baseline used when no labelled training is applied.
    pub fn default_untrained() -> Self {
        HmmModel {
            transition: vec![vec![0.7, 0.3], vec![0.3, 0.7]],
            emission: vec![vec![0.8, 0.2], vec![0.2, 0.8]],
            initial: vec![0.5, 0.5],
        }
    }

    /// Every row uniform over `n_symbols`.
    pub fn uniform(n_symbols: usize) -> Self {
        HmmModel {
            transition: vec![vec![0.5; N_STATES]; N_STATES],
            emission: vec![vec![1.0 / n_symbols as f64; n_symbols]; N_STATES],
            initial: vec![0.5; N_STATES],
        }
    }

    pub fn n_symbols(&self) -> usize {
        self.emission[0].len()
    }

    fn check_obs(&self, obs: &ObservationSequence) -> Result<()> {
        if obs.0.is_empty() {
            return Err(Error::EmptyInput("observation sequence is empty".into()));
        }
        let m = self.n_symbols();
        if let Some(&o) = obs.0.iter().find(|&&o| o >= m) {
            return Err(Error::Shape(format!(
                "symbol {o} outside alphabet of size {m}"
            )));
        }
        Ok(())
    }

    /// Draws a state path and its observations.
    pub fn sample<R: Rng>(&self, len: usize, rng: &mut R) -> (StateSequence, ObservationSequence) {
        fn draw<R: Rng>(p: &[f64], rng: &mut R) -> usize {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, &pi) in p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    return i;
                }
            }
            p.len() - 1
        }
        let mut states = Vec::with_capacity(len);
        let mut obs = Vec::with_capacity(len);
        let mut q = draw(&self.initial, rng);
        for t in 0..len {
            if t > 0 {
                q = draw(&self.transition[q], rng);
            }
            states.push(q);
            obs.push(draw(&self.emission[q], rng));
        }
        (StateSequence(states), ObservationSequence(obs))
    }
}

/// Symbol 0 where `OC < split`, else 1.
pub fn discretize_observations(occ: &OccupancyVector, split: f64) -> Result<ObservationSequence> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "observation split {split} outside (0, 1)"
        )));
    }
    Ok(ObservationSequence(
        occ.values()
            .iter()
            .map(|&o| usize::from(o >= split))
            .collect(),
    ))
}

/// `M` equal-width bins over `[0, 1]`; occupancy 1 falls in the last bin.
pub fn quantize_uniform(occ: &OccupancyVector, n_symbols: usize) -> Result<ObservationSequence> {
    if n_symbols < 2 {
        return Err(Error::InvalidConfig(
            "uniform quantisation needs at least 2 symbols".into(),
        ));
    }
    Ok(ObservationSequence(
        occ.values()
            .iter()
            .map(|&o| ((o * n_symbols as f64).floor().max(0.0) as usize).min(n_symbols - 1))
            .collect(),
    ))
}

/// `log P(O | model)` by the scaled forward recursion; `-inf` when impossible.
pub fn forward(model: &HmmModel, obs: &ObservationSequence) -> Result<f64> {
    model.check_obs(obs)?;
    let mut alpha: Vec<f64> = (0..N_STATES)
        .map(|s| model.initial[s] * model.emission[s][obs.0[0]])
        .collect();
    let mut log_lik = 0.0;
    for t in 0.. {
        let c: f64 = alpha.iter().sum();
        if c == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_lik += c.ln();
        alpha.iter_mut().for_each(|a| *a /= c);
        let Some(&o) = obs.0.get(t + 1) else { break };
        alpha = (0..N_STATES)
            .map(|s| {
                (0..N_STATES)
                    .map(|r| alpha[r] * model.transition[r][s])
                    .sum::<f64>()
                    * model.emission[s][o]
            })
            .collect();
    }
    Ok(log_lik)
}

/// Log-domain Viterbi decoding. Ties resolve to the lower state index, both
/// in the recursion and at the final step.
pub fn viterbi(model: &HmmModel, obs: &ObservationSequence) -> Result<ViterbiPath> {
    model.check_obs(obs)?;
    let t_len = obs.0.len();
    let ln = |p: f64| p.ln();
    let mut delta: Vec<f64> = (0..N_STATES)
        .map(|s| ln(model.initial[s]) + ln(model.emission[s][obs.0[0]]))
        .collect();
    let mut back = vec![[0usize; N_STATES]; t_len];
    for t in 1..t_len {
        let mut next = vec![f64::NEG_INFINITY; N_STATES];
        for s in 0..N_STATES {
            let mut best = 0;
            let mut best_v = delta[0] + ln(model.transition[0][s]);
            for r in 1..N_STATES {
                let v = delta[r] + ln(model.transition[r][s]);
                if v > best_v {
                    best = r;
                    best_v = v;
                }
            }
            back[t][s] = best;
            next[s] = best_v + ln(model.emission[s][obs.0[t]]);
        }
        delta = next;
    }
    let mut last = 0;
    for s in 1..N_STATES {
        if delta[s] > delta[last] {
            last = s;
        }
    }
    let log_probability = delta[last];
    let mut states = vec![0; t_len];
    states[t_len - 1] = last;
    for t in (1..t_len).rev() {
        states[t - 1] = back[t][states[t]];
    }
    Ok(ViterbiPath {
        states: StateSequence(states),
        log_probability,
        zero_likelihood: log_probability == f64::NEG_INFINITY,
    })
}

/// `log P(Q, O | model)` for a given state path.
pub fn path_log_probability(
    model: &HmmModel,
    states: &StateSequence,
    obs: &ObservationSequence,
) -> Result<f64> {
    model.check_obs(obs)?;
    if states.0.len() != obs.0.len() {
        return Err(Error::LengthMismatch {
            expected: obs.0.len(),
            actual: states.0.len(),
        });
    }
    let q = &states.0;
    let mut lp = model.initial[q[0]].ln() + model.emission[q[0]][obs.0[0]].ln();
    for t in 1..q.len() {
        lp += model.transition[q[t - 1]][q[t]].ln() + model.emission[q[t]][obs.0[t]].ln();
    }
    Ok(lp)
}

fn normalise(counts: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum::<f64>() + alpha * counts.len() as f64;
    if total == 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|c| (c + alpha) / total).collect()
}

/// Maximum-likelihood estimate from a labelled state path with Laplace
/// pseudo-count `alpha`. A state never visited gets uniform rows when
/// `alpha = 0`.
pub fn estimate_hmm_with(
    states: &StateSequence,
    obs: &ObservationSequence,
    n_symbols: usize,
    alpha: f64,
) -> Result<HmmModel> {
    let t_len = states.0.len();
    if t_len != obs.0.len() {
        return Err(Error::LengthMismatch {
            expected: t_len,
            actual: obs.0.len(),
        });
    }
    if t_len < 2 {
        return Err(Error::EmptyInput(
            "hmm estimation needs at least two steps".into(),
        ));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing {alpha} must be non-negative"
        )));
    }
    if n_symbols == 0 || obs.0.iter().any(|&o| o >= n_symbols) {
        return Err(Error::Shape(format!(
            "observations outside alphabet of size {n_symbols}"
        )));
    }
    if states.0.iter().any(|&s| s >= N_STATES) {
        return Err(Error::Shape(format!("state index outside 0..{N_STATES}")));
    }
    let mut trans = vec![vec![0.0; N_STATES]; N_STATES];
    let mut emit = vec![vec![0.0; n_symbols]; N_STATES];
    for w in states.0.windows(2) {
        trans[w[0]][w[1]] += 1.0;
    }
    for (&s, &o) in states.0.iter().zip(&obs.0) {
        emit[s][o] += 1.0;
    }
    let mut init = vec![0.0; N_STATES];
    init[states.0[0]] = 1.0;
    Ok(HmmModel {
        transition: trans.iter().map(|r| normalise(r, alpha)).collect(),
        emission: emit.iter().map(|r| normalise(r, alpha)).collect(),
        initial: normalise(&init, alpha),
    })
}

pub fn estimate_hmm(
    states: &StateSequence,
    obs: &ObservationSequence,
    n_symbols: usize,
) -> Result<HmmModel> {
    estimate_hmm_with(states, obs, n_symbols, DEFAULT_SMOOTHING)
}

impl From<&PuLabelVector> for StateSequence {
    fn from(labels: &PuLabelVector) -> Self {
        StateSequence(labels.values().iter().map(|&l| l as usize).collect())
    }
}

/// Viterbi-decoded PU labels.
pub fn hmm_predict(model: &HmmModel, obs: &ObservationSequence) -> Result<PuLabelVector> {
    Ok(PuLabelVector(
        viterbi(model, obs)?
            .states
            .0
            .iter()
            .map(|&s| s as u8)
            .collect(),
    ))
}

/// Decodes `obs` and scores the state path against `reference`.
pub fn hmm_classify(
    model: &HmmModel,
    obs: &ObservationSequence,
    reference: &PuLabelVector,
) -> Result<Metrics> {
    if obs.0.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: obs.0.len(),
        });
    }
    let predicted = hmm_predict(model, obs)?;
    evaluate(predicted.values(), reference.values(), Timings::default())
}
