//! Firefly-algorithm search over a scalar, and its use for tuning the SVM box
//! constraint on held-out accuracy.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::svm::{SvmOptions, SvmProblem};
use crate::classify::{evaluate, Classifier, Dataset, SvmModel, Timings};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub alpha: f64,
    pub beta0: f64,
    pub psi: f64,
    pub bounds: [f64; 2],
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            swarm_size: 10,
            iterations: 20,
            alpha: 1.0,
            beta0: 2.0,
            psi: 1.3,
            bounds: [0.01, 100.0],
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.bounds;
        if self.swarm_size < 2 {
            return Err(Error::InvalidConfig("swarm_size must be at least 2".into()));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidConfig(format!(
                "swarm bounds [{lo}, {hi}] must satisfy low < high"
            )));
        }
        if [self.alpha, self.beta0, self.psi]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidConfig(
                "alpha, beta0 and psi must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.bounds[0], self.bounds[1])
    }
}

/// Index of the brightest firefly, ties to the lowest index.
fn brightest(brightness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &b) in brightness.iter().enumerate() {
        if b > brightness[best] {
            best = i;
        }
    }
    best
}

/// One synchronous swarm update. Every firefly is attracted by each brighter
/// one with strength `beta0 * exp(-psi * d^2)`. All but the current best then
/// take a random step `alpha * (u - 0.5)`. Results are clamped to the bounds.
pub fn ffa_step<R: Rng>(
    positions: &[f64],
    brightness: &[f64],
    cfg: &SwarmConfig,
    rng: &mut R,
) -> Vec<f64> {
    assert_eq!(
        positions.len(),
        brightness.len(),
        "positions and brightness differ in length"
    );
    let best = brightest(brightness);
    (0..positions.len())
        .map(|i| {
            let xi = positions[i];
            let pull: f64 = (0..positions.len())
                .filter(|&j| brightness[j] > brightness[i])
                .map(|j| {
                    let d = positions[j] - xi;
                    cfg.beta0 * (-cfg.psi * d * d).exp() * d
                })
                .sum();
            let noise = if i == best {
                0.0
            } else {
                cfg.alpha * (rng.random::<f64>() - 0.5)
            };
            cfg.clamp(xi + pull + noise)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 is the initial swarm.
    pub iteration: usize,
    pub best_position: f64,
    pub best_brightness: f64,
    pub positions: Vec<f64>,
    pub brightness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfaResult {
    pub best_position: f64,
    pub best_brightness: f64,
    pub history: Vec<IterationRecord>,
}

/// Maximises `objective` over `cfg.bounds`. Evaluations within an iteration
/// run in parallel; the result depends only on `cfg` and `objective`.
pub fn ffa_optimize<F>(objective: F, cfg: &SwarmConfig) -> Result<FfaResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let [lo, hi] = cfg.bounds;
    let eval = |iteration: usize, pos: &[f64]| -> Result<Vec<f64>> {
        pos.par_iter()
            .map(|&x| {
                objective(x).map_err(|e| Error::Objective {
                    iteration,
                    position: x,
                    message: e.to_string(),
                })
            })
            .collect()
    };
    let mut positions: Vec<f64> = (0..cfg.swarm_size)
        .map(|_| rng.random_range(lo..=hi))
        .collect();
    let mut brightness = eval(0, &positions)?;
    let b0 = brightest(&brightness);
    let mut best = (positions[b0], brightness[b0]);
    let mut history = vec![IterationRecord {
        iteration: 0,
        best_position: best.0,
        best_brightness: best.1,
        positions: positions.clone(),
        brightness: brightness.clone(),
    }];
    for iteration in 1..=cfg.iterations {
        positions = ffa_step(&positions, &brightness, cfg, &mut rng);
        brightness = eval(iteration, &positions)?;
        let b = brightest(&brightness);
        if brightness[b] > best.1 {
            best = (positions[b], brightness[b]);
        }
        history.push(IterationRecord {
            iteration,
            best_position: best.0,
            best_brightness: best.1,
            positions: positions.clone(),
            brightness: brightness.clone(),
        });
    }
    Ok(FfaResult {
        best_position: best.0,
        best_brightness: best.1,
        history,
    })
}

/// Best-so-far box constraint and validation accuracy after each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub iteration: usize,
    pub best_box_constraint: f64,
    pub best_ca: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmFfaFit {
    /// Refit on training and validation rows at the chosen box constraint.
    pub model: SvmModel,
    pub best_box_constraint: f64,
    pub best_validation_ca: f64,
    pub history: Vec<TuningRecord>,
}

/// Tunes the box constraint by firefly search in `log10` coordinates over
/// `cfg.bounds`, scoring each candidate by validation accuracy. A candidate
/// whose solver fails to converge scores 0.
pub fn svm_ffa_fit(train: &Dataset, validation: &Dataset, cfg: &SwarmConfig) -> Result<SvmFfaFit> {
    cfg.validate()?;
    let [lo, hi] = cfg.bounds;
    if lo <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "box constraint bounds must be positive, got low {lo}"
        )));
    }
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation set is empty".into()));
    }
    if !train.has_both_classes() || !validation.has_both_classes() {
        log::warn!("svm tuning data holds a single class in training or validation");
    }
    let problem = SvmProblem::from_dataset(train)?;
    let opts = SvmOptions::default();
    let log_cfg = SwarmConfig {
        bounds: [lo.log10(), hi.log10()],
        ..*cfg
    };
    let objective = |x: f64| -> Result<f64> {
        let c = 10f64.powf(x);
        match problem.solve(c, &opts) {
            Ok(fit) => {
                let pred = fit.model.predict_rows(validation.rows());
                Ok(evaluate(&pred, validation.labels(), Timings::default())?.ca)
            }
            Err(e @ Error::Convergence { .. }) => {
                log::warn!("box constraint {c}: {e}; scored as 0");
                Ok(0.0)
            }
            Err(e) => Err(e),
        }
    };
    let result = ffa_optimize(objective, &log_cfg)?;
    let best_c = 10f64.powf(result.best_position);
    let full = train.concat(validation)?;
    let model = SvmProblem::from_dataset(&full)?.solve(best_c, &opts)?.model;
    Ok(SvmFfaFit {
        model,
        best_box_constraint: best_c,
        best_validation_ca: result.best_brightness,
        history: result
            .history
            .iter()
            .map(|r| TuningRecord {
                iteration: r.iteration,
                best_box_constraint: 10f64.powf(r.best_position),
                best_ca: r.best_brightness,
            })
            .collect(),
    })
}

/// `iteration,best_box_constraint,best_ca`
pub fn write_tuning_history<W: Write>(history: &[TuningRecord], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "iteration,best_box_constraint,best_ca")?;
    for r in history {
        writeln!(
            w,
            "{},{:?},{:?}",
            r.iteration, r.best_box_constraint, r.best_ca
        )?;
    }
    Ok(())
}
