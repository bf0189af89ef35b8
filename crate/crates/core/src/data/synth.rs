//! Synthetic spectrum generator with known ground truth.
//!
//! Every cell is `y = s + w`: `s` is the noise floor for idle cells or a PU
//! level drawn uniformly from `pu_power_range` for active cells, and `w` is
//! zero-mean Gaussian noise with variance `noise_variance`. Everything is in
//! dBm. PU activity is organised in channels of contiguous bins:
//!
//! * periodic bands use a regular channel grid with guard bins and switch each
//!   channel on for `duty_cycle` of every `period_slots`-slot cycle, with a
//!   per-channel phase offset;
//! * aperiodic bands use channels of irregular width, each following a
//!   two-state Markov on/off process whose stationary on-probability is
//!   `occupancy_rate`.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{BandConfig, PowerMatrix};
use crate::error::{Error, Result};

/// Bins per channel on the regular (periodic) grid.
pub const CHANNEL_BINS: usize = 8;
/// Trailing guard bins inside each periodic channel that never carry PU signal.
pub const GUARD_BINS: usize = 2;
/// Mean on-period of an aperiodic channel, in slots.
pub const MEAN_ON_SLOTS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityPattern {
    Periodic {
        period_slots: usize,
        duty_cycle: f64,
    },
    Aperiodic {
        occupancy_rate: f64,
    },
}

/// Band family by power spread: `A` is wide (-110..-30 dBm), `B` narrow (-110..-100 dBm).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub noise_floor_mean: f64,
    /// Noise variance in dB².
    pub noise_variance: f64,
    pub pu_power_range: [f64; 2],
    pub activity_pattern: ActivityPattern,
    pub group: Group,
    pub seed: u64,
}

impl GeneratorConfig {
    /// Wide-range preset: strong PU carriers well above a -107 dBm floor.
    pub fn group_a(activity_pattern: ActivityPattern, seed: u64) -> Self {
        GeneratorConfig {
            noise_floor_mean: -107.0,
            noise_variance: 1.0,
            pu_power_range: [-95.0, -30.0],
            activity_pattern,
            group: Group::A,
            seed,
        }
    }

    /// Narrow-range preset: weak PU carriers a few dB above a -107 dBm floor.
    pub fn group_b(activity_pattern: ActivityPattern, seed: u64) -> Self {
        GeneratorConfig {
            noise_floor_mean: -107.0,
            noise_variance: 0.36,
            pu_power_range: [-105.0, -100.0],
            activity_pattern,
            group: Group::B,
            seed,
        }
    }

    pub fn preset(group: Group, activity_pattern: ActivityPattern, seed: u64) -> Self {
        match group {
            Group::A => Self::group_a(activity_pattern, seed),
            Group::B => Self::group_b(activity_pattern, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.noise_floor_mean.is_finite() {
            return bad("noise_floor_mean must be finite".into());
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return bad(format!(
                "noise_variance {} must be finite and >= 0",
                self.noise_variance
            ));
        }
        let [lo, hi] = self.pu_power_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!(
                "pu_power_range [{lo}, {hi}] must satisfy lower < upper"
            ));
        }
        match self.activity_pattern {
            ActivityPattern::Periodic {
                period_slots,
                duty_cycle,
            } => {
                if period_slots == 0 {
                    return bad("period_slots must be >= 1".into());
                }
                if !(0.0..=1.0).contains(&duty_cycle) {
                    return bad(format!("duty_cycle {duty_cycle} outside [0, 1]"));
                }
            }
            ActivityPattern::Aperiodic { occupancy_rate } => {
                if !(0.0..=1.0).contains(&occupancy_rate) {
                    return bad(format!("occupancy_rate {occupancy_rate} outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Cells where a PU signal was injected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    n_slots: usize,
    n_bins: usize,
    pu_active: Vec<u8>,
}

impl GroundTruth {
    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn values(&self) -> &[u8] {
        &self.pu_active
    }

    pub fn get(&self, slot: usize, bin: usize) -> u8 {
        self.pu_active[slot * self.n_bins + bin]
    }

    pub fn column(&self, bin: usize) -> Vec<u8> {
        (0..self.n_slots).map(|i| self.get(i, bin)).collect()
    }
}

struct Channel {
    carrier: Range<usize>,
    phase: usize,
    on: bool,
}

fn periodic_layout(k: usize, period: usize, rng: &mut ChaCha8Rng) -> Vec<Channel> {
    (0..k)
        .step_by(CHANNEL_BINS)
        .map(|start| {
            let end = (start + CHANNEL_BINS).min(k);
            let guard = if end - start >= 2 * GUARD_BINS {
                GUARD_BINS
            } else {
                0
            };
            Channel {
                carrier: start..end - guard,
                phase: rng.random_range(0..period),
                on: false,
            }
        })
        .collect()
}

fn aperiodic_layout(k: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<Channel> {
    let mut channels = Vec::new();
    let mut start = 0;
    while start < k {
        let width = rng.random_range(CHANNEL_BINS / 2..=CHANNEL_BINS + CHANNEL_BINS / 2);
        let end = (start + width).min(k);
        channels.push(Channel {
            carrier: start..end,
            phase: 0,
            on: rng.random_bool(rate),
        });
        start = end;
    }
    channels
}

/// Generates `n` slots of synthetic measurements over `band`.
pub fn generate_synthetic(
    cfg: &GeneratorConfig,
    n: usize,
    band: &BandConfig,
) -> Result<(PowerMatrix, GroundTruth)> {
    cfg.validate()?;
    band.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("slot count must be >= 1".into()));
    }
    let k = band.num_bins;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_variance.sqrt())
        .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;
    let signal = Uniform::new(cfg.pu_power_range[0], cfg.pu_power_range[1])
        .map_err(|e| Error::InvalidConfig(format!("signal distribution: {e}")))?;

    let mut channels = match cfg.activity_pattern {
        ActivityPattern::Periodic { period_slots, .. } => {
            periodic_layout(k, period_slots, &mut rng)
        }
        ActivityPattern::Aperiodic { occupancy_rate } => {
            aperiodic_layout(k, occupancy_rate, &mut rng)
        }
    };

    // Markov switching probabilities for the aperiodic process.
    let (p_on_off, p_off_on) = match cfg.activity_pattern {
        ActivityPattern::Aperiodic { occupancy_rate } if occupancy_rate >= 1.0 => (0.0, 1.0),
        ActivityPattern::Aperiodic { occupancy_rate } => {
            let leave = 1.0 / MEAN_ON_SLOTS;
            (
                leave,
                (occupancy_rate / (1.0 - occupancy_rate) * leave).min(1.0),
            )
        }
        ActivityPattern::Periodic { .. } => (0.0, 0.0),
    };

    let mut values = Vec::with_capacity(n * k);
    let mut truth = vec![0u8; n * k];
    let mut active = vec![false; k];
    for i in 0..n {
        active.iter_mut().for_each(|a| *a = false);
        for ch in channels.iter_mut() {
            let on = match cfg.activity_pattern {
                ActivityPattern::Periodic {
                    period_slots,
                    duty_cycle,
                } => {
                    let on_slots = (duty_cycle * period_slots as f64).round() as usize;
                    (i + ch.phase) % period_slots < on_slots
                }
                ActivityPattern::Aperiodic { .. } => {
                    if i > 0 {
                        let flip = if ch.on { p_on_off } else { p_off_on };
                        if rng.random_bool(flip) {
                            ch.on = !ch.on;
                        }
                    }
                    ch.on
                }
            };
            if on {
                active[ch.carrier.clone()]
                    .iter_mut()
                    .for_each(|a| *a = true);
            }
        }
        for (j, &is_active) in active.iter().enumerate() {
            let w = noise.sample(&mut rng);
            if is_active {
                truth[i * k + j] = 1;
                values.push(signal.sample(&mut rng) + w);
            } else {
                values.push(cfg.noise_floor_mean + w);
            }
        }
    }

    let matrix = PowerMatrix::new(band.clone(), values)?;
    Ok((
        matrix,
        GroundTruth {
            n_slots: n,
            n_bins: k,
            pu_active: truth,
        },
    ))
}
