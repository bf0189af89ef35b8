//! Primary-user labels from occupancy, and calibration of the labeling criteria.
//!
//! A slot is labeled PU-present (1) or PU-absent (0) by four mutually
//! exclusive conditions on its occupancy `oc` and its longest run of free bins
//! `con`:
//!
//! | condition | rule                                  | label |
//! |-----------|---------------------------------------|-------|
//! | 1         | `oc > u_oc`                           | 1     |
//! | 2         | `l_oc <= oc <= u_oc` and `con < B`    | 1     |
//! | 3         | `l_oc <= oc <= u_oc` and `con >= B`   | 0     |
//! | 4         | `oc < l_oc`                           | 0     |

use serde::{Deserialize, Serialize};

use crate::data::PowerMatrix;
use crate::error::{Error, Result};
use crate::occupancy::{slot_occupancy, threshold_status, OccupancyVector, StatusMatrix};

/// Default fraction of ambiguous slots that must be labeled PU-present when choosing `B`.
pub const DEFAULT_TARGET_PROTECTION: f64 = 0.9;

/// Empirical guardrails: `u_oc` should not fall below this value...
pub const U_OC_GUARDRAIL: f64 = 0.75;
/// ...and `l_oc` should not exceed this one.
pub const L_OC_GUARDRAIL: f64 = 0.40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingCriteria {
    pub gamma: f64,
    pub u_oc: f64,
    pub l_oc: f64,
    pub b_min_run: usize,
}

impl LabelingCriteria {
    pub fn validate(&self, n_bins: usize) -> Result<()> {
        if !self.gamma.is_finite() {
            return Err(Error::InvalidConfig("gamma must be finite".into()));
        }
        if !(0.0 <= self.l_oc && self.l_oc <= self.u_oc && self.u_oc <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= l_oc ({}) <= u_oc ({}) <= 1",
                self.l_oc, self.u_oc
            )));
        }
        if self.b_min_run == 0 || self.b_min_run > n_bins {
            return Err(Error::InvalidConfig(format!(
                "B = {} outside [1, {}]",
                self.b_min_run, n_bins
            )));
        }
        Ok(())
    }

    /// Human-readable notes for values outside the empirical guardrails.
    pub fn guardrail_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.u_oc < U_OC_GUARDRAIL {
            out.push(format!("u_oc = {} is below {}", self.u_oc, U_OC_GUARDRAIL));
        }
        if self.l_oc > L_OC_GUARDRAIL {
            out.push(format!("l_oc = {} is above {}", self.l_oc, L_OC_GUARDRAIL));
        }
        out
    }
}

/// Which labeling condition decided a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    AboveUpper,
    AmbiguousShortRun,
    AmbiguousLongRun,
    BelowLower,
}

impl Condition {
    pub fn label(self) -> u8 {
        match self {
            Condition::AboveUpper | Condition::AmbiguousShortRun => 1,
            Condition::AmbiguousLongRun | Condition::BelowLower => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuLabelVector(pub Vec<u8>);

impl PuLabelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1).count()
    }

    pub fn is_single_class(&self) -> bool {
        let ones = self.ones();
        ones == 0 || ones == self.0.len()
    }
}

/// Longest run of free (zero) bins in a status row.
pub fn consecutive_free(row: &[u8]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &v in row {
        if v == 0 {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

pub fn classify_slot(oc: f64, con: usize, criteria: &LabelingCriteria) -> Condition {
    if oc > criteria.u_oc {
        Condition::AboveUpper
    } else if oc < criteria.l_oc {
        Condition::BelowLower
    } else if con < criteria.b_min_run {
        Condition::AmbiguousShortRun
    } else {
        Condition::AmbiguousLongRun
    }
}

pub fn label_conditions(
    status: &StatusMatrix,
    occ: &OccupancyVector,
    criteria: &LabelingCriteria,
) -> Result<Vec<Condition>> {
    if status.n_slots() != occ.len() {
        return Err(Error::LengthMismatch {
            expected: status.n_slots(),
            actual: occ.len(),
        });
    }
    Ok(status
        .rows()
        .zip(occ.values())
        .map(|(row, &oc)| classify_slot(oc, consecutive_free(row), criteria))
        .collect())
}

pub fn label_pu(
    status: &StatusMatrix,
    occ: &OccupancyVector,
    criteria: &LabelingCriteria,
) -> Result<PuLabelVector> {
    Ok(PuLabelVector(
        label_conditions(status, occ, criteria)?
            .into_iter()
            .map(Condition::label)
            .collect(),
    ))
}

/// Labels slots by a single occupancy split: 1 when `oc >= split`.
pub fn split_labels(occ: &OccupancyVector, split: f64) -> PuLabelVector {
    PuLabelVector(
        occ.values()
            .iter()
            .map(|&oc| u8::from(oc >= split))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BSelection {
    pub b: usize,
    /// False when even `B = k` misses the protection target.
    pub target_met: bool,
}

/// Smallest `B` for which at least `target_protection` of the slots with
/// `l_oc <= oc <= u_oc` are labeled PU-present.
pub fn select_b(
    status: &StatusMatrix,
    occ: &OccupancyVector,
    l_oc: f64,
    u_oc: f64,
    target_protection: f64,
) -> Result<BSelection> {
    if status.n_slots() != occ.len() {
        return Err(Error::LengthMismatch {
            expected: status.n_slots(),
            actual: occ.len(),
        });
    }
    let k = status.n_bins();
    let mut runs: Vec<usize> = status
        .rows()
        .zip(occ.values())
        .filter(|(_, &oc)| l_oc <= oc && oc <= u_oc)
        .map(|(row, _)| consecutive_free(row))
        .collect();
    if runs.is_empty() {
        return Err(Error::NoSlotsInRange { l_oc, u_oc });
    }
    runs.sort_unstable();
    let total = runs.len() as f64;
    for b in 1..=k {
        // slots with con < b are labeled present
        let present = runs.partition_point(|&r| r < b);
        if present as f64 / total >= target_protection {
            return Ok(BSelection {
                b,
                target_met: true,
            });
        }
    }
    log::warn!("no B in [1, {k}] reaches protection target {target_protection}; using B = {k}");
    Ok(BSelection {
        b: k,
        target_met: false,
    })
}

/// The standard occupancy split grid 0.1, 0.2, ..., 0.9.
pub fn default_ms_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Calibration result for one candidate threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRecord {
    pub gamma: f64,
    /// Lowest training occupancy.
    pub l_s: f64,
    /// Highest training occupancy.
    pub u_s: f64,
    /// Widest run of grid splits strictly inside `(l_s, u_s)`, if any.
    pub split_range: Option<[f64; 2]>,
    /// Slots strictly inside `split_range`.
    pub in_range_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub records: Vec<GammaRecord>,
    pub chosen_gamma: f64,
    pub chosen_range: [f64; 2],
    pub ms_grid: Vec<f64>,
    pub b: BSelection,
    pub target_protection: f64,
}

/// Longest contiguous run of grid values lying strictly inside `(lo, hi)`.
fn split_range(ms_grid: &[f64], lo: f64, hi: f64) -> Option<[f64; 2]> {
    let mut best: Option<(usize, usize)> = None;
    let mut start: Option<usize> = None;
    for (i, &m) in ms_grid.iter().enumerate() {
        if lo < m && m < hi {
            let s = *start.get_or_insert(i);
            if best.is_none_or(|(bs, be)| i - s > be - bs) {
                best = Some((s, i));
            }
        } else {
            start = None;
        }
    }
    best.map(|(s, e)| [ms_grid[s], ms_grid[e]])
}

pub fn calibrate(
    matrix: &PowerMatrix,
    gammas: &[f64],
    ms_grid: &[f64],
) -> Result<(LabelingCriteria, CalibrationReport)> {
    calibrate_with(matrix, gammas, ms_grid, DEFAULT_TARGET_PROTECTION)
}

/// Chooses the threshold and occupancy range from `matrix`, then `B`.
///
/// For each threshold the occupancy vector is computed and bracketed by its
/// extremes `[l_s, u_s]`; only grid splits strictly inside that bracket
/// separate the slots into two classes. The threshold whose split range holds
/// the most slots wins; ties keep the earlier threshold.
pub fn calibrate_with(
    matrix: &PowerMatrix,
    gammas: &[f64],
    ms_grid: &[f64],
    target_protection: f64,
) -> Result<(LabelingCriteria, CalibrationReport)> {
    if gammas.is_empty() || ms_grid.is_empty() {
        return Err(Error::InvalidConfig(
            "calibration needs thresholds and an occupancy split grid".into(),
        ));
    }
    if matrix.is_empty() {
        return Err(Error::EmptyInput("calibration on an empty matrix".into()));
    }
    if !(0.0..=1.0).contains(&target_protection) {
        return Err(Error::InvalidConfig(format!(
            "target_protection {target_protection} outside [0, 1]"
        )));
    }
    let mut grid = ms_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let mut records = Vec::with_capacity(gammas.len());
    let mut best: Option<(usize, usize)> = None;
    for (idx, &gamma) in gammas.iter().enumerate() {
        let occ = slot_occupancy(&threshold_status(matrix, gamma));
        let (l_s, u_s) = occ.min_max().expect("non-empty");
        let range = split_range(&grid, l_s, u_s);
        let in_range_count = range.map_or(0, |[lo, hi]| {
            occ.values()
                .iter()
                .filter(|&&oc| lo < oc && oc < hi)
                .count()
        });
        if range.is_some() && best.is_none_or(|(_, count)| in_range_count > count) {
            best = Some((idx, in_range_count));
        }
        records.push(GammaRecord {
            gamma,
            l_s,
            u_s,
            split_range: range,
            in_range_count,
        });
    }

    let (idx, _) = best.ok_or_else(|| {
        Error::CalibrationFailure(
            "every threshold yields a single-class split at every grid point".into(),
        )
    })?;
    let gamma = gammas[idx];
    let [l_oc, u_oc] = records[idx].split_range.expect("chosen record has a range");

    let status = threshold_status(matrix, gamma);
    let occ = slot_occupancy(&status);
    let b = match select_b(&status, &occ, l_oc, u_oc, target_protection) {
        Ok(sel) => sel,
        Err(Error::NoSlotsInRange { .. }) => {
            log::info!("no training slot inside [{l_oc}, {u_oc}]; B defaults to 1");
            BSelection {
                b: 1,
                target_met: true,
            }
        }
        Err(e) => return Err(e),
    };

    let criteria = LabelingCriteria {
        gamma,
        u_oc,
        l_oc,
        b_min_run: b.b,
    };
    for w in criteria.guardrail_warnings() {
        log::warn!("calibrated criteria: {w}");
    }
    Ok((
        criteria,
        CalibrationReport {
            records,
            chosen_gamma: gamma,
            chosen_range: [l_oc, u_oc],
            ms_grid: grid,
            b,
            target_protection,
        },
    ))
}
