//! Energy-detection thresholding and occupancy statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::PowerMatrix;
use crate::error::{Error, Result};

/// Binary spectrum status per slot and bin. A cell is 1 when its power is
/// strictly above the threshold; equality counts as idle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusMatrix {
    n_slots: usize,
    n_bins: usize,
    values: Vec<u8>,
    threshold_used: f64,
}

impl StatusMatrix {
    pub fn from_rows(rows: &[Vec<u8>], threshold_used: f64) -> Result<Self> {
        let n_bins = rows.first().map(Vec::len).unwrap_or(0);
        if n_bins == 0 {
            return Err(Error::EmptyInput(
                "status matrix needs at least one bin".into(),
            ));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n_bins) {
            return Err(Error::Shape(format!(
                "status row {i} has {} entries, expected {n_bins}",
                rows[i].len()
            )));
        }
        if rows.iter().flatten().any(|&v| v > 1) {
            return Err(Error::Shape("status entries must be 0 or 1".into()));
        }
        Ok(StatusMatrix {
            n_slots: rows.len(),
            n_bins,
            values: rows.concat(),
            threshold_used,
        })
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn threshold_used(&self) -> f64 {
        self.threshold_used
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.values[i * self.n_bins..(i + 1) * self.n_bins]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.values.chunks_exact(self.n_bins)
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }

    /// Copy of slots `start..end`.
    pub fn slice_slots(&self, start: usize, end: usize) -> StatusMatrix {
        StatusMatrix {
            n_slots: end - start,
            n_bins: self.n_bins,
            values: self.values[start * self.n_bins..end * self.n_bins].to_vec(),
            threshold_used: self.threshold_used,
        }
    }
}

/// Per-slot occupancy: fraction of a slot's bins that are occupied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyVector(pub Vec<f64>);

impl OccupancyVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        if self.0.is_empty() {
            return None;
        }
        Some(
            self.0
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
        )
    }

    pub fn slice(&self, start: usize, end: usize) -> OccupancyVector {
        OccupancyVector(self.0[start..end].to_vec())
    }
}

/// Per-bin occupancy: fraction of slots in which a bin is occupied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinOccupancyVector(pub Vec<f64>);

impl BinOccupancyVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub fn threshold_status(matrix: &PowerMatrix, gamma: f64) -> StatusMatrix {
    StatusMatrix {
        n_slots: matrix.n_slots(),
        n_bins: matrix.n_bins(),
        values: matrix
            .values()
            .iter()
            .map(|&y| u8::from(y > gamma))
            .collect(),
        threshold_used: gamma,
    }
}

pub fn slot_occupancy(status: &StatusMatrix) -> OccupancyVector {
    let k = status.n_bins() as f64;
    OccupancyVector(
        status
            .rows()
            .map(|row| row.iter().map(|&v| v as usize).sum::<usize>() as f64 / k)
            .collect(),
    )
}

pub fn bin_occupancy(status: &StatusMatrix) -> BinOccupancyVector {
    let mut counts = vec![0usize; status.n_bins()];
    for row in status.rows() {
        for (c, &v) in counts.iter_mut().zip(row) {
            *c += v as usize;
        }
    }
    let n = status.n_slots() as f64;
    BinOccupancyVector(counts.into_iter().map(|c| c as f64 / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdOccupancy {
    pub gamma_dbm: f64,
    pub mean_occupancy: f64,
}

/// Mean slot occupancy for each threshold in `gammas`.
pub fn occupancy_vs_threshold(
    matrix: &PowerMatrix,
    gammas: &[f64],
) -> Result<Vec<ThresholdOccupancy>> {
    if gammas.is_empty() {
        return Err(Error::InvalidConfig("threshold list is empty".into()));
    }
    if matrix.is_empty() {
        return Err(Error::EmptyInput("occupancy of an empty matrix".into()));
    }
    Ok(gammas
        .iter()
        .map(|&gamma| ThresholdOccupancy {
            gamma_dbm: gamma,
            mean_occupancy: slot_occupancy(&threshold_status(matrix, gamma)).mean(),
        })
        .collect())
}

/// `count` thresholds from just below the matrix minimum up to its maximum,
/// so the first yields full occupancy and the last yields none.
pub fn spanning_thresholds(matrix: &PowerMatrix, count: usize) -> Result<Vec<f64>> {
    let (lo, hi) = matrix
        .power_range()
        .ok_or_else(|| Error::EmptyInput("thresholds for an empty matrix".into()))?;
    if count < 2 {
        return Err(Error::InvalidConfig("need at least two thresholds".into()));
    }
    let step = (hi - lo) / (count - 1) as f64;
    let mut gammas: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
    gammas[0] = lo.next_down();
    gammas[count - 1] = hi;
    Ok(gammas)
}

pub fn write_occupancy_vs_threshold<W: Write>(
    rows: &[ThresholdOccupancy],
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "gamma_dbm,mean_occupancy")?;
    for r in rows {
        writeln!(w, "{:?},{:?}", r.gamma_dbm, r.mean_occupancy)?;
    }
    Ok(())
}
