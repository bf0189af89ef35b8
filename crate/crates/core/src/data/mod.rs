//! Bands, power matrices, measurement ingestion and synthetic data.
//!
//! A [`PowerMatrix`] holds one row per one-minute slot and one column per
//! frequency bin, with received power in dBm. Matrices are immutable once
//! built and can be shared read-only across workers.

mod io;
mod stats;
mod synth;

pub use io::{load_csv, read_csv, write_csv, write_csv_to};
pub use stats::{empirical_cdf, CdfPoint};
pub use synth::{
    generate_synthetic, ActivityPattern, GeneratorConfig, GroundTruth, Group, CHANNEL_BINS,
    GUARD_BINS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Duration of one measurement slot in minutes.
pub const SLOT_DURATION_MINUTES: f64 = 1.0;

/// A contiguous frequency band split into equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub name: String,
    /// Lower band edge in MHz.
    pub f_start: f64,
    /// Upper band edge in MHz.
    pub f_stop: f64,
    pub num_bins: usize,
    /// Width of each bin in MHz.
    pub bin_width: f64,
}

impl BandConfig {
    /// Builds a band whose bins evenly tile `[f_start, f_stop]`.
    pub fn new(
        name: impl Into<String>,
        f_start: f64,
        f_stop: f64,
        num_bins: usize,
    ) -> Result<Self> {
        if num_bins == 0 {
            return Err(Error::InvalidConfig(
                "band must have at least one bin".into(),
            ));
        }
        let band = BandConfig {
            name: name.into(),
            f_start,
            f_stop,
            num_bins,
            bin_width: (f_stop - f_start) / num_bins as f64,
        };
        band.validate()?;
        Ok(band)
    }

    /// 880-915 MHz uplink band with 55 bins.
    pub fn gsm_880_915() -> Self {
        Self::new("880-915 MHz", 880.0, 915.0, 55).expect("static band")
    }

    /// 925-960 MHz downlink band with 192 bins.
    pub fn gsm_925_960() -> Self {
        Self::new("925-960 MHz", 925.0, 960.0, 192).expect("static band")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_start.is_finite() && self.f_stop.is_finite()) || self.f_stop <= self.f_start {
            return Err(Error::InvalidConfig(format!(
                "band {:?}: f_stop ({}) must exceed f_start ({})",
                self.name, self.f_stop, self.f_start
            )));
        }
        if self.num_bins == 0 {
            return Err(Error::InvalidConfig(
                "band must have at least one bin".into(),
            ));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bin width {} must be positive",
                self.bin_width
            )));
        }
        let covered = self.num_bins as f64 * self.bin_width;
        if (covered - (self.f_stop - self.f_start)).abs() > self.bin_width {
            return Err(Error::InvalidConfig(format!(
                "band {:?}: {} bins of {} MHz do not tile {}..{} MHz",
                self.name, self.num_bins, self.bin_width, self.f_start, self.f_stop
            )));
        }
        Ok(())
    }

    /// Centre frequency of bin `j` in MHz.
    pub fn bin_center(&self, j: usize) -> f64 {
        self.f_start + (j as f64 + 0.5) * self.bin_width
    }
}

/// Received power in dBm, `n_slots` rows by `band.num_bins` columns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    band: BandConfig,
    n_slots: usize,
    values: Vec<f64>,
    slot_duration: f64,
}

impl PowerMatrix {
    pub fn new(band: BandConfig, values: Vec<f64>) -> Result<Self> {
        let k = band.num_bins;
        if k == 0 || !values.len().is_multiple_of(k) {
            return Err(Error::Shape(format!(
                "{} values cannot form rows of {} bins",
                values.len(),
                k
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "non-finite power at slot {}, bin {}",
                pos / k,
                pos % k
            )));
        }
        Ok(PowerMatrix {
            n_slots: values.len() / k,
            band,
            values,
            slot_duration: SLOT_DURATION_MINUTES,
        })
    }

    pub fn from_rows(band: BandConfig, rows: &[Vec<f64>]) -> Result<Self> {
        let k = band.num_bins;
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(Error::Shape(format!(
                "row {} has {} entries, band has {} bins",
                i,
                row.len(),
                k
            )));
        }
        Self::new(band, rows.concat())
    }

    pub fn band(&self) -> &BandConfig {
        &self.band
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_bins(&self) -> usize {
        self.band.num_bins
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    pub fn is_empty(&self) -> bool {
        self.n_slots == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.band.num_bins;
        &self.values[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.band.num_bins)
    }

    pub fn get(&self, slot: usize, bin: usize) -> f64 {
        self.values[slot * self.band.num_bins + bin]
    }

    /// Copy of slots `start..end`.
    pub fn slice_slots(&self, start: usize, end: usize) -> Result<PowerMatrix> {
        if start >= end || end > self.n_slots {
            return Err(Error::Shape(format!(
                "slot range {}..{} outside matrix of {} slots",
                start, end, self.n_slots
            )));
        }
        let k = self.band.num_bins;
        Self::new(self.band.clone(), self.values[start * k..end * k].to_vec())
    }

    /// Smallest and largest power in the matrix.
    pub fn power_range(&self) -> Option<(f64, f64)> {
        if self.values.is_empty() {
            return None;
        }
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Some((lo, hi))
    }
}
