//! Spectrum-occupancy analytics: energy-detection occupancy, primary-user
//! labelling, classifier comparison, firefly tuning and secondary-user
//! outage.

pub mod classify;
pub mod data;
pub mod error;
pub mod experiment;
pub mod firefly;
pub mod hmm;
pub mod labeling;
pub mod occupancy;
pub mod outage;
pub mod persist;

pub use error::{Error, Result};
