//! Supervised classifiers mapping a slot's status vector to its PU label.
//!
//! Training data is a [`Dataset`]. Held-out data is a [`TestSet`], whose
//! labels are wrapped in [`ReferenceLabels`] and can only be read for
//! scoring, so no fit routine can see them.

mod metrics;
pub mod nbc;
pub mod stepwise;
pub mod svm;
pub mod tree;

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use metrics::{evaluate, write_metrics_csv, Metrics, MetricsRow, Timings};
pub use nbc::{NbcKernel, NbcModel};
pub use stepwise::LrModel;
pub use svm::SvmModel;
pub use tree::DtModel;

use crate::error::{Error, Result};
use crate::labeling::PuLabelVector;
use crate::occupancy::StatusMatrix;

/// Binary status rows with their PU labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n_features: usize,
    features: Vec<u8>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(n_features: usize, features: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Shape("dataset needs at least one feature".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Shape(format!(
                "{} feature values do not match {} rows of {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if features.iter().chain(&labels).any(|&v| v > 1) {
            return Err(Error::Shape("features and labels must be 0 or 1".into()));
        }
        Ok(Dataset {
            n_features,
            features,
            labels,
        })
    }

    pub fn from_rows(rows: &[Vec<u8>], labels: &[u8]) -> Result<Self> {
        let k = rows.first().map(Vec::len).unwrap_or(0);
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("ragged feature rows".into()));
        }
        Self::new(k, rows.concat(), labels.to_vec())
    }

    pub fn from_status(status: &StatusMatrix, labels: &PuLabelVector) -> Result<Self> {
        if status.n_slots() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: status.n_slots(),
                actual: labels.len(),
            });
        }
        Self::new(
            status.n_bins(),
            status.values().to_vec(),
            labels.values().to_vec(),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn features(&self) -> &[u8] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn has_both_classes(&self) -> bool {
        let [zeros, ones] = self.class_counts();
        zeros > 0 && ones > 0
    }

    /// Majority label, ties resolving to 0.
    pub fn majority_label(&self) -> u8 {
        let [zeros, ones] = self.class_counts();
        u8::from(ones > zeros)
    }

    /// Rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        let k = self.n_features;
        Dataset {
            n_features: k,
            features: self.features[start * k..end * k].to_vec(),
            labels: self.labels[start..end].to_vec(),
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.n_features != other.n_features {
            return Err(Error::Shape(
                "cannot concatenate datasets with different widths".into(),
            ));
        }
        let mut out = self.clone();
        out.features.extend_from_slice(&other.features);
        out.labels.extend_from_slice(&other.labels);
        Ok(out)
    }
}

/// Why reference labels were read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelUse {
    Evaluate,
    ExpectedOutage,
}

/// Held-out labels. Every read is tagged and logged.
#[derive(Debug, Clone)]
pub struct ReferenceLabels {
    values: PuLabelVector,
    reads: Arc<Mutex<Vec<LabelUse>>>,
}

impl ReferenceLabels {
    pub fn new(values: PuLabelVector) -> Self {
        ReferenceLabels {
            values,
            reads: Arc::new(Mutex::new(Vec::new())),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn read(&self, purpose: LabelUse) -> &PuLabelVector {
        self.reads.lock().expect("label log poisoned").push(purpose);
        &self.values
    }

    /// Every tagged read so far, in order.
    pub fn read_log(&self) -> Vec<LabelUse> {
        self.reads.lock().expect("label log poisoned").clone()
    }
}

#[derive(Debug, Clone)]
pub struct TestSet {
    n_features: usize,
    features: Vec<u8>,
    pub reference: ReferenceLabels,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn features(&self) -> &[u8] {
        &self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.features.chunks_exact(self.n_features)
    }
}

#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    pub train: Dataset,
    pub test: TestSet,
    pub ratio: f64,
}

/// Number of training rows for `n` slots at `train_fraction`.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    // Guard against 0.15 * 100 = 15.000000000000002 rounding up to 16.
    let raw = n as f64 * train_fraction;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Chronological split: the first `ceil(n * train_fraction)` rows train.
pub fn split(dataset: &Dataset, train_fraction: f64) -> Result<TrainTestSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Split(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = dataset.len();
    let n1 = train_size(n, train_fraction);
    if n1 == 0 || n1 >= n {
        return Err(Error::Split(format!(
            "{n} rows at fraction {train_fraction} leave an empty side ({n1} train)"
        )));
    }
    let rest = dataset.slice(n1, n);
    Ok(TrainTestSplit {
        train: dataset.slice(0, n1),
        test: TestSet {
            n_features: rest.n_features,
            features: rest.features,
            reference: ReferenceLabels::new(PuLabelVector(rest.labels)),
        },
        ratio: train_fraction,
    })
}

/// A fitted model that maps a binary status row to a PU label.
pub trait Classifier {
    fn predict_one(&self, features: &[u8]) -> u8;

    fn predict_rows<'a, I>(&self, rows: I) -> Vec<u8>
    where
        I: IntoIterator<Item = &'a [u8]>,
        Self: Sized,
    {
        rows.into_iter().map(|r| self.predict_one(r)).collect()
    }
}
