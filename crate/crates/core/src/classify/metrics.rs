use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub fit_seconds: f64,
    pub predict_seconds: f64,
}

/// Classification accuracy with its error breakdown.
///
/// A misdetection predicts idle (0) for an occupied slot (1); a false alarm
/// predicts occupied for an idle slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ca: f64,
    pub correct: usize,
    pub total: usize,
    pub misdetections: usize,
    pub false_alarms: usize,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
}

pub fn evaluate(predicted: &[u8], reference: &[u8], timings: Timings) -> Result<Metrics> {
    if predicted.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput("nothing to evaluate".into()));
    }
    let mut correct = 0;
    let mut misdetections = 0;
    let mut false_alarms = 0;
    for (&p, &r) in predicted.iter().zip(reference) {
        match (p, r) {
            (p, r) if p == r => correct += 1,
            (0, _) => misdetections += 1,
            _ => false_alarms += 1,
        }
    }
    Ok(Metrics {
        ca: correct as f64 / predicted.len() as f64,
        correct,
        total: predicted.len(),
        misdetections,
        false_alarms,
        fit_seconds: timings.fit_seconds,
        predict_seconds: timings.predict_seconds,
    })
}

/// One line of the per-day metrics report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub day: usize,
    pub classifier: String,
    pub metrics: Metrics,
}

/// `day,classifier,ca,misdetections,false_alarms,fit_seconds,predict_seconds`
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "day,classifier,ca,misdetections,false_alarms,fit_seconds,predict_seconds"
    )?;
    for r in rows {
        let m = &r.metrics;
        writeln!(
            w,
            "{},{},{:?},{},{},{:?},{:?}",
            r.day,
            r.classifier,
            m.ca,
            m.misdetections,
            m.false_alarms,
            m.fit_seconds,
            m.predict_seconds
        )?;
    }
    Ok(())
}
