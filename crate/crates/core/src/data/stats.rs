use serde::Serialize;

use super::PowerMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub power_dbm: f64,
    pub fraction: f64,
}

/// Empirical CDF over the distinct power values of a matrix.
pub fn empirical_cdf(matrix: &PowerMatrix) -> Result<Vec<CdfPoint>> {
    if matrix.is_empty() {
        return Err(Error::EmptyInput("cdf of an empty matrix".into()));
    }
    let mut sorted = matrix.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let mut points: Vec<CdfPoint> = Vec::new();
    for (idx, &v) in sorted.iter().enumerate() {
        let fraction = (idx + 1) as f64 / total;
        match points.last_mut() {
            Some(last) if last.power_dbm == v => last.fraction = fraction,
            _ => points.push(CdfPoint {
                power_dbm: v,
                fraction,
            }),
        }
    }
    if let Some(last) = points.last_mut() {
        last.fraction = 1.0;
    }
    Ok(points)
}
