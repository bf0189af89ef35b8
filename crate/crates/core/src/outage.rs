//! Secondary-user outage probability from a predicted PU-status vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::PuLabelVector;
use crate::occupancy::OccupancyVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutageMode {
    /// Block probability is the product of slot occupancies.
    #[default]
    AsWritten,
    /// Block probability is the product of slot availabilities `1 - OC`.
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutageOptions {
    pub mode: OutageMode,
    /// Multiply over `r..=r+out_su`; otherwise over `r..r+out_su`.
    pub inclusive: bool,
}

impl Default for OutageOptions {
    fn default() -> Self {
        OutageOptions {
            mode: OutageMode::AsWritten,
            inclusive: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeBlock {
    pub start: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageReport {
    pub free_blocks: Vec<FreeBlock>,
    pub block_probabilities: Vec<f64>,
    /// Sum of block probabilities before clamping.
    pub raw_transmit: f64,
    pub p_transmit: f64,
    pub p_outage: f64,
    pub out_su: usize,
    pub mode: OutageMode,
    pub inclusive: bool,
}

/// Maximal runs of idle slots (label 0) at least `out_su` long, in order.
pub fn find_free_blocks(p_eval: &PuLabelVector, out_su: usize) -> Result<Vec<FreeBlock>> {
    if out_su == 0 {
        return Err(Error::InvalidConfig("out_su must be at least 1".into()));
    }
    let v = p_eval.values();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < v.len() {
        if v[i] != 0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < v.len() && v[i] == 0 {
            i += 1;
        }
        if i - start >= out_su {
            blocks.push(FreeBlock {
                start,
                length: i - start,
            });
        }
    }
    Ok(blocks)
}

/// Outage probability `1 - sum_c P(FB_c)`. The product for a block starting
/// at `r` runs to `r + out_su`, truncated at the end of the vector. The sum is
/// clamped to `[0, 1]`.
pub fn su_outage_probability(
    p_eval: &PuLabelVector,
    occ: &OccupancyVector,
    out_su: usize,
    opts: OutageOptions,
) -> Result<OutageReport> {
    if p_eval.len() != occ.len() {
        return Err(Error::LengthMismatch {
            expected: p_eval.len(),
            actual: occ.len(),
        });
    }
    let free_blocks = find_free_blocks(p_eval, out_su)?;
    let oc = occ.values();
    let block_probabilities: Vec<f64> = free_blocks
        .iter()
        .map(|b| {
            let end = if opts.inclusive {
                b.start + out_su + 1
            } else {
                b.start + out_su
            };
            oc[b.start..end.min(oc.len())]
                .iter()
                .map(|&o| match opts.mode {
                    OutageMode::AsWritten => o,
                    OutageMode::Complement => 1.0 - o,
                })
                .product()
        })
        .collect();
    let raw_transmit: f64 = block_probabilities.iter().sum();
    if raw_transmit > 1.0 {
        log::warn!("free-block probabilities sum to {raw_transmit}; clamped to 1");
    }
    let p_transmit = raw_transmit.clamp(0.0, 1.0);
    let p_outage = if free_blocks.is_empty() {
        1.0
    } else {
        1.0 - p_transmit
    };
    Ok(OutageReport {
        free_blocks,
        block_probabilities,
        raw_transmit,
        p_transmit,
        p_outage,
        out_su,
        mode: opts.mode,
        inclusive: opts.inclusive,
    })
}
