use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{BandConfig, PowerMatrix};
use crate::error::{Error, Result};

/// Reads a measurement CSV: a header row, then `slot,p_1,...,p_k` per line.
pub fn load_csv(path: impl AsRef<Path>, band: &BandConfig) -> Result<PowerMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, band)
}

pub fn read_csv<R: Read>(reader: R, band: &BandConfig) -> Result<PowerMatrix> {
    let k = band.num_bins;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::EmptyInput("csv file has no header".into())),
        Some(rec) => rec?,
    };
    if header.len() != k + 1 {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "header names {} power columns, band has {} bins",
                header.len().saturating_sub(1),
                k
            ),
        });
    }

    let mut values = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != k + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} columns, found {}", k + 1, rec.len()),
            });
        }
        rec[0].parse::<u64>().map_err(|_| Error::Parse {
            line,
            message: format!("slot index {:?} is not a non-negative integer", &rec[0]),
        })?;
        for field in rec.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("power {:?} is not a number", field),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("power {:?} is not finite", field),
                });
            }
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("csv file has no data rows".into()));
    }
    PowerMatrix::new(band.clone(), values)
}

/// Writes the canonical form: header `slot,bin_1,...,bin_k`, slot index, then powers.
pub fn write_csv(matrix: &PowerMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv_to(matrix, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(matrix: &PowerMatrix, w: &mut W) -> std::io::Result<()> {
    write!(w, "slot")?;
    for j in 1..=matrix.n_bins() {
        write!(w, ",bin_{}", j)?;
    }
    writeln!(w)?;
    for (i, row) in matrix.rows().enumerate() {
        write!(w, "{}", i)?;
        for v in row {
            // Debug formatting is the shortest representation that round-trips.
            write!(w, ",{:?}", v)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
