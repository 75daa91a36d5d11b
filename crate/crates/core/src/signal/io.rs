//! Record file formats.
//!
//! CSV: first line `fs=<rate>`, second line the comma-separated channel
//! positions in metres, then one time step per line with one value per channel.
//!
//! Binary (`binary_f64`), all little-endian: magic `SMR1`, `u32` channel
//! count, `u32` sample count, `f64` sampling rate, one `f64` position per
//! channel, then the samples row-major (channel by channel) as `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{Quantity, Record, SignalError, StrainRecord};
use crate::scalar::Real;

pub const BINARY_MAGIC: &[u8; 4] = b"SMR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    BinaryF64,
}

impl RecordFormat {
    /// `.csv` maps to CSV, everything else to the binary format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::BinaryF64,
        }
    }
}

/// Ingestion options.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Convert by central differences after loading (strain to strain rate).
    pub differentiate: bool,
}

pub fn load_record<T: Real>(path: &Path, format: RecordFormat) -> Result<StrainRecord<T>, SignalError> {
    Record::load(path, format)
}

pub fn save_record<T: Real, Q: Quantity>(
    record: &Record<T, Q>,
    path: &Path,
    format: RecordFormat,
) -> Result<(), SignalError> {
    record.save(path, format)
}

impl<T: Real, Q: Quantity> Record<T, Q> {
    pub fn load(path: &Path, format: RecordFormat) -> Result<Self, SignalError> {
        Self::load_with(path, format, LoadOptions::default())
    }

    pub fn load_with(path: &Path, format: RecordFormat, opts: LoadOptions) -> Result<Self, SignalError> {
        let bytes = fs::read(path)?;
        let record = match format {
            RecordFormat::Csv => parse_csv(&bytes)?,
            RecordFormat::BinaryF64 => parse_binary(&bytes)?,
        };
        Ok(if opts.differentiate {
            super::differentiate(&record)
        } else {
            record
        })
    }

    pub fn save(&self, path: &Path, format: RecordFormat) -> Result<(), SignalError> {
        let bytes = match format {
            RecordFormat::Csv => self.to_csv_bytes()?,
            RecordFormat::BinaryF64 => self.to_binary_bytes(),
        };
        let mut f = fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let (m, n) = self.samples().shape();
        let mut out = Vec::with_capacity(4 + 8 + 8 + 8 * m + 8 * m * n);
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(m as u32).to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&self.sampling_rate_hz().to_f64_lossy().to_le_bytes());
        for p in self.positions_m() {
            out.extend_from_slice(&p.to_f64_lossy().to_le_bytes());
        }
        for c in 0..m {
            for t in 0..n {
                out.extend_from_slice(&self.samples()[(c, t)].to_f64_lossy().to_le_bytes());
            }
        }
        out
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, SignalError> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        w.write_record([format!("fs={}", self.sampling_rate_hz())])
            .map_err(csv_write_err)?;
        w.write_record(self.positions_m().iter().map(|p| p.to_string()))
            .map_err(csv_write_err)?;
        for col in self.samples().column_iter() {
            w.write_record(col.iter().map(|v| v.to_string())).map_err(csv_write_err)?;
        }
        w.into_inner()
            .map_err(|e| SignalError::Io(std::io::Error::other(e.to_string())))
    }
}

fn csv_write_err(e: csv::Error) -> SignalError {
    SignalError::Io(std::io::Error::other(e.to_string()))
}

fn parse_value<T: Real>(s: &str, line: usize) -> Result<T, SignalError> {
    let v: f64 = s.trim().parse().map_err(|_| SignalError::Parse {
        line,
        message: format!("not a number: {s:?}"),
    })?;
    Ok(T::lit(v))
}

fn parse_csv<T: Real, Q: Quantity>(bytes: &[u8]) -> Result<Record<T, Q>, SignalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows = rdr.records();
    let parse_err = |line: usize, message: String| SignalError::Parse { line, message };

    let header = rows
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?
        .map_err(|e| parse_err(1, e.to_string()))?;
    let fs_field = header.get(0).unwrap_or("");
    let fs_text = fs_field
        .strip_prefix("fs=")
        .ok_or_else(|| parse_err(1, format!("expected `fs=<rate>`, got {fs_field:?}")))?;
    let fs: T = parse_value(fs_text, 1)?;

    let pos_row = rows
        .next()
        .ok_or_else(|| parse_err(2, "missing channel positions".into()))?
        .map_err(|e| parse_err(2, e.to_string()))?;
    let positions = pos_row
        .iter()
        .map(|s| parse_value(s, 2))
        .collect::<Result<Vec<T>, _>>()?;
    let m = positions.len();

    let mut data = Vec::new();
    let mut n = 0usize;
    for (k, row) in rows.enumerate() {
        let line = k + 3;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        if row.len() == 1 && row.get(0) == Some("") {
            continue;
        }
        if row.len() != m {
            return Err(parse_err(line, format!("expected {m} values, found {}", row.len())));
        }
        for s in row.iter() {
            data.push(parse_value::<T>(s, line)?);
        }
        n += 1;
    }
    // data is time-major, i.e. column-major for a channels × time matrix
    let samples = DMatrix::from_column_slice(m, n, &data);
    Record::new(samples, fs, positions)
}

fn parse_binary<T: Real, Q: Quantity>(bytes: &[u8]) -> Result<Record<T, Q>, SignalError> {
    let err = |message: &str| SignalError::Parse {
        line: 0,
        message: message.to_string(),
    };
    if bytes.len() < 20 || &bytes[..4] != BINARY_MAGIC {
        return Err(err("missing SMR1 header"));
    }
    let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 20 + 8 * m + 8 * m * n;
    if bytes.len() != expected {
        return Err(err(&format!(
            "binary payload has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let fs = T::lit(f64_at(12));
    let positions = (0..m).map(|c| T::lit(f64_at(20 + 8 * c))).collect();
    let base = 20 + 8 * m;
    let samples = DMatrix::from_fn(m, n, |c, t| T::lit(f64_at(base + 8 * (c * n + t))));
    Record::new(samples, fs, positions)
}
