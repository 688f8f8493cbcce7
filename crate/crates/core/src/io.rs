//! File formats: signal CSV and binary containers, truth JSON, metric CSV.
//!
//! Formats are f64 on disk regardless of the working scalar type.
//!
//! * Signal CSV: header `index,real,imag`, one row per sample.
//! * Signal binary: 8-byte magic `GLSESIG1`, little-endian u64 length,
//!   little-endian f64 sample interval, then interleaved little-endian f64
//!   (re, im) pairs.
//! * Metric CSV: header `scenario,seed,snr_db,metric,value`.

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, RealScalar};
use crate::signal::SignalVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const BINARY_MAGIC: &[u8; 8] = b"GLSESIG1";

pub fn write_signal_csv<T: RealScalar>(path: &Path, signal: &SignalVector<T>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "index,real,imag")?;
    for (i, c) in signal.samples().iter().enumerate() {
        writeln!(w, "{},{:?},{:?}", i, to_f64(c.re), to_f64(c.im))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a signal CSV. The format does not carry the sampling interval;
/// pass the one the caller knows (1.0 when working in sample units).
pub fn read_signal_csv<T: RealScalar>(path: &Path, sample_interval: T) -> Result<SignalVector<T>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut samples: Vec<Complex<T>> = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if line_no == 0 {
            if trimmed != "index,real,imag" {
                return Err(Error::Parse(format!(
                    "expected header 'index,real,imag', got '{trimmed}'"
                )));
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "line {}: expected 3 fields, got {}",
                line_no + 1,
                fields.len()
            )));
        }
        let index: usize = fields[0]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: bad index: {e}", line_no + 1)))?;
        if index != samples.len() {
            return Err(Error::Parse(format!(
                "line {}: index {} out of order (expected {})",
                line_no + 1,
                index,
                samples.len()
            )));
        }
        let re: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: bad real part: {e}", line_no + 1)))?;
        let im: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: bad imaginary part: {e}", line_no + 1)))?;
        samples.push(Complex::new(cast(re), cast(im)));
    }
    SignalVector::new(samples, sample_interval)
}

pub fn write_signal_binary<T: RealScalar>(path: &Path, signal: &SignalVector<T>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(signal.len() as u64).to_le_bytes())?;
    w.write_all(&to_f64(signal.sample_interval()).to_le_bytes())?;
    for c in signal.samples() {
        w.write_all(&to_f64(c.re).to_le_bytes())?;
        w.write_all(&to_f64(c.im).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_signal_binary<T: RealScalar>(path: &Path) -> Result<SignalVector<T>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format("not a signal container (bad magic)".into()));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let n = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8)?;
    let ts = f64::from_le_bytes(buf8);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut buf8)?;
        let re = f64::from_le_bytes(buf8);
        r.read_exact(&mut buf8)?;
        let im = f64::from_le_bytes(buf8);
        samples.push(Complex::new(cast(re), cast(im)));
    }
    SignalVector::new(samples, cast(ts))
}

/// Load a pulse spectrum from a two-column CSV of `real,imag` rows
/// (no header).
pub fn read_pulse_csv<T: RealScalar>(path: &Path) -> Result<Vec<Complex<T>>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut pulse = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Parse(format!(
                "pulse line {}: expected 2 fields, got {}",
                line_no + 1,
                fields.len()
            )));
        }
        let re: f64 = fields[0]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("pulse line {}: {e}", line_no + 1)))?;
        let im: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("pulse line {}: {e}", line_no + 1)))?;
        pulse.push(Complex::new(cast(re), cast(im)));
    }
    Ok(pulse)
}

/// Scatter-point record in extended-object truth files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScattererRecord {
    pub delay: f64,
    pub amp_re: f64,
    pub amp_im: f64,
}

/// Ground truth attached to a simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Truth {
    Multipitch {
        fundamentals: Vec<f64>,
    },
    Triad {
        fundamentals: Vec<f64>,
    },
    ExtendedObject {
        extent: f64,
        center: f64,
        region: (f64, f64),
        scatterers: Vec<ScattererRecord>,
    },
    Vmd {
        modes: Vec<Vec<f64>>,
    },
}

pub fn write_truth(path: &Path, truth: &Truth) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, truth)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<Truth> {
    let r = BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}

/// One metric record of an evaluation or experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scenario: String,
    pub seed: u64,
    pub snr_db: f64,
    pub metric: String,
    pub value: f64,
}

pub fn write_metric_rows(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "scenario,seed,snr_db,metric,value")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{:?},{},{:?}",
            row.scenario, row.seed, row.snr_db, row.metric, row.value
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_signal() -> SignalVector<f64> {
        let samples: Vec<Complex<f64>> = (0..16)
            .map(|i| Complex::new(i as f64 * 0.25, -(i as f64) * 0.5))
            .collect();
        SignalVector::new(samples, 0.125).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sig.csv");
        let sig = sample_signal();
        write_signal_csv(&path, &sig).unwrap();
        let back = read_signal_csv::<f64>(&path, 0.125).unwrap();
        assert_eq!(sig, back);
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sig.bin");
        let sig = sample_signal();
        write_signal_binary(&path, &sig).unwrap();
        let back = read_signal_binary::<f64>(&path).unwrap();
        assert_eq!(sig, back);
    }

    #[test]
    fn csv_rejects_malformed() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "index,real,imag\n0,1.0\n").unwrap();
        assert!(read_signal_csv::<f64>(&path, 1.0).is_err());
        std::fs::write(&path, "wrong,header\n").unwrap();
        assert!(read_signal_csv::<f64>(&path, 1.0).is_err());
        std::fs::write(&path, "index,real,imag\n0,abc,1.0\n").unwrap();
        assert!(read_signal_csv::<f64>(&path, 1.0).is_err());
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOTMAGIC--------").unwrap();
        assert!(read_signal_binary::<f64>(&path).is_err());
    }

    #[test]
    fn truth_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("truth.json");
        let truth = Truth::Triad {
            fundamentals: vec![0.072, 0.09, 0.108],
        };
        write_truth(&path, &truth).unwrap();
        assert_eq!(read_truth(&path).unwrap(), truth);
    }

    #[test]
    fn metric_rows_format() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metric_rows(
            &path,
            &[MetricRow {
                scenario: "multipitch".into(),
                seed: 7,
                snr_db: 10.0,
                metric: "ospa".into(),
                value: 0.0125,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "scenario,seed,snr_db,metric,value\nmultipitch,7,10.0,ospa,0.0125\n");
    }
}
