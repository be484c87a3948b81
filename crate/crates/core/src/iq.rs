//! Sample and reference file formats.
//!
//! IQ samples are either binary or CSV. The binary layout is
//!
//! ```text
//! b"OFDMIQ\0\0" | N: u64 LE | sample_rate: f64 LE | N x (re: f64 LE, im: f64 LE)
//! ```
//!
//! and the CSV layout one `re,im` pair per line. Reference files are CSV
//! with `subcarrier,re,im` per line. CSV readers skip a non-numeric first
//! line and blank lines.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::SubcarrierSymbol;

pub const MAGIC: &[u8; 8] = b"OFDMIQ\0\0";
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct IqData {
    pub samples: Vec<Complex64>,
    /// Present for binary files only.
    pub sample_rate: Option<f64>,
}

pub fn encode_binary(samples: &[Complex64], sample_rate: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

pub fn decode_binary(bytes: &[u8]) -> Result<IqData> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(Error::Parse("missing OFDMIQ header".into()));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice")) as usize;
    let sample_rate = f64_at(bytes, 16);
    let body = &bytes[HEADER_LEN..];
    if body.len() != n.checked_mul(16).ok_or_else(|| Error::Parse("sample count overflows".into()))? {
        return Err(Error::Parse(format!(
            "header declares {n} samples, body holds {} bytes",
            body.len()
        )));
    }
    let samples = (0..n)
        .map(|k| Complex64::new(f64_at(body, 16 * k), f64_at(body, 16 * k + 8)))
        .collect();
    Ok(IqData {
        samples,
        sample_rate: Some(sample_rate),
    })
}

/// Numeric rows of a CSV text, each with exactly `width` fields.
fn csv_rows(text: &str, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == width => rows.push(v),
            Ok(v) => {
                return Err(Error::Parse(format!(
                    "line {}: expected {width} fields, found {}",
                    line_no + 1,
                    v.len()
                )))
            }
            Err(_) if rows.is_empty() && line_no == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", line_no + 1))),
        }
    }
    Ok(rows)
}

pub fn parse_csv_iq(text: &str) -> Result<IqData> {
    let samples: Vec<Complex64> = csv_rows(text, 2)?
        .into_iter()
        .map(|r| Complex64::new(r[0], r[1]))
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyInput("IQ samples"));
    }
    Ok(IqData {
        samples,
        sample_rate: None,
    })
}

pub fn read_iq(path: impl AsRef<Path>) -> Result<IqData> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Parse("IQ file is neither OFDMIQ nor UTF-8 CSV".into()))?;
        parse_csv_iq(&text)
    }
}

pub fn write_iq_binary(path: impl AsRef<Path>, samples: &[Complex64], sample_rate: f64) -> Result<()> {
    std::fs::write(path, encode_binary(samples, sample_rate))?;
    Ok(())
}

pub fn iq_csv(samples: &[Complex64]) -> String {
    let mut out = String::from("re,im\n");
    for s in samples {
        let _ = writeln!(out, "{:e},{:e}", s.re, s.im);
    }
    out
}

pub fn parse_reference(text: &str) -> Result<Vec<SubcarrierSymbol>> {
    let rows = csv_rows(text, 3)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput("reference symbols"));
    }
    rows.into_iter()
        .map(|r| {
            if r[0] < 0.0 || r[0].fract() != 0.0 {
                return Err(Error::Parse(format!("subcarrier index {} is not a non-negative integer", r[0])));
            }
            Ok(SubcarrierSymbol::from_complex(r[0] as usize, Complex64::new(r[1], r[2])))
        })
        .collect()
}

pub fn read_reference(path: impl AsRef<Path>) -> Result<Vec<SubcarrierSymbol>> {
    parse_reference(&std::fs::read_to_string(path)?)
}

pub fn reference_csv(symbols: &[SubcarrierSymbol]) -> String {
    let mut out = String::from("subcarrier,re,im\n");
    for s in symbols {
        let v = s.value();
        let _ = writeln!(out, "{},{:e},{:e}", s.index, v.re, v.im);
    }
    out
}
