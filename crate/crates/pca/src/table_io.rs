//! Measure-table files.
//!
//! Binary layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 0..4  | magic `PCAM` |
//! | 4     | dimension |
//! | 5     | spin-space id (1 = {−1, +1}) |
//! | 6     | region kind (0 = L1 ball at the origin, 1 = explicit) |
//! | 7     | format version (1) |
//! | 8..16 | ball radius, or site count for explicit regions |
//! | 16..  | `2^|Λ|` f64 probabilities in rank order |

use std::fmt::Write as _;

use pca_core::exact::MeasureTable;
use pca_core::lattice::RegionKind;

pub const MAGIC: &[u8; 4] = b"PCAM";
pub const VERSION: u8 = 1;
pub const BINARY_SPINS: u8 = 1;
/// Largest region written as CSV.
pub const CSV_MAX_SITES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TableHeader {
    pub dim: u8,
    pub spin_space: u8,
    pub ball: bool,
    /// Radius for balls, site count otherwise.
    pub size: u64,
}

#[derive(Debug)]
pub enum TableFileError {
    Truncated,
    BadMagic,
    Version(u8),
    Length { expected: usize, got: usize },
}

impl std::fmt::Display for TableFileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TableFileError::Truncated => f.write_str("file shorter than its 16-byte header"),
            TableFileError::BadMagic => f.write_str("missing PCAM magic"),
            TableFileError::Version(v) => write!(f, "unsupported format version {v}"),
            TableFileError::Length { expected, got } => write!(f, "expected {expected} probabilities, found {got}"),
        }
    }
}

impl std::error::Error for TableFileError {}

pub fn encode(table: &MeasureTable) -> Vec<u8> {
    let region = table.region();
    let (ball, size) = match region.kind() {
        RegionKind::L1Ball { center, radius } if center.l1_norm() == 0 => (true, *radius as u64),
        _ => (false, region.len() as u64),
    };
    let mut out = Vec::with_capacity(16 + 8 * table.probs().len());
    out.extend_from_slice(MAGIC);
    out.push(region.dim() as u8);
    out.push(BINARY_SPINS);
    out.push(if ball { 0 } else { 1 });
    out.push(VERSION);
    out.extend_from_slice(&size.to_le_bytes());
    for p in table.probs() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<(TableHeader, Vec<f64>), TableFileError> {
    if bytes.len() < 16 {
        return Err(TableFileError::Truncated);
    }
    if &bytes[..4] != MAGIC {
        return Err(TableFileError::BadMagic);
    }
    if bytes[7] != VERSION {
        return Err(TableFileError::Version(bytes[7]));
    }
    let header = TableHeader {
        dim: bytes[4],
        spin_space: bytes[5],
        ball: bytes[6] == 0,
        size: u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")),
    };
    let body = &bytes[16..];
    if !body.len().is_multiple_of(8) || !(body.len() / 8).is_power_of_two() {
        return Err(TableFileError::Length { expected: (body.len() / 8).next_power_of_two(), got: body.len() / 8 });
    }
    let probs = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((header, probs))
}

/// `rank,config,probability` with one `±` character per site; `None` above
/// [`CSV_MAX_SITES`].
pub fn to_csv(table: &MeasureTable) -> Option<String> {
    let n = table.region().len();
    if n > CSV_MAX_SITES {
        return None;
    }
    let mut out = String::from("rank,config,probability\n");
    for (r, p) in table.probs().iter().enumerate() {
        let symbols: String = (0..n).map(|i| if r >> i & 1 == 1 { '+' } else { '-' }).collect();
        writeln!(out, "{r},{symbols},{}", crate::report::num(*p)).expect("string write");
    }
    Some(out)
}
