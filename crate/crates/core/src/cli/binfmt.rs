//! Binary CSR file format.
//!
//! All integers are little-endian:
//!
//! | bytes            | field                                        |
//! |------------------|----------------------------------------------|
//! | 8                | magic `GVELCSR1`                             |
//! | 8                | flags: bit 0 weighted, bit 1 symmetric source |
//! | 8                | vertex count `n`                             |
//! | 8                | edge count `m`                               |
//! | 8 (n + 1)        | offsets, u64                                 |
//! | 8 m              | edge targets, u64                            |
//! | 4 m (if weighted)| edge weights, IEEE-754 f32                   |

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::csr::Csr;

pub const MAGIC: &[u8; 8] = b"GVELCSR1";
pub const FLAG_WEIGHTED: u64 = 1;
pub const FLAG_SYMMETRIC: u64 = 1 << 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum BinaryFormatError {
    #[error("bad magic, not a binary CSR file")]
    BadMagic,
    #[error("file is {actual} bytes, expected {expected}")]
    LengthMismatch { expected: u64, actual: u64 },
    #[error("unknown flag bits {0:#x}")]
    UnknownFlags(u64),
    #[error("invalid CSR: {0}")]
    InvalidCsr(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Exact file size for a graph with `vertices` vertices and `edges` edges.
pub fn file_len(vertices: u64, edges: u64, weighted: bool) -> u64 {
    HEADER_LEN as u64 + 8 * (vertices + 1) + 8 * edges + if weighted { 4 * edges } else { 0 }
}

/// Streams `csr` to `w`.
pub fn write_to(mut w: impl Write, csr: &Csr, symmetric: bool) -> io::Result<()> {
    let mut flags = 0;
    if csr.is_weighted() {
        flags |= FLAG_WEIGHTED;
    }
    if symmetric {
        flags |= FLAG_SYMMETRIC;
    }
    w.write_all(MAGIC)?;
    w.write_all(&flags.to_le_bytes())?;
    w.write_all(&(csr.num_vertices() as u64).to_le_bytes())?;
    w.write_all(&(csr.num_edges() as u64).to_le_bytes())?;
    for &o in &csr.offsets {
        w.write_all(&o.to_le_bytes())?;
    }
    for &k in &csr.edge_keys {
        w.write_all(&u64::from(k).to_le_bytes())?;
    }
    if let Some(values) = &csr.edge_values {
        for &v in values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn encode(csr: &Csr, symmetric: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(file_len(
        csr.num_vertices() as u64,
        csr.num_edges() as u64,
        csr.is_weighted(),
    ) as usize);
    write_to(&mut out, csr, symmetric).expect("writing to a Vec cannot fail");
    out
}

pub fn write_file(path: impl AsRef<Path>, csr: &Csr, symmetric: bool) -> io::Result<()> {
    let file = File::create(path)?;
    write_to(BufWriter::with_capacity(1 << 20, file), csr, symmetric)
}

/// A decoded file: the graph plus the symmetric-source flag.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCsr {
    pub csr: Csr,
    pub symmetric: bool,
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<BinaryCsr, BinaryFormatError> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(BinaryFormatError::BadMagic);
    }
    let flags = u64_at(bytes, 8);
    if flags & !(FLAG_WEIGHTED | FLAG_SYMMETRIC) != 0 {
        return Err(BinaryFormatError::UnknownFlags(flags));
    }
    let weighted = flags & FLAG_WEIGHTED != 0;
    let n = u64_at(bytes, 16);
    let m = u64_at(bytes, 24);
    let expected = n
        .checked_add(1)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(m.checked_mul(if weighted { 12 } else { 8 })?))
        .and_then(|v| v.checked_add(HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(BinaryFormatError::LengthMismatch {
            expected: expected.unwrap_or(u64::MAX),
            actual: bytes.len() as u64,
        });
    }
    let (n, m) = (n as usize, m as usize);
    let mut at = HEADER_LEN;
    let offsets: Vec<u64> = (0..=n).map(|i| u64_at(bytes, at + 8 * i)).collect();
    at += 8 * (n + 1);
    let mut edge_keys = Vec::with_capacity(m);
    for i in 0..m {
        let k = u64_at(bytes, at + 8 * i);
        let k = u32::try_from(k)
            .map_err(|_| BinaryFormatError::InvalidCsr(format!("edge {i} target {k} too large")))?;
        edge_keys.push(k);
    }
    at += 8 * m;
    let edge_values = weighted.then(|| {
        (0..m)
            .map(|i| f32::from_le_bytes(bytes[at + 4 * i..at + 4 * i + 4].try_into().unwrap()))
            .collect()
    });
    let csr = Csr {
        offsets,
        edge_keys,
        edge_values,
    };
    csr.validate().map_err(BinaryFormatError::InvalidCsr)?;
    Ok(BinaryCsr {
        csr,
        symmetric: flags & FLAG_SYMMETRIC != 0,
    })
}

pub fn read_file(path: impl AsRef<Path>) -> Result<BinaryCsr, BinaryFormatError> {
    decode(&std::fs::read(path)?)
}
