//! Sequential line-by-line loader.
//!
//! Reads the file through a buffered reader one line at a time, applies the
//! same basing, symmetric-duplication and weight rules as the parallel path,
//! and builds the CSR with a single-threaded count / scan / fill. Adjacency
//! order is file order. It is the correctness reference for the parallel
//! loader and the single-thread baseline for benchmarks.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::csr::Csr;
use crate::edgelist::{LoadConfig, VertexId};
use crate::error::{Error, FormatErrorKind, Result};
use crate::parse::{parse_edge_line_dyn, parse_mtx_header, MtxHeader, MAX_VERTICES};
use crate::pipeline::{EdgeListShape, InputFormat};

/// A stored edge. Weight is 1 for unweighted graphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: VertexId,
    pub target: VertexId,
    pub weight: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleGraph {
    pub header: MtxHeader,
    /// Stored edges in file order, reverse edges right after their originals.
    pub edges: Vec<Edge>,
    pub csr: Csr,
}

/// Vertex and entry counts discovered by scanning a headerless edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeListStats {
    pub vertices: u64,
    pub entries: u64,
}

impl EdgeListStats {
    fn observe(&mut self, id: u64, at: usize, base: u64) -> Result<()> {
        let v = id.checked_sub(base).ok_or_else(|| {
            Error::format(
                at,
                FormatErrorKind::VertexOutOfRange {
                    id,
                    vertices: self.vertices,
                },
            )
        })?;
        if v >= MAX_VERTICES {
            return Err(Error::format(at, FormatErrorKind::TooManyVertices(v + 1)));
        }
        self.vertices = self.vertices.max(v + 1);
        Ok(())
    }
}

/// Counts edge lines and finds the largest vertex id in `data[from..]`.
pub fn scan_edgelist(
    data: &[u8],
    from: usize,
    weighted: bool,
    one_based: bool,
) -> Result<EdgeListStats> {
    let base = u64::from(one_based);
    let mut stats = EdgeListStats {
        vertices: 0,
        entries: 0,
    };
    let mut b = from;
    while let Some((e, next)) = parse_edge_line_dyn(data, b, data.len(), weighted)? {
        stats.observe(e.source, e.source_at, base)?;
        stats.observe(e.target, e.target_at, base)?;
        stats.entries += 1;
        b = next;
    }
    Ok(stats)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).map_err(|e| Error::from_io(path, e))?;
    if !file
        .metadata()
        .map_err(|e| Error::from_io(path, e))?
        .is_file()
    {
        return Err(Error::NotAFile(path.to_path_buf()));
    }
    Ok(BufReader::new(file))
}

fn read_line(reader: &mut impl BufRead, line: &mut Vec<u8>, path: &Path) -> Result<usize> {
    line.clear();
    reader
        .read_until(b'\n', line)
        .map_err(|e| Error::from_io(path, e))
}

/// Reads the banner, comments and size line. Returns the header and the
/// number of bytes consumed.
fn read_mtx_header(reader: &mut impl BufRead, path: &Path) -> Result<(MtxHeader, usize)> {
    let mut head = Vec::new();
    let mut line = Vec::new();
    loop {
        if read_line(reader, &mut line, path)? == 0 {
            break;
        }
        head.extend_from_slice(&line);
        let is_comment = line.first() == Some(&b'%');
        let blank = line.iter().all(u8::is_ascii_whitespace);
        if !is_comment && !blank {
            break;
        }
        if head.len() == line.len() && !line.starts_with(b"%%MatrixMarket") {
            break;
        }
    }
    let (header, body_start) = parse_mtx_header(&head)?;
    debug_assert_eq!(body_start, head.len());
    Ok((header, head.len()))
}

fn prescan(path: &Path, shape: &EdgeListShape, one_based: bool) -> Result<EdgeListStats> {
    let mut reader = open(path)?;
    let base = u64::from(one_based);
    let mut stats = EdgeListStats {
        vertices: 0,
        entries: 0,
    };
    let mut line = Vec::new();
    let mut offset = 0;
    loop {
        let n = read_line(&mut reader, &mut line, path)?;
        if n == 0 {
            break;
        }
        if let Some((e, _)) =
            parse_edge_line_dyn(&line, 0, n, shape.weighted).map_err(|err| shift(err, offset))?
        {
            stats
                .observe(e.source, offset + e.source_at, base)
                .and_then(|_| stats.observe(e.target, offset + e.target_at, base))?;
            stats.entries += 1;
        }
        offset += n;
    }
    Ok(stats)
}

fn shift(err: Error, by: usize) -> Error {
    match err {
        Error::Format { offset, kind } => Error::Format {
            offset: offset + by as u64,
            kind,
        },
        other => other,
    }
}

/// Loads `path` sequentially and builds its CSR.
pub fn oracle_load(
    path: impl AsRef<Path>,
    format: &InputFormat,
    cfg: &LoadConfig,
) -> Result<OracleGraph> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let (header, mut offset) = match format {
        InputFormat::MatrixMarket => read_mtx_header(&mut reader, path)?,
        InputFormat::EdgeList(shape) => {
            let (vertices, entries) = match (shape.vertices, shape.entries) {
                (Some(v), Some(e)) => (v, e),
                (v, e) => {
                    let stats = prescan(path, shape, cfg.one_based)?;
                    (v.unwrap_or(stats.vertices), e.unwrap_or(stats.entries))
                }
            };
            if vertices > MAX_VERTICES {
                return Err(Error::format(0, FormatErrorKind::TooManyVertices(vertices)));
            }
            (
                MtxHeader::edgelist(vertices, entries, shape.symmetric, shape.weighted),
                0,
            )
        }
    };

    let base = u64::from(cfg.one_based);
    let n = header.vertices();
    let check = |id: u64, at: usize| -> Result<VertexId> {
        match id.checked_sub(base) {
            Some(v) if v < n => Ok(v as VertexId),
            _ => Err(Error::format(
                at,
                FormatErrorKind::VertexOutOfRange { id, vertices: n },
            )),
        }
    };

    let mut edges = Vec::new();
    let mut lines = 0u64;
    let mut line = Vec::new();
    loop {
        let len = read_line(&mut reader, &mut line, path)?;
        if len == 0 {
            break;
        }
        let parsed =
            parse_edge_line_dyn(&line, 0, len, header.weighted).map_err(|e| shift(e, offset))?;
        if let Some((e, _)) = parsed {
            let u = check(e.source, offset + e.source_at)?;
            let v = check(e.target, offset + e.target_at)?;
            edges.push(Edge {
                source: u,
                target: v,
                weight: e.weight,
            });
            if header.symmetric {
                edges.push(Edge {
                    source: v,
                    target: u,
                    weight: e.weight,
                });
            }
            lines += 1;
        }
        offset += len;
    }
    if lines != header.entries {
        return Err(Error::format(
            offset,
            FormatErrorKind::EntryCountMismatch {
                declared: header.entries,
                found: lines,
            },
        ));
    }

    let csr = build_csr(n as usize, &edges, header.weighted);
    Ok(OracleGraph { header, edges, csr })
}

/// Textbook CSR build: count degrees, prefix-sum, fill in input order.
pub fn build_csr(vertices: usize, edges: &[Edge], weighted: bool) -> Csr {
    let mut offsets = vec![0u64; vertices + 1];
    for e in edges {
        offsets[e.source as usize + 1] += 1;
    }
    for u in 0..vertices {
        offsets[u + 1] += offsets[u];
    }
    let mut cursor = offsets.clone();
    let mut edge_keys = vec![0; edges.len()];
    let mut edge_values = weighted.then(|| vec![0f32; edges.len()]);
    for e in edges {
        let j = cursor[e.source as usize] as usize;
        cursor[e.source as usize] += 1;
        edge_keys[j] = e.target;
        if let Some(values) = edge_values.as_mut() {
            values[j] = e.weight;
        }
    }
    Csr {
        offsets,
        edge_keys,
        edge_values,
    }
}
