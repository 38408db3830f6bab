//! End-to-end loading: map, header, parallel edge-list read, CSR build.

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::ThreadPool;

use crate::bytes::map_file;
use crate::csr::{convert_to_csr_in, Csr};
use crate::edgelist::{read_edgelist_in, EdgeListChunks, LoadConfig, PartitionedDegrees};
use crate::error::{Error, FormatErrorKind, Result};
use crate::parse::{parse_mtx_header, MtxHeader, MAX_VERTICES};
use crate::reference::scan_edgelist;

/// Sizes and flags for a headerless edge list. Missing sizes are discovered
/// by a sequential pre-scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeListShape {
    pub vertices: Option<u64>,
    pub entries: Option<u64>,
    pub symmetric: bool,
    pub weighted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// Matrix Market coordinate file; flags come from the banner.
    MatrixMarket,
    /// Headerless `u v [w]` lines.
    EdgeList(EdgeListShape),
}

/// Determines the header and body offset for `data`.
pub fn resolve_header(
    data: &[u8],
    format: &InputFormat,
    one_based: bool,
) -> Result<(MtxHeader, usize)> {
    match format {
        InputFormat::MatrixMarket => parse_mtx_header(data),
        InputFormat::EdgeList(shape) => {
            let (vertices, entries) = match (shape.vertices, shape.entries) {
                (Some(v), Some(e)) => (v, e),
                (v, e) => {
                    let stats = scan_edgelist(data, 0, shape.weighted, one_based)?;
                    (v.unwrap_or(stats.vertices), e.unwrap_or(stats.entries))
                }
            };
            if vertices > MAX_VERTICES {
                return Err(Error::format(0, FormatErrorKind::TooManyVertices(vertices)));
            }
            Ok((
                MtxHeader::edgelist(vertices, entries, shape.symmetric, shape.weighted),
                0,
            ))
        }
    }
}

/// Wall time spent in each phase of a load.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    /// Mapping the file and reading its header.
    pub map: Duration,
    pub edgelist: Duration,
    pub csr: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.map + self.edgelist + self.csr
    }
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub header: MtxHeader,
    pub csr: Csr,
    pub timings: PhaseTimings,
}

/// Output of the edge-list phase alone.
#[derive(Debug)]
pub struct LoadedEdgeList {
    pub header: MtxHeader,
    pub chunks: EdgeListChunks,
    pub degrees: PartitionedDegrees,
    pub timings: PhaseTimings,
}

/// A configured loader owning its worker pool.
pub struct Loader {
    cfg: LoadConfig,
    pool: ThreadPool,
}

impl Loader {
    pub fn new(cfg: LoadConfig) -> Result<Self> {
        let pool = cfg.build_pool()?;
        Ok(Loader { cfg, pool })
    }

    pub fn config(&self) -> &LoadConfig {
        &self.cfg
    }

    pub fn read_edgelist(
        &self,
        data: &[u8],
        body_start: usize,
        header: &MtxHeader,
    ) -> Result<(EdgeListChunks, PartitionedDegrees)> {
        read_edgelist_in(&self.pool, data, body_start, header, &self.cfg)
    }

    pub fn convert_to_csr(&self, chunks: &EdgeListChunks, degrees: PartitionedDegrees) -> Csr {
        convert_to_csr_in(&self.pool, chunks, degrees)
    }

    /// Maps `path` and reads it into per-worker edge lists.
    pub fn load_edgelist(
        &self,
        path: impl AsRef<Path>,
        format: &InputFormat,
    ) -> Result<LoadedEdgeList> {
        let start = Instant::now();
        let data = map_file(path)?;
        let (header, body_start) = resolve_header(&data, format, self.cfg.one_based)?;
        let mapped = Instant::now();
        let (chunks, degrees) = self.read_edgelist(&data, body_start, &header)?;
        let read = Instant::now();
        Ok(LoadedEdgeList {
            header,
            chunks,
            degrees,
            timings: PhaseTimings {
                map: mapped - start,
                edgelist: read - mapped,
                csr: Duration::ZERO,
            },
        })
    }

    /// Maps `path`, reads it and builds the CSR.
    pub fn load(&self, path: impl AsRef<Path>, format: &InputFormat) -> Result<LoadedGraph> {
        let el = self.load_edgelist(path, format)?;
        let start = Instant::now();
        let csr = self.convert_to_csr(&el.chunks, el.degrees);
        drop(el.chunks);
        let timings = PhaseTimings {
            csr: start.elapsed(),
            ..el.timings
        };
        Ok(LoadedGraph {
            header: el.header,
            csr,
            timings,
        })
    }
}

/// One-shot convenience wrapper around [`Loader::load`].
pub fn load_graph(
    path: impl AsRef<Path>,
    format: &InputFormat,
    cfg: &LoadConfig,
) -> Result<LoadedGraph> {
    Loader::new(*cfg)?.load(path, format)
}
