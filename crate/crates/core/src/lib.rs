//! Parallel graph loading from Matrix Market and edge-list text files.
//!
//! The input is memory-mapped and split into newline-aligned blocks that
//! worker threads claim dynamically. Each worker parses its blocks into its
//! own edge buffers while counting out-degrees into a small number of shared
//! partitions. The buffers are then turned into a CSR in two stages:
//! partition-local CSRs first, merged per vertex into one global CSR.
//!
//! ```no_run
//! use graphload::{load_graph, InputFormat, LoadConfig};
//!
//! let g = load_graph("web.mtx", &InputFormat::MatrixMarket, &LoadConfig::default())?;
//! println!("{} vertices, {} edges", g.csr.num_vertices(), g.csr.num_edges());
//! # Ok::<(), graphload::Error>(())
//! ```

pub mod bytes;
pub mod cli;
pub mod csr;
pub mod edgelist;
pub mod error;
pub mod parse;
pub mod pipeline;
pub mod reference;

pub use bytes::{block_range, map_file, BlockRange, MappedBytes};
pub use csr::{canonicalize, convert_to_csr, exclusive_scan, Csr};
pub use edgelist::{
    combine_degrees, read_edgelist, EdgeListChunks, LoadConfig, PartitionedDegrees, VertexId,
};
pub use error::{Error, FormatErrorKind, Result};
pub use parse::{parse_mtx_header, MtxHeader};
pub use pipeline::{load_graph, EdgeListShape, InputFormat, LoadedGraph, Loader};
pub use reference::oracle_load;
