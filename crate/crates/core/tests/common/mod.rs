#![allow(dead_code)]

use std::path::{Path, PathBuf};

use graphload::cli::binfmt;
use graphload::cli::synth::{self, SynthSpec};
use graphload::Csr;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn write_synth(dir: &Path, name: &str, spec: &SynthSpec) -> PathBuf {
    let p = dir.join(name);
    synth::write_file(&p, spec).unwrap();
    p
}

/// Canonical byte encoding of a CSR, for exact comparisons.
pub fn canonical_bytes(csr: Csr) -> Vec<u8> {
    binfmt::encode(&csr.canonicalize(), false)
}

/// Out-degree of every vertex counted directly from an edge list.
pub fn degrees_from_edges(vertices: usize, sources: impl Iterator<Item = u32>) -> Vec<u64> {
    let mut d = vec![0u64; vertices];
    for u in sources {
        d[u as usize] += 1;
    }
    d
}
