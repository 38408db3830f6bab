//! Deterministic synthetic Matrix Market graphs.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceDistribution {
    Uniform,
    /// Zipf-distributed sources with the given exponent; low ids are hubs.
    PowerLaw {
        exponent: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub vertices: u64,
    pub edges: u64,
    pub seed: u64,
    pub distribution: SourceDistribution,
    pub symmetric: bool,
    pub weighted: bool,
}

impl SynthSpec {
    pub fn uniform(vertices: u64, edges: u64, seed: u64) -> Self {
        SynthSpec {
            vertices,
            edges,
            seed,
            distribution: SourceDistribution::Uniform,
            symmetric: false,
            weighted: false,
        }
    }

    pub fn power_law(vertices: u64, edges: u64, seed: u64, exponent: f64) -> Self {
        SynthSpec {
            distribution: SourceDistribution::PowerLaw { exponent },
            ..Self::uniform(vertices, edges, seed)
        }
    }
}

/// Writes the graph as a Matrix Market coordinate file. Ids are 1-based.
/// Symmetric graphs keep only entries with row >= column.
pub fn generate(spec: &SynthSpec, mut w: impl Write) -> io::Result<()> {
    assert!(spec.vertices >= 1, "at least one vertex is required");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let field = if spec.weighted { "real" } else { "pattern" };
    let symmetry = if spec.symmetric {
        "symmetric"
    } else {
        "general"
    };
    writeln!(w, "%%MatrixMarket matrix coordinate {field} {symmetry}")?;
    writeln!(w, "{} {} {}", spec.vertices, spec.vertices, spec.edges)?;

    let zipf = match spec.distribution {
        SourceDistribution::Uniform => None,
        SourceDistribution::PowerLaw { exponent } => Some(
            Zipf::new(spec.vertices, exponent)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?,
        ),
    };
    for _ in 0..spec.edges {
        let mut u = match &zipf {
            Some(z) => z.sample(&mut rng) as u64,
            None => rng.gen_range(1..=spec.vertices),
        };
        let mut v = rng.gen_range(1..=spec.vertices);
        if spec.symmetric && u < v {
            std::mem::swap(&mut u, &mut v);
        }
        if spec.weighted {
            let weight: f32 = rng.gen_range(0.001f32..100.0);
            writeln!(w, "{u} {v} {weight}")?;
        } else {
            writeln!(w, "{u} {v}")?;
        }
    }
    w.flush()
}

pub fn write_file(path: impl AsRef<Path>, spec: &SynthSpec) -> io::Result<()> {
    let file = File::create(path)?;
    generate(spec, BufWriter::with_capacity(1 << 20, file))
}

pub fn to_bytes(spec: &SynthSpec) -> Vec<u8> {
    let mut out = Vec::new();
    generate(spec, &mut out).expect("writing to a Vec cannot fail");
    out
}
