//! Throughput, scaling and parameter sweeps.

use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::edgelist::LoadConfig;
use crate::error::Result;
use crate::pipeline::{InputFormat, Loader};
use crate::reference::oracle_load;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Threads,
    Beta,
    Rho,
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "threads" | "workers" => Ok(SweepKind::Threads),
            "beta" | "block" => Ok(SweepKind::Beta),
            "rho" | "partitions" => Ok(SweepKind::Rho),
            other => Err(format!(
                "unknown sweep {other:?} (expected threads, beta or rho)"
            )),
        }
    }
}

impl SweepKind {
    /// Default sweep points: doubling thread counts up to the hardware
    /// level, block sizes 256 B to 4 MiB, partition counts 1 to 32.
    pub fn default_points(self) -> Vec<usize> {
        match self {
            SweepKind::Threads => {
                let hw = crate::edgelist::default_workers();
                let mut v: Vec<usize> = std::iter::successors(Some(1usize), |&t| Some(t * 2))
                    .take_while(|&t| t < hw)
                    .collect();
                v.push(hw);
                v
            }
            SweepKind::Beta => (0..8).map(|i| 256usize << (2 * i)).collect(),
            SweepKind::Rho => vec![1, 2, 4, 8, 16, 32],
        }
    }

    pub fn apply(self, base: &LoadConfig, point: usize) -> LoadConfig {
        let mut cfg = *base;
        match self {
            SweepKind::Threads => cfg.workers = point,
            SweepKind::Beta => cfg.block_size = point,
            SweepKind::Rho => cfg.partitions = point,
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    #[serde(rename = "edgelist")]
    Edgelist,
    #[serde(rename = "csr-total")]
    CsrTotal,
    /// Sequential reference loader, for speedup baselines.
    #[serde(rename = "oracle")]
    Oracle,
}

/// One benchmark line. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub graph: String,
    pub phase: Phase,
    pub workers: usize,
    pub beta: usize,
    pub rho: usize,
    pub mean_seconds: f64,
    pub edges_per_second: f64,
    #[serde(skip)]
    pub edges: u64,
}

impl BenchRecord {
    fn new(graph: &str, phase: Phase, cfg: &LoadConfig, mean: Duration, edges: u64) -> Self {
        let secs = mean.as_secs_f64();
        BenchRecord {
            graph: graph.to_string(),
            phase,
            workers: cfg.workers,
            beta: cfg.block_size,
            rho: cfg.partitions,
            mean_seconds: secs,
            edges_per_second: if secs > 0.0 {
                edges as f64 / secs
            } else {
                f64::INFINITY
            },
            edges,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("bench records always serialize")
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub format: InputFormat,
    pub base: LoadConfig,
    pub sweep: Option<(SweepKind, Vec<usize>)>,
    pub repeats: usize,
    pub phases: Vec<Phase>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            format: InputFormat::MatrixMarket,
            base: LoadConfig::default(),
            sweep: None,
            repeats: 5,
            phases: vec![Phase::Edgelist, Phase::CsrTotal],
        }
    }
}

/// Mean wall time of `repeats` runs of `f`, plus the edge count it reported.
fn time_mean(repeats: usize, mut f: impl FnMut() -> Result<u64>) -> Result<(Duration, u64)> {
    let mut total = Duration::ZERO;
    let mut edges = 0;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        edges = f()?;
        total += start.elapsed();
    }
    Ok((total / repeats.max(1) as u32, edges))
}

/// Times the edge-list phase (map + parse) with an existing loader.
pub fn time_edgelist(
    loader: &Loader,
    path: &Path,
    format: &InputFormat,
    repeats: usize,
) -> Result<(Duration, u64)> {
    time_mean(repeats, || {
        let el = loader.load_edgelist(path, format)?;
        Ok(el.chunks.total() as u64)
    })
}

/// Times map + parse + CSR build with an existing loader.
pub fn time_csr_total(
    loader: &Loader,
    path: &Path,
    format: &InputFormat,
    repeats: usize,
) -> Result<(Duration, u64)> {
    time_mean(repeats, || {
        let g = loader.load(path, format)?;
        Ok(g.csr.num_edges() as u64)
    })
}

pub fn time_oracle(
    path: &Path,
    format: &InputFormat,
    cfg: &LoadConfig,
    repeats: usize,
) -> Result<(Duration, u64)> {
    time_mean(repeats, || {
        let g = oracle_load(path, format, cfg)?;
        Ok(g.csr.num_edges() as u64)
    })
}

/// Runs every sweep point and phase, handing each record to `emit` as soon
/// as it is measured.
pub fn run(
    path: &Path,
    opts: &BenchOptions,
    mut emit: impl FnMut(&BenchRecord),
) -> Result<Vec<BenchRecord>> {
    let graph = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let configs: Vec<LoadConfig> = match &opts.sweep {
        None => vec![opts.base],
        Some((kind, points)) => points.iter().map(|&p| kind.apply(&opts.base, p)).collect(),
    };
    let mut records = Vec::new();
    let mut push = |r: BenchRecord| {
        emit(&r);
        records.push(r);
    };
    for cfg in &configs {
        let loader = Loader::new(*cfg)?;
        for &phase in &opts.phases {
            let (mean, edges) = match phase {
                Phase::Edgelist => time_edgelist(&loader, path, &opts.format, opts.repeats)?,
                Phase::CsrTotal => time_csr_total(&loader, path, &opts.format, opts.repeats)?,
                Phase::Oracle => continue,
            };
            push(BenchRecord::new(&graph, phase, cfg, mean, edges));
        }
    }
    if opts.phases.contains(&Phase::Oracle) {
        let cfg = LoadConfig {
            workers: 1,
            ..opts.base
        };
        let (mean, edges) = time_oracle(path, &opts.format, &cfg, opts.repeats)?;
        push(BenchRecord::new(&graph, Phase::Oracle, &cfg, mean, edges));
    }
    Ok(records)
}
