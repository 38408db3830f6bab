//! Command-line front end: `convert`, `verify`, `bench` and `generate`.

pub mod bench;
pub mod binfmt;
pub mod synth;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bytes::{map_file, DEFAULT_BLOCK_SIZE};
use crate::csr::Csr;
use crate::edgelist::{default_workers, LoadConfig, DEFAULT_PARTITIONS};
use crate::error::Error;
use crate::pipeline::{EdgeListShape, InputFormat, Loader};
use crate::reference::oracle_load;

use self::bench::{BenchOptions, Phase, SweepKind};
use self::synth::{SourceDistribution, SynthSpec};

#[derive(Debug, Parser)]
#[command(
    name = "graphload",
    version,
    about = "Parallel graph loader: text edge lists to CSR"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a text graph and write it as a binary CSR file.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        /// Sort each adjacency list so the output does not depend on scheduling.
        #[arg(long)]
        canonical: bool,
    },
    /// Compare the parallel loader against the sequential reference loader.
    Verify {
        input: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Time the edge-list and CSR phases, optionally sweeping one parameter.
    Bench {
        input: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        /// Parameter to sweep (threads, beta or rho), optionally followed by
        /// comma-separated points, e.g. `--sweep threads 1,2,4`.
        #[arg(long, num_args = 1..=2, value_names = ["KIND", "POINTS"])]
        sweep: Option<Vec<String>>,
        /// Runs per point; the mean is reported.
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Which phases to time.
        #[arg(long, value_enum, default_value_t = PhaseArg::Both)]
        phase: PhaseArg,
        /// Also time the sequential reference loader.
        #[arg(long)]
        baseline: bool,
    },
    /// Write a deterministic synthetic Matrix Market graph.
    Generate {
        output: PathBuf,
        #[arg(long)]
        vertices: u64,
        #[arg(long)]
        edges: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DistributionArg::Uniform)]
        distribution: DistributionArg,
        /// Exponent for the power-law source distribution.
        #[arg(long, default_value_t = 1.2)]
        skew: f64,
        #[arg(long)]
        symmetric: bool,
        #[arg(long)]
        weighted: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Mtx,
    El,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Edgelist,
    CsrTotal,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistributionArg {
    Uniform,
    PowerLaw,
}

#[derive(Debug, Clone, Args)]
pub struct LoadArgs {
    #[arg(long, value_enum, default_value_t = FormatArg::Mtx)]
    pub format: FormatArg,
    /// Edge lists only: store the reverse of every edge.
    #[arg(long)]
    pub symmetric: bool,
    /// Edge lists only: read a weight after each vertex pair.
    #[arg(long)]
    pub weighted: bool,
    /// Vertex ids start at 1 (default).
    #[arg(long, overrides_with = "zero_based")]
    pub one_based: bool,
    /// Vertex ids start at 0.
    #[arg(long, overrides_with = "one_based")]
    pub zero_based: bool,
    /// Worker threads.
    #[arg(long, default_value_t = default_workers())]
    pub threads: usize,
    /// Block size in bytes.
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    pub beta: usize,
    /// Degree / CSR partitions.
    #[arg(long, default_value_t = DEFAULT_PARTITIONS)]
    pub rho: usize,
    /// Edge lists only: vertex count (otherwise found by a pre-scan).
    #[arg(long)]
    pub vertices: Option<u64>,
    /// Edge lists only: edge line count (otherwise found by a pre-scan).
    #[arg(long)]
    pub edges: Option<u64>,
}

impl LoadArgs {
    pub fn config(&self) -> LoadConfig {
        LoadConfig {
            block_size: self.beta,
            partitions: self.rho,
            workers: self.threads,
            one_based: !self.zero_based,
        }
    }

    pub fn input_format(&self) -> InputFormat {
        match self.format {
            FormatArg::Mtx => InputFormat::MatrixMarket,
            FormatArg::El => InputFormat::EdgeList(EdgeListShape {
                vertices: self.vertices,
                entries: self.edges,
                symmetric: self.symmetric,
                weighted: self.weighted,
            }),
        }
    }
}

/// Line number, column and text of the line holding byte `offset`.
pub fn locate(data: &[u8], offset: usize) -> (usize, usize, String) {
    let offset = offset.min(data.len());
    let line_start = data[..offset]
        .iter()
        .rposition(|&c| c == b'\n')
        .map_or(0, |p| p + 1);
    let line_end = data[offset..]
        .iter()
        .position(|&c| c == b'\n')
        .map_or(data.len(), |p| offset + p);
    let line_no = data[..line_start].iter().filter(|&&c| c == b'\n').count() + 1;
    let text = String::from_utf8_lossy(&data[line_start..line_end.min(line_start + 120)])
        .trim_end()
        .to_string();
    (line_no, offset - line_start + 1, text)
}

/// Renders a load error, adding line context for format errors.
pub fn describe(err: &Error, input: &Path) -> String {
    let Some(offset) = err.offset() else {
        return err.to_string();
    };
    match map_file(input) {
        Ok(data) if (offset as usize) < data.len() => {
            let (line, col, text) = locate(&data, offset as usize);
            format!("{err}\n  --> {}:{line}:{col}\n   | {text}", input.display())
        }
        _ => format!("{err}\n  --> {} (end of file)", input.display()),
    }
}

fn load_context(input: &Path) -> impl Fn(Error) -> anyhow::Error + '_ {
    move |e| anyhow::anyhow!(describe(&e, input))
}

fn warn_ignored_flags(load: &LoadArgs, err: &mut impl Write) {
    if load.format == FormatArg::Mtx
        && (load.symmetric || load.weighted || load.vertices.is_some() || load.edges.is_some())
    {
        let _ = writeln!(
            err,
            "warning: --symmetric/--weighted/--vertices/--edges apply to --format el only; the Matrix Market banner decides"
        );
    }
}

/// Adjacency statistics reported by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GraphStats {
    pub degree_sum: u64,
    pub self_loops: u64,
    pub duplicate_edges: u64,
}

/// Statistics of a canonicalized CSR.
pub fn graph_stats(canonical: &Csr) -> GraphStats {
    let mut s = GraphStats::default();
    for u in 0..canonical.num_vertices() {
        let adj = canonical.neighbors(u);
        s.degree_sum += adj.len() as u64;
        s.self_loops += adj.iter().filter(|&&v| v as usize == u).count() as u64;
        s.duplicate_edges += adj.windows(2).filter(|w| w[0] == w[1]).count() as u64;
    }
    s
}

/// First vertex whose canonical adjacency differs between `a` and `b`.
pub fn first_difference(a: &Csr, b: &Csr) -> Option<usize> {
    let n = a.num_vertices().max(b.num_vertices());
    (0..n).find(|&u| {
        if u >= a.num_vertices() || u >= b.num_vertices() {
            return true;
        }
        let wa = a
            .weights(u)
            .map(|w| w.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let wb = b
            .weights(u)
            .map(|w| w.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        a.neighbors(u) != b.neighbors(u) || wa != wb
    })
}

fn parse_sweep(sweep: &[String]) -> anyhow::Result<(SweepKind, Vec<usize>)> {
    let kind: SweepKind = sweep[0].parse().map_err(anyhow::Error::msg)?;
    let points = match sweep.get(1) {
        None => kind.default_points(),
        Some(list) => list
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .with_context(|| format!("bad sweep point {s:?}"))
            })
            .collect::<anyhow::Result<_>>()?,
    };
    if points.is_empty() || points.contains(&0) {
        bail!("sweep points must be positive");
    }
    Ok((kind, points))
}

/// Runs a parsed command, writing reports to `out` and diagnostics to `err`.
/// Returns `Ok(false)` when the command ran but its check failed.
pub fn run(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> anyhow::Result<bool> {
    match cli.command {
        Command::Convert {
            input,
            output,
            load,
            canonical,
        } => {
            warn_ignored_flags(&load, err);
            let loader = Loader::new(load.config())?;
            let g = loader
                .load(&input, &load.input_format())
                .map_err(load_context(&input))?;
            let csr = if canonical {
                g.csr.canonicalize()
            } else {
                g.csr
            };
            binfmt::write_file(&output, &csr, g.header.symmetric)
                .with_context(|| format!("writing {}", output.display()))?;
            writeln!(out, "vertices: {}", csr.num_vertices())?;
            writeln!(out, "edges: {}", csr.num_edges())?;
            writeln!(out, "map_seconds: {:.6}", g.timings.map.as_secs_f64())?;
            writeln!(
                out,
                "edgelist_seconds: {:.6}",
                g.timings.edgelist.as_secs_f64()
            )?;
            writeln!(out, "csr_seconds: {:.6}", g.timings.csr.as_secs_f64())?;
            Ok(true)
        }
        Command::Verify { input, load } => {
            warn_ignored_flags(&load, err);
            let cfg = load.config();
            let format = load.input_format();
            let g = Loader::new(cfg)?
                .load(&input, &format)
                .map_err(load_context(&input))?;
            let oracle = oracle_load(&input, &format, &cfg).map_err(load_context(&input))?;
            if let Err(msg) = g.csr.validate() {
                writeln!(out, "FAIL: parallel CSR is malformed: {msg}")?;
                return Ok(false);
            }
            let parallel = g.csr.canonicalize();
            let reference = oracle.csr.canonicalize();
            let stats = graph_stats(&parallel);
            writeln!(out, "vertices: {}", parallel.num_vertices())?;
            writeln!(out, "edges: {}", parallel.num_edges())?;
            writeln!(out, "entries: {}", g.header.entries)?;
            writeln!(out, "degree_sum: {}", stats.degree_sum)?;
            writeln!(out, "self_loops: {}", stats.self_loops)?;
            writeln!(out, "duplicate_edges: {}", stats.duplicate_edges)?;
            match first_difference(&parallel, &reference) {
                None => {
                    writeln!(out, "PASS")?;
                    Ok(true)
                }
                Some(u) => {
                    writeln!(out, "FAIL: first differing vertex {u}")?;
                    Ok(false)
                }
            }
        }
        Command::Bench {
            input,
            load,
            sweep,
            repeats,
            phase,
            baseline,
        } => {
            warn_ignored_flags(&load, err);
            if repeats == 0 {
                bail!("--repeats must be at least 1");
            }
            let mut phases = match phase {
                PhaseArg::Edgelist => vec![Phase::Edgelist],
                PhaseArg::CsrTotal => vec![Phase::CsrTotal],
                PhaseArg::Both => vec![Phase::Edgelist, Phase::CsrTotal],
            };
            if baseline {
                phases.push(Phase::Oracle);
            }
            let opts = BenchOptions {
                format: load.input_format(),
                base: load.config(),
                sweep: sweep.as_deref().map(parse_sweep).transpose()?,
                repeats,
                phases,
            };
            let mut io_err = None;
            bench::run(&input, &opts, |r| {
                if let Err(e) = writeln!(out, "{}", r.to_json_line()) {
                    io_err.get_or_insert(e);
                }
            })
            .map_err(load_context(&input))?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            Ok(true)
        }
        Command::Generate {
            output,
            vertices,
            edges,
            seed,
            distribution,
            skew,
            symmetric,
            weighted,
        } => {
            if vertices == 0 {
                bail!("--vertices must be at least 1");
            }
            let spec = SynthSpec {
                vertices,
                edges,
                seed,
                distribution: match distribution {
                    DistributionArg::Uniform => SourceDistribution::Uniform,
                    DistributionArg::PowerLaw => SourceDistribution::PowerLaw { exponent: skew },
                },
                symmetric,
                weighted,
            };
            synth::write_file(&output, &spec)
                .with_context(|| format!("writing {}", output.display()))?;
            writeln!(
                out,
                "wrote {} ({vertices} vertices, {edges} entries)",
                output.display()
            )?;
            Ok(true)
        }
    }
}
