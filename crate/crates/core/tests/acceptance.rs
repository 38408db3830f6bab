//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits non-zero if any failed. Criteria run sequentially so the
//! timing checks do not compete with each other for cores.

mod common;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graphload::bytes::{block_count, block_range};
use graphload::cli::bench::{time_edgelist, time_oracle};
use graphload::cli::binfmt;
use graphload::cli::synth::{SourceDistribution, SynthSpec};
use graphload::parse::{parse_float, parse_whole_number};
use graphload::{map_file, oracle_load, InputFormat, LoadConfig, Loader};

use common::{canonical_bytes, degrees_from_edges, fixture, write_synth};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const SUITE_GRAPHS: usize = 200;
const MAX_VERTICES: u64 = 10_000;
const MAX_EDGES: u64 = 100_000;
const ROUND_TRIPS: usize = 1_000_000;
const BLOCK_BODIES: usize = 100;
/// Edge-list time at 4 workers must be at most this fraction of 1 worker.
const SCALING_RATIO: f64 = 0.6;
/// Parallel pipeline at 4 workers must beat the sequential loader by this.
const BASELINE_SPEEDUP: f64 = 2.0;
const LARGE_FILE_BYTES: u64 = 100 * 1000 * 1000;
const TIMING_REPEATS: usize = 3;

fn suite_spec(i: usize, rng: &mut ChaCha8Rng) -> SynthSpec {
    let vertices = rng.gen_range(1..=MAX_VERTICES);
    let edges = rng.gen_range(0..=MAX_EDGES);
    let distribution = if i.is_multiple_of(2) {
        SourceDistribution::Uniform
    } else {
        SourceDistribution::PowerLaw {
            exponent: rng.gen_range(1.05..2.0),
        }
    };
    SynthSpec {
        vertices,
        edges,
        seed: 1000 + i as u64,
        distribution,
        symmetric: (i / 2) % 2 == 1,
        weighted: (i / 4) % 2 == 1,
    }
}

fn random_config(rng: &mut ChaCha8Rng) -> LoadConfig {
    LoadConfig {
        block_size: [256, 4096, 262_144, rng.gen_range(1..2048)][rng.gen_range(0..4)],
        partitions: rng.gen_range(1..=8),
        workers: [1, 2, 4, 8][rng.gen_range(0..4)],
        one_based: true,
    }
}

/// Criteria 1 and 5 share the same 200 graphs.
fn oracle_suite(dir: &Path) -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut equal = 0;
    let mut conserved = 0;
    let mut eq_failure = None;
    let mut cons_failure = None;
    for i in 0..SUITE_GRAPHS {
        let spec = suite_spec(i, &mut rng);
        let cfg = random_config(&mut rng);
        let path = write_synth(dir, &format!("suite{i}.mtx"), &spec);
        let oracle = match oracle_load(&path, &InputFormat::MatrixMarket, &cfg) {
            Ok(g) => g,
            Err(e) => {
                return (
                    Err(format!("graph {i}: oracle failed: {e}")),
                    Err("skipped".into()),
                )
            }
        };
        let g = match Loader::new(cfg).and_then(|l| l.load(&path, &InputFormat::MatrixMarket)) {
            Ok(g) => g,
            Err(e) => {
                return (
                    Err(format!("graph {i}: parallel load failed: {e}")),
                    Err("skipped".into()),
                )
            }
        };

        // Conservation.
        let n = spec.vertices as usize;
        let stored = g.csr.num_edges() as u64;
        let expected_stored = if spec.symmetric {
            2 * spec.edges
        } else {
            spec.edges
        };
        let oracle_deg = degrees_from_edges(n, oracle.edges.iter().map(|e| e.source));
        let csr_deg: Vec<u64> = (0..n).map(|u| g.csr.degree(u) as u64).collect();
        let ok = g.csr.offsets[n] == stored && stored == expected_stored && csr_deg == oracle_deg;
        if ok {
            conserved += 1;
        } else if cons_failure.is_none() {
            cons_failure = Some(format!(
                "graph {i} ({spec:?}, {cfg:?}): offsets[|V|]={} stored={stored} expected={expected_stored} degrees_equal={}",
                g.csr.offsets[n],
                csr_deg == oracle_deg
            ));
        }

        if canonical_bytes(g.csr) == canonical_bytes(oracle.csr) {
            equal += 1;
        } else if eq_failure.is_none() {
            eq_failure = Some(format!(
                "graph {i} ({spec:?}, {cfg:?}) differs from the oracle"
            ));
        }
    }
    let eq = match eq_failure {
        None => Ok(format!(
            "{equal}/{SUITE_GRAPHS} graphs identical to the oracle"
        )),
        Some(f) => Err(format!(
            "{equal}/{SUITE_GRAPHS} identical; first failure: {f}"
        )),
    };
    let cons = match cons_failure {
        None => Ok(format!(
            "{conserved}/{SUITE_GRAPHS} graphs conserve edges and degrees"
        )),
        Some(f) => Err(format!(
            "{conserved}/{SUITE_GRAPHS} conserved; first failure: {f}"
        )),
    };
    (eq, cons)
}

fn configuration_independence(dir: &Path) -> Outcome {
    let spec = SynthSpec::power_law(10_000, 100_000, 42, 1.2);
    let path = write_synth(dir, "seed42.mtx", &spec);
    let data = map_file(&path).map_err(|e| e.to_string())?;
    let (header, body) = graphload::parse_mtx_header(&data).map_err(|e| e.to_string())?;
    let mut reference: Option<Vec<u8>> = None;
    let mut runs = 0;
    for workers in [1, 2, 4, 8] {
        for partitions in [1, 2, 4, 8] {
            for block_size in [256, 4096, 262_144] {
                let cfg = LoadConfig {
                    block_size,
                    partitions,
                    workers,
                    one_based: true,
                };
                let loader = Loader::new(cfg).map_err(|e| e.to_string())?;
                let (chunks, deg) = loader
                    .read_edgelist(&data, body, &header)
                    .map_err(|e| format!("{cfg:?}: {e}"))?;
                let bytes = canonical_bytes(loader.convert_to_csr(&chunks, deg));
                match &reference {
                    None => reference = Some(bytes),
                    Some(r) => {
                        ensure!(*r == bytes, "{cfg:?} differs from workers=1 rho=1 beta=256")
                    }
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} configurations byte-identical"))
}

fn parser_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut buf = String::new();
    for _ in 0..ROUND_TRIPS {
        // Mix full-range values with short ones so every digit count shows up.
        let x: u64 = if rng.gen_bool(0.5) {
            rng.gen()
        } else {
            rng.gen::<u64>() >> rng.gen_range(0..64)
        };
        buf.clear();
        write!(buf, "{x} ").unwrap();
        let digits = buf.len() - 1;
        let (v, next) =
            parse_whole_number(buf.as_bytes(), 0, buf.len()).map_err(|e| e.to_string())?;
        ensure!(v == x && next == digits, "{buf:?} parsed as ({v}, {next})");
    }

    let mut worst = 0;
    for i in 0..ROUND_TRIPS {
        let f = loop {
            let f = f32::from_bits(rng.gen());
            if f.is_finite() {
                break f;
            }
        };
        buf.clear();
        if i % 2 == 0 {
            write!(buf, "{f}").unwrap();
        } else {
            write!(buf, "{f:e}").unwrap();
        }
        let (v, next) = parse_float(buf.as_bytes(), 0, buf.len()).map_err(|e| e.to_string())?;
        ensure!(next == buf.len(), "{buf:?} stopped at {next}");
        let want: f32 = buf.parse().unwrap();
        let got = v as f32;
        let ulps = if want == got {
            0
        } else {
            (want.to_bits() as i64 - got.to_bits() as i64).unsigned_abs()
        };
        ensure!(
            ulps <= 1,
            "{buf:?}: got {got:e}, reference {want:e} ({ulps} ulps)"
        );
        worst = worst.max(ulps);
    }
    Ok(format!(
        "{ROUND_TRIPS} integers exact, {ROUND_TRIPS} floats within {worst} f32 ulp"
    ))
}

fn lines_of(data: &[u8]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, &c) in data.iter().enumerate() {
        if c == b'\n' {
            out.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < data.len() {
        out.push((start, data.len()));
    }
    out
}

fn block_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for body in 0..BLOCK_BODIES {
        let len = rng.gen_range(0..20_000);
        let data: Vec<u8> = (0..len)
            .map(|_| match rng.gen_range(0..10) {
                0 => b'\n',
                1 => b' ',
                _ => b'0' + rng.gen_range(0..10),
            })
            .collect();
        let lines = lines_of(&data);
        for beta in [1, 7, 64, 4096] {
            let mut seen = vec![0u32; lines.len()];
            for k in 0..block_count(data.len(), beta) {
                let r = block_range(&data, k * beta, beta);
                if r.is_empty() {
                    continue;
                }
                for (li, &(s, e)) in lines.iter().enumerate() {
                    if s >= r.begin && e <= r.end {
                        seen[li] += 1;
                    } else {
                        ensure!(
                            e <= r.begin || s >= r.end,
                            "body {body}, beta {beta}: line [{s},{e}) split by block [{},{})",
                            r.begin,
                            r.end
                        );
                    }
                }
            }
            ensure!(
                seen.iter().all(|&c| c == 1),
                "body {body}, beta {beta}: some line covered {:?} times",
                seen.iter().find(|&&c| c != 1)
            );
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} (body, beta) pairs cover every line exactly once"
    ))
}

fn large_file(dir: &Path) -> Result<PathBuf, String> {
    let spec = SynthSpec::uniform(2_000_000, 7_000_000, 11);
    let path = write_synth(dir, "large.mtx", &spec);
    let len = std::fs::metadata(&path).map_err(|e| e.to_string())?.len();
    ensure!(len >= LARGE_FILE_BYTES, "synthetic file only {len} bytes");
    // Pull it into the page cache.
    let data = map_file(&path).map_err(|e| e.to_string())?;
    let sum = data.iter().fold(0u64, |a, &b| a.wrapping_add(b as u64));
    std::hint::black_box(sum);
    Ok(path)
}

fn cfg_with(workers: usize) -> LoadConfig {
    LoadConfig {
        workers,
        ..LoadConfig::default()
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn strong_scaling(path: &Path) -> Outcome {
    let format = InputFormat::MatrixMarket;
    let one = Loader::new(cfg_with(1)).map_err(|e| e.to_string())?;
    let four = Loader::new(cfg_with(4)).map_err(|e| e.to_string())?;
    let (t1, e1) = time_edgelist(&one, path, &format, TIMING_REPEATS).map_err(|e| e.to_string())?;
    let (t4, e4) =
        time_edgelist(&four, path, &format, TIMING_REPEATS).map_err(|e| e.to_string())?;
    ensure!(e1 == e4, "edge counts differ: {e1} vs {e4}");
    let ratio = secs(t4) / secs(t1);
    let detail = format!(
        "edgelist 1 worker {:.3}s, 4 workers {:.3}s, ratio {ratio:.3} (limit {SCALING_RATIO}); {} hardware threads",
        secs(t1),
        secs(t4),
        graphload::edgelist::default_workers()
    );
    if ratio <= SCALING_RATIO {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sequential_baseline(path: &Path) -> Outcome {
    let format = InputFormat::MatrixMarket;
    let four = Loader::new(cfg_with(4)).map_err(|e| e.to_string())?;
    let (tp, ep) = graphload::cli::bench::time_csr_total(&four, path, &format, TIMING_REPEATS)
        .map_err(|e| e.to_string())?;
    let (to, eo) =
        time_oracle(path, &format, &cfg_with(1), TIMING_REPEATS).map_err(|e| e.to_string())?;
    ensure!(ep == eo, "edge counts differ: {ep} vs {eo}");
    let speedup = secs(to) / secs(tp);
    let detail = format!(
        "parallel (4 workers, map+parse+csr) {:.3}s, sequential {:.3}s, speedup {speedup:.2}x (need {BASELINE_SPEEDUP}x)",
        secs(tp),
        secs(to)
    );
    if speedup >= BASELINE_SPEEDUP {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn binary_golden(dir: &Path) -> Outcome {
    let out = dir.join("tiny.bin");
    let status = Command::new(env!("CARGO_BIN_EXE_graphload"))
        .arg("convert")
        .arg(fixture("tiny.mtx"))
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        status.status.success(),
        "convert failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let bytes = std::fs::read(&out).map_err(|e| e.to_string())?;
    let mut golden = Vec::with_capacity(80);
    golden.extend_from_slice(b"GVELCSR1");
    // flags, |V|, |E|, offsets [0,1,2,2], targets [1,2]
    for word in [0u64, 3, 2, 0, 1, 2, 2, 1, 2] {
        golden.extend_from_slice(&word.to_le_bytes());
    }
    ensure!(bytes.len() == 80, "file is {} bytes", bytes.len());
    ensure!(bytes == golden, "bytes differ from the golden layout");
    let back = binfmt::read_file(&out).map_err(|e| e.to_string())?;
    let oracle = oracle_load(
        fixture("tiny.mtx"),
        &InputFormat::MatrixMarket,
        &LoadConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        back.csr == oracle.csr,
        "re-read CSR {:?} != {:?}",
        back.csr,
        oracle.csr
    );
    Ok("80-byte golden file matches and re-reads to the same CSR".into())
}

fn report(
    results: &mut Vec<bool>,
    id: u32,
    name: &str,
    limit: Option<Duration>,
    f: impl FnOnce() -> Outcome,
) {
    let start = Instant::now();
    let outcome = f();
    let took = start.elapsed();
    let over = limit.is_some_and(|l| took > l);
    let (status, detail) = match (&outcome, over) {
        (Ok(d), false) => ("PASS", d.clone()),
        (Ok(d), true) => (
            "FAIL",
            format!(
                "{d}; took {:.1}s, limit {:.0}s",
                secs(took),
                secs(limit.unwrap())
            ),
        ),
        (Err(d), _) => ("FAIL", d.clone()),
    };
    println!(
        "[{status}] criterion {id}: {name} ({:.1}s) - {detail}",
        secs(took)
    );
    results.push(status == "PASS");
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut results = Vec::new();

    let start = Instant::now();
    let (eq, cons) = oracle_suite(dir.path());
    let took = start.elapsed();
    report(
        &mut results,
        1,
        "oracle equivalence",
        Some(Duration::from_secs(60)),
        || eq.map(|d| format!("{d}; suite ran {:.1}s", secs(took))),
    );
    report(
        &mut results,
        2,
        "configuration independence",
        Some(Duration::from_secs(120)),
        || configuration_independence(dir.path()),
    );
    report(
        &mut results,
        3,
        "parser round-trips",
        Some(Duration::from_secs(30)),
        parser_round_trips,
    );
    report(
        &mut results,
        4,
        "block partition",
        Some(Duration::from_secs(10)),
        block_partition,
    );
    report(&mut results, 5, "conservation", None, || cons);

    let large = large_file(dir.path());
    report(
        &mut results,
        6,
        "strong-scaling smoke",
        Some(Duration::from_secs(300)),
        || strong_scaling(large.as_ref().map_err(Clone::clone)?),
    );
    report(
        &mut results,
        7,
        "parallel vs sequential baseline",
        Some(Duration::from_secs(300)),
        || sequential_baseline(large.as_ref().map_err(Clone::clone)?),
    );
    report(&mut results, 8, "binary format golden file", None, || {
        binary_golden(dir.path())
    });

    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
