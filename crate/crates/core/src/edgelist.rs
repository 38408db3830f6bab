//! Parallel single-pass read of an edge-list body into per-worker buffers.
//!
//! The body is cut into blocks of `block_size` bytes. Workers claim block
//! indices from a shared counter, realign each block to whole lines and parse
//! every edge into their own `sources`/`targets`/`weights` arrays. Out-degrees
//! are counted into `partitions` shared arrays, worker `t` adding into array
//! `t % partitions` with atomic increments. Symmetric inputs also store the
//! reverse of every edge, self-loops included.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::bytes::{block_count, block_range, DEFAULT_BLOCK_SIZE};
use crate::error::{Error, FormatErrorKind, Result};
use crate::parse::{parse_edge_line, parse_edge_line_dyn, MtxHeader, RawEdge};

/// Vertex identifier as stored in edge lists and CSR targets.
pub type VertexId = u32;

/// Default number of degree / CSR partitions.
pub const DEFAULT_PARTITIONS: usize = 4;

/// Tuning knobs for a load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadConfig {
    /// Nominal block size in bytes.
    pub block_size: usize,
    /// Number of degree and CSR partitions.
    pub partitions: usize,
    /// Number of worker threads.
    pub workers: usize,
    /// Subtract one from every vertex id after parsing.
    pub one_based: bool,
}

impl Default for LoadConfig {
    fn default() -> Self {
        LoadConfig {
            block_size: DEFAULT_BLOCK_SIZE,
            partitions: DEFAULT_PARTITIONS,
            workers: default_workers(),
            one_based: true,
        }
    }
}

impl LoadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Config("block size must be at least 1".into()));
        }
        if self.partitions == 0 {
            return Err(Error::Config("partition count must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn build_pool(&self) -> Result<ThreadPool> {
        self.validate()?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .thread_name(|i| format!("graphload-{i}"))
            .build()
            .map_err(|e| Error::Config(format!("failed to start worker pool: {e}")))
    }
}

/// Number of workers `t < workers` with `t % partitions == p`.
pub fn writers_of_partition(p: usize, workers: usize, partitions: usize) -> usize {
    workers / partitions + usize::from(p < workers % partitions)
}

/// How a worker bumps a shared counter.
///
/// Partitions written by several workers need an atomic read-modify-write.
/// A partition with a single writer is only ever read after the parallel
/// phase has joined, so a relaxed load and store is enough and avoids the
/// serializing RMW.
pub(crate) trait Increment {
    fn fetch_inc(cell: &AtomicU64) -> u64;
}

pub(crate) struct SharedCounter;
pub(crate) struct ExclusiveCounter;

impl Increment for SharedCounter {
    #[inline(always)]
    fn fetch_inc(cell: &AtomicU64) -> u64 {
        cell.fetch_add(1, Ordering::Relaxed)
    }
}

impl Increment for ExclusiveCounter {
    #[inline(always)]
    fn fetch_inc(cell: &AtomicU64) -> u64 {
        let v = cell.load(Ordering::Relaxed);
        cell.store(v + 1, Ordering::Relaxed);
        v
    }
}

/// Hardware concurrency, or 1 when it cannot be determined.
pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Edges read by one worker.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorkerEdges {
    pub sources: Vec<VertexId>,
    pub targets: Vec<VertexId>,
    /// Empty for unweighted graphs.
    pub weights: Vec<f32>,
}

impl WorkerEdges {
    fn with_capacity(capacity: usize, weighted: bool) -> Self {
        WorkerEdges {
            sources: Vec::with_capacity(capacity),
            targets: Vec::with_capacity(capacity),
            weights: if weighted {
                Vec::with_capacity(capacity)
            } else {
                Vec::new()
            },
        }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

/// Per-worker edge buffers, indexed by worker id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeListChunks {
    pub workers: Vec<WorkerEdges>,
    pub weighted: bool,
}

impl EdgeListChunks {
    pub fn counts(&self) -> Vec<usize> {
        self.workers.iter().map(WorkerEdges::len).collect()
    }

    pub fn total(&self) -> usize {
        self.workers.iter().map(WorkerEdges::len).sum()
    }

    /// All edges as `(source, target, weight)`, worker by worker. Weight is 1
    /// for unweighted graphs.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, VertexId, f32)> + '_ {
        self.workers.iter().flat_map(move |w| {
            (0..w.len()).map(move |i| {
                let weight = if self.weighted { w.weights[i] } else { 1.0 };
                (w.sources[i], w.targets[i], weight)
            })
        })
    }
}

/// Degree counts split into independent partitions, each of length
/// `vertices + 1` with a trailing zero sentinel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedDegrees {
    pub degrees: Vec<Vec<u64>>,
}

impl PartitionedDegrees {
    pub fn zeroed(partitions: usize, vertices: usize) -> Self {
        PartitionedDegrees {
            degrees: vec![vec![0; vertices + 1]; partitions],
        }
    }

    pub fn partitions(&self) -> usize {
        self.degrees.len()
    }

    pub fn vertices(&self) -> usize {
        self.degrees.first().map_or(0, |d| d.len() - 1)
    }

    pub fn total(&self) -> u64 {
        self.degrees.iter().flatten().sum()
    }

    /// Degree of `u` summed over every partition.
    pub fn degree(&self, u: usize) -> u64 {
        self.degrees.iter().map(|d| d[u]).sum()
    }
}

/// Adds every partition into partition 0, in parallel over vertices.
///
/// The other partitions are left as they were.
pub fn combine_degrees(pdeg: &mut PartitionedDegrees) {
    const GRAIN: usize = 1 << 14;
    let Some((first, rest)) = pdeg.degrees.split_first_mut() else {
        return;
    };
    if rest.is_empty() {
        return;
    }
    let rest: &[Vec<u64>] = rest;
    first
        .par_chunks_mut(GRAIN)
        .enumerate()
        .for_each(|(c, chunk)| {
            let base = c * GRAIN;
            for p in rest {
                let src = &p[base..base + chunk.len()];
                for (d, s) in chunk.iter_mut().zip(src) {
                    *d += *s;
                }
            }
        });
}

struct SharedState<'a> {
    data: &'a [u8],
    body_start: usize,
    block_size: usize,
    blocks: usize,
    next_block: AtomicUsize,
    abort: AtomicBool,
    overflow: AtomicBool,
    first_error: Mutex<Option<Error>>,
    degrees: Vec<Vec<AtomicU64>>,
    vertices: u64,
    base: u64,
    capacity: usize,
}

impl SharedState<'_> {
    fn record_error(&self, err: Error) {
        let mut slot = self.first_error.lock().unwrap();
        let replace = match (&*slot, err.offset()) {
            (None, _) => true,
            (Some(old), Some(new)) => old.offset().is_none_or(|o| new < o),
            (Some(_), None) => false,
        };
        if replace {
            *slot = Some(err);
        }
        self.abort.store(true, Ordering::Relaxed);
    }
}

#[inline(always)]
fn to_vertex(raw: u64, at: usize, base: u64, vertices: u64) -> Result<VertexId> {
    match raw.checked_sub(base) {
        Some(v) if v < vertices => Ok(v as VertexId),
        _ => Err(Error::format(
            at,
            FormatErrorKind::VertexOutOfRange { id: raw, vertices },
        )),
    }
}

/// Parses one realigned block. Returns `Ok(false)` when the worker's capacity
/// would be exceeded.
#[inline(never)]
fn read_block<const WEIGHTED: bool, const SYMMETRIC: bool, C: Increment>(
    st: &SharedState<'_>,
    degrees: &[AtomicU64],
    out: &mut WorkerEdges,
    mut b: usize,
    end: usize,
) -> Result<bool> {
    let per_edge = if SYMMETRIC { 2 } else { 1 };
    while let Some((edge, next)) = parse_edge_line::<WEIGHTED>(st.data, b, end)? {
        b = next;
        let RawEdge {
            source,
            target,
            weight,
            source_at,
            target_at,
        } = edge;
        let u = to_vertex(source, source_at, st.base, st.vertices)?;
        let v = to_vertex(target, target_at, st.base, st.vertices)?;
        if out.sources.len() + per_edge > st.capacity {
            return Ok(false);
        }
        out.sources.push(u);
        out.targets.push(v);
        if WEIGHTED {
            out.weights.push(weight);
        }
        C::fetch_inc(&degrees[u as usize]);
        if SYMMETRIC {
            out.sources.push(v);
            out.targets.push(u);
            if WEIGHTED {
                out.weights.push(weight);
            }
            C::fetch_inc(&degrees[v as usize]);
        }
    }
    Ok(true)
}

fn worker_loop<const WEIGHTED: bool, const SYMMETRIC: bool>(
    st: &SharedState<'_>,
    worker: usize,
    workers: usize,
) -> WorkerEdges {
    let partitions = st.degrees.len();
    let part = worker % partitions;
    let degrees = &st.degrees[part];
    let read_block = if writers_of_partition(part, workers, partitions) == 1 {
        read_block::<WEIGHTED, SYMMETRIC, ExclusiveCounter>
    } else {
        read_block::<WEIGHTED, SYMMETRIC, SharedCounter>
    };
    let mut out = WorkerEdges::with_capacity(st.capacity, WEIGHTED);
    let body = &st.data[st.body_start..];
    loop {
        if st.abort.load(Ordering::Relaxed) {
            break;
        }
        let k = st.next_block.fetch_add(1, Ordering::Relaxed);
        if k >= st.blocks {
            break;
        }
        let r = block_range(body, k * st.block_size, st.block_size);
        let (b, e) = (st.body_start + r.begin, st.body_start + r.end);
        match read_block(st, degrees, &mut out, b, e) {
            Ok(true) => {}
            Ok(false) => {
                st.overflow.store(true, Ordering::Relaxed);
                st.abort.store(true, Ordering::Relaxed);
                break;
            }
            Err(err) => {
                st.record_error(err);
                break;
            }
        }
    }
    out
}

/// Upper bound on edge lines a body of `len` bytes can hold: the shortest
/// line is `"1 2\n"`.
fn max_lines(len: usize) -> usize {
    len / 4 + 1
}

/// Reads the edge-list body `data[body_start..]` in parallel.
///
/// `header` supplies the vertex count, declared entry count and the
/// symmetric/weighted flags. Runs on a fresh pool of `cfg.workers` threads.
pub fn read_edgelist(
    data: &[u8],
    body_start: usize,
    header: &MtxHeader,
    cfg: &LoadConfig,
) -> Result<(EdgeListChunks, PartitionedDegrees)> {
    let pool = cfg.build_pool()?;
    read_edgelist_in(&pool, data, body_start, header, cfg)
}

pub(crate) fn read_edgelist_in(
    pool: &ThreadPool,
    data: &[u8],
    body_start: usize,
    header: &MtxHeader,
    cfg: &LoadConfig,
) -> Result<(EdgeListChunks, PartitionedDegrees)> {
    cfg.validate()?;
    let vertices = header.vertices();
    let n = usize::try_from(vertices)
        .map_err(|_| Error::Config(format!("{vertices} vertices do not fit in memory")))?;
    let body_len = data.len() - body_start;
    let per_edge = if header.symmetric { 2 } else { 1 };
    let declared = usize::try_from(header.stored_edges()).unwrap_or(usize::MAX);
    let capacity = declared.min(max_lines(body_len).saturating_mul(per_edge));

    let st = SharedState {
        data,
        body_start,
        block_size: cfg.block_size,
        blocks: block_count(body_len, cfg.block_size),
        next_block: AtomicUsize::new(0),
        abort: AtomicBool::new(false),
        overflow: AtomicBool::new(false),
        first_error: Mutex::new(None),
        degrees: (0..cfg.partitions)
            .map(|_| (0..=n).map(|_| AtomicU64::new(0)).collect())
            .collect(),
        vertices,
        base: u64::from(cfg.one_based),
        capacity,
    };

    let run: fn(&SharedState<'_>, usize, usize) -> WorkerEdges =
        match (header.weighted, header.symmetric) {
            (false, false) => worker_loop::<false, false>,
            (false, true) => worker_loop::<false, true>,
            (true, false) => worker_loop::<true, false>,
            (true, true) => worker_loop::<true, true>,
        };
    let workers = pool.broadcast(|ctx| run(&st, ctx.index(), ctx.num_threads()));
    debug_assert_eq!(workers.len(), cfg.workers);

    let SharedState {
        degrees,
        first_error,
        overflow,
        ..
    } = st;
    if let Some(err) = first_error.into_inner().unwrap() {
        return Err(err);
    }
    if overflow.into_inner() {
        // Rescan sequentially so the reported error matches a line-by-line
        // reader: the first malformed line if there is one, else the count.
        let found = count_edge_lines(data, body_start, header, cfg.one_based)?;
        return Err(Error::format(
            data.len(),
            FormatErrorKind::EntryCountMismatch {
                declared: header.entries,
                found,
            },
        ));
    }

    let chunks = EdgeListChunks {
        workers,
        weighted: header.weighted,
    };
    let found = (chunks.total() / per_edge) as u64;
    if found != header.entries {
        return Err(Error::format(
            data.len(),
            FormatErrorKind::EntryCountMismatch {
                declared: header.entries,
                found,
            },
        ));
    }

    let degrees = PartitionedDegrees {
        degrees: degrees
            .into_iter()
            .map(|p| p.into_iter().map(AtomicU64::into_inner).collect())
            .collect(),
    };
    Ok((chunks, degrees))
}

/// Counts edge lines sequentially, validating each one.
fn count_edge_lines(
    data: &[u8],
    body_start: usize,
    header: &MtxHeader,
    one_based: bool,
) -> Result<u64> {
    let base = u64::from(one_based);
    let mut b = body_start;
    let mut count = 0;
    while let Some((e, next)) = parse_edge_line_dyn(data, b, data.len(), header.weighted)? {
        to_vertex(e.source, e.source_at, base, header.vertices())?;
        to_vertex(e.target, e.target_at, base, header.vertices())?;
        count += 1;
        b = next;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(workers: usize, partitions: usize, block_size: usize) -> LoadConfig {
        LoadConfig {
            block_size,
            partitions,
            workers,
            one_based: true,
        }
    }

    fn sorted_edges(chunks: &EdgeListChunks) -> Vec<(u32, u32, u32)> {
        let mut v: Vec<_> = chunks.iter().map(|(u, v, w)| (u, v, w.to_bits())).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn reads_two_edges() {
        let body = b"1 2\n2 3\n";
        let h = MtxHeader::edgelist(3, 2, false, false);
        for workers in [1, 2, 3] {
            let (chunks, deg) = read_edgelist(body, 0, &h, &cfg(workers, 2, 4)).unwrap();
            assert_eq!(chunks.workers.len(), workers);
            assert_eq!(chunks.total(), 2);
            assert_eq!(
                sorted_edges(&chunks),
                vec![(0, 1, 1.0f32.to_bits()), (1, 2, 1.0f32.to_bits())]
            );
            let combined: Vec<u64> = (0..4).map(|u| deg.degree(u)).collect();
            assert_eq!(combined, vec![1, 1, 0, 0]);
        }
    }

    #[test]
    fn symmetric_adds_reverse() {
        let h = MtxHeader::edgelist(3, 1, true, false);
        let (chunks, deg) = read_edgelist(b"1 2\n", 0, &h, &cfg(2, 4, 256)).unwrap();
        let one = 1.0f32.to_bits();
        assert_eq!(sorted_edges(&chunks), vec![(0, 1, one), (1, 0, one)]);
        assert_eq!(
            (0..3).map(|u| deg.degree(u)).collect::<Vec<_>>(),
            vec![1, 1, 0]
        );
    }

    #[test]
    fn symmetric_self_loop_doubles() {
        let h = MtxHeader::edgelist(2, 1, true, false);
        let (chunks, deg) = read_edgelist(b"2 2\n", 0, &h, &cfg(1, 1, 256)).unwrap();
        assert_eq!(chunks.total(), 2);
        assert_eq!(deg.degree(1), 2);
    }

    #[test]
    fn weighted_edge() {
        let h = MtxHeader::edgelist(3, 1, false, true);
        let (chunks, _) = read_edgelist(b"1 2 0.5\n", 0, &h, &cfg(1, 1, 256)).unwrap();
        assert_eq!(chunks.iter().collect::<Vec<_>>(), vec![(0, 1, 0.5)]);
    }

    #[test]
    fn body_offset_respected() {
        let data = b"HEADER\n1 2\n";
        let h = MtxHeader::edgelist(2, 1, false, false);
        let (chunks, _) = read_edgelist(data, 7, &h, &cfg(2, 2, 1)).unwrap();
        assert_eq!(chunks.iter().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
    }

    #[test]
    fn zero_based_ids() {
        let h = MtxHeader::edgelist(2, 1, false, false);
        let c = LoadConfig {
            one_based: false,
            ..cfg(1, 1, 64)
        };
        let (chunks, _) = read_edgelist(b"0 1\n", 0, &h, &c).unwrap();
        assert_eq!(chunks.iter().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
    }

    #[test]
    fn out_of_range_id_reports_offset() {
        let h = MtxHeader::edgelist(3, 2, false, false);
        let err = read_edgelist(b"1 2\n2 4\n", 0, &h, &cfg(2, 1, 4)).unwrap_err();
        assert_eq!(err.offset(), Some(6));
        assert_eq!(
            err.format_kind(),
            Some(&FormatErrorKind::VertexOutOfRange { id: 4, vertices: 3 })
        );
        let err = read_edgelist(b"0 2\n1 1\n", 0, &h, &cfg(1, 1, 64)).unwrap_err();
        assert_eq!(err.offset(), Some(0));
    }

    #[test]
    fn earliest_error_wins() {
        let h = MtxHeader::edgelist(3, 4, false, false);
        let body = b"1 2\n9 1\n1 2\n1 9\n";
        for workers in [1, 2, 4] {
            let err = read_edgelist(body, 0, &h, &cfg(workers, 2, 4)).unwrap_err();
            assert_eq!(err.offset(), Some(4), "workers={workers}");
        }
    }

    #[test]
    fn entry_count_mismatch() {
        let body = b"1 2\n2 3\n";
        let more = MtxHeader::edgelist(3, 1, false, false);
        let err = read_edgelist(body, 0, &more, &cfg(2, 1, 4)).unwrap_err();
        assert_eq!(
            err.format_kind(),
            Some(&FormatErrorKind::EntryCountMismatch {
                declared: 1,
                found: 2
            })
        );
        let fewer = MtxHeader::edgelist(3, 3, false, false);
        let err = read_edgelist(body, 0, &fewer, &cfg(2, 1, 4)).unwrap_err();
        assert_eq!(
            err.format_kind(),
            Some(&FormatErrorKind::EntryCountMismatch {
                declared: 3,
                found: 2
            })
        );
        assert_eq!(err.offset(), Some(body.len() as u64));
    }

    #[test]
    fn huge_declared_count_does_not_allocate_it() {
        let h = MtxHeader::edgelist(3, u64::MAX / 4, false, false);
        let err = read_edgelist(b"1 2\n", 0, &h, &cfg(2, 1, 64)).unwrap_err();
        assert!(matches!(
            err.format_kind(),
            Some(FormatErrorKind::EntryCountMismatch { found: 1, .. })
        ));
    }

    #[test]
    fn partition_writer_counts() {
        assert_eq!(writers_of_partition(0, 4, 4), 1);
        assert_eq!(writers_of_partition(3, 2, 4), 0);
        assert_eq!(writers_of_partition(0, 8, 3), 3);
        assert_eq!(writers_of_partition(2, 8, 3), 2);
        for (w, r) in [(1, 1), (5, 2), (8, 8), (3, 7)] {
            let total: usize = (0..r).map(|p| writers_of_partition(p, w, r)).sum();
            assert_eq!(total, w);
        }
    }

    #[test]
    fn shared_and_exclusive_degrees_agree() {
        let body: Vec<u8> = (0..2000)
            .map(|i| format!("{} {}\n", i % 7 + 1, i % 5 + 1))
            .collect::<String>()
            .into_bytes();
        let h = MtxHeader::edgelist(7, 2000, true, false);
        let totals = |workers, partitions| {
            let (_, d) = read_edgelist(&body, 0, &h, &cfg(workers, partitions, 16)).unwrap();
            (0..8).map(|u| d.degree(u)).collect::<Vec<_>>()
        };
        let exclusive = totals(4, 4);
        assert_eq!(exclusive, totals(8, 2));
        assert_eq!(exclusive, totals(8, 1));
        assert_eq!(exclusive.iter().sum::<u64>(), 4000);
    }

    #[test]
    fn combine_examples() {
        let mut d = PartitionedDegrees {
            degrees: vec![vec![1, 0], vec![0, 2]],
        };
        combine_degrees(&mut d);
        assert_eq!(d.degrees[0], vec![1, 2]);
        assert_eq!(d.degrees[1], vec![0, 2]);

        let mut one = PartitionedDegrees {
            degrees: vec![vec![3, 1, 0]],
        };
        combine_degrees(&mut one);
        assert_eq!(one.degrees[0], vec![3, 1, 0]);

        let mut zeros = PartitionedDegrees::zeroed(4, 5);
        combine_degrees(&mut zeros);
        assert!(zeros.degrees.iter().flatten().all(|&x| x == 0));
    }

    #[test]
    fn combine_large_matches_serial() {
        let n = 50_000;
        let mut d = PartitionedDegrees {
            degrees: (0..3)
                .map(|p| (0..=n).map(|u| ((u * 7 + p) % 5) as u64).collect())
                .collect(),
        };
        let expected: Vec<u64> = (0..=n).map(|u| d.degree(u)).collect();
        combine_degrees(&mut d);
        assert_eq!(d.degrees[0], expected);
    }

    #[test]
    fn rejects_bad_config() {
        let h = MtxHeader::edgelist(1, 0, false, false);
        for c in [cfg(0, 1, 1), cfg(1, 0, 1), cfg(1, 1, 0)] {
            assert!(matches!(
                read_edgelist(b"", 0, &h, &c),
                Err(Error::Config(_))
            ));
        }
    }
}
