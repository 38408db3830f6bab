//! Multi-stage CSR construction from per-worker edge lists.
//!
//! Edges are first scattered into `partitions` partition-local CSRs, each
//! worker writing into partition `t % partitions` through atomic offset
//! cursors. Spreading the cursors over several arrays keeps contention on
//! high-degree vertices low. The partition CSRs are then merged per vertex,
//! partition 0 first, into a single global CSR.
//!
//! Adjacency order inside a vertex depends on scheduling; use
//! [`Csr::canonicalize`] before comparing two results.

use std::ops::Range;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::edgelist::{
    combine_degrees, writers_of_partition, EdgeListChunks, ExclusiveCounter, Increment, LoadConfig,
    PartitionedDegrees, SharedCounter, VertexId, WorkerEdges,
};
use crate::error::Result;

/// Compressed sparse row graph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Csr {
    /// `vertices + 1` edge indices.
    pub offsets: Vec<u64>,
    pub edge_keys: Vec<VertexId>,
    /// Present only for weighted graphs, parallel to `edge_keys`.
    pub edge_values: Option<Vec<f32>>,
}

impl Csr {
    /// A graph with `vertices` vertices and no edges.
    pub fn empty(vertices: usize, weighted: bool) -> Self {
        Csr {
            offsets: vec![0; vertices + 1],
            edge_keys: Vec::new(),
            edge_values: weighted.then(Vec::new),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn num_edges(&self) -> usize {
        self.edge_keys.len()
    }

    pub fn is_weighted(&self) -> bool {
        self.edge_values.is_some()
    }

    pub fn edge_range(&self, u: usize) -> Range<usize> {
        self.offsets[u] as usize..self.offsets[u + 1] as usize
    }

    pub fn degree(&self, u: usize) -> usize {
        (self.offsets[u + 1] - self.offsets[u]) as usize
    }

    pub fn neighbors(&self, u: usize) -> &[VertexId] {
        &self.edge_keys[self.edge_range(u)]
    }

    pub fn weights(&self, u: usize) -> Option<&[f32]> {
        let r = self.edge_range(u);
        self.edge_values.as_ref().map(|w| &w[r])
    }

    /// Checks the structural invariants, describing the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let Some((&first, _)) = self.offsets.split_first() else {
            return Err("offsets array is empty".into());
        };
        if first != 0 {
            return Err(format!("offsets[0] = {first}, expected 0"));
        }
        if let Some(u) = self.offsets.windows(2).position(|w| w[0] > w[1]) {
            return Err(format!("offsets decrease at vertex {u}"));
        }
        let last = *self.offsets.last().unwrap();
        if last != self.edge_keys.len() as u64 {
            return Err(format!(
                "offsets end at {last} but there are {} edges",
                self.edge_keys.len()
            ));
        }
        if let Some(values) = &self.edge_values {
            if values.len() != self.edge_keys.len() {
                return Err(format!(
                    "{} edge values for {} edges",
                    values.len(),
                    self.edge_keys.len()
                ));
            }
        }
        let n = self.num_vertices();
        if let Some(i) = self.edge_keys.iter().position(|&v| v as usize >= n) {
            return Err(format!(
                "edge {i} targets vertex {} outside [0, {n})",
                self.edge_keys[i]
            ));
        }
        Ok(())
    }

    /// Sorts every adjacency run by target, then by weight. Offsets are kept.
    pub fn canonicalize(mut self) -> Csr {
        let Csr {
            offsets,
            edge_keys,
            edge_values,
        } = &mut self;
        let offsets: &[u64] = offsets;
        let runs = split_runs(offsets, edge_keys, edge_values.as_deref_mut(), MERGE_GRAIN);
        runs.into_par_iter().for_each(|mut run| {
            let mut pairs: Vec<(VertexId, f32)> = Vec::new();
            for u in run.vertices.clone() {
                let lo = (offsets[u] - run.first_edge) as usize;
                let hi = (offsets[u + 1] - run.first_edge) as usize;
                match run.values.as_deref_mut() {
                    None => run.keys[lo..hi].sort_unstable(),
                    Some(values) => {
                        pairs.clear();
                        pairs.extend(
                            run.keys[lo..hi]
                                .iter()
                                .copied()
                                .zip(values[lo..hi].iter().copied()),
                        );
                        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                        for (i, (k, w)) in pairs.iter().enumerate() {
                            run.keys[lo + i] = *k;
                            values[lo + i] = *w;
                        }
                    }
                }
            }
        });
        self
    }
}

/// Free-function form of [`Csr::canonicalize`].
pub fn canonicalize(csr: Csr) -> Csr {
    csr.canonicalize()
}

const SCAN_GRAIN: usize = 1 << 16;
const MERGE_GRAIN: usize = 1 << 12;

/// Exclusive prefix sum: `out[0] = 0`, `out[k] = input[0] + .. + input[k-1]`.
///
/// Large inputs are scanned in parallel on the current rayon pool: block sums
/// first, a serial scan over the block sums, then a parallel fill.
pub fn exclusive_scan(input: &[u64]) -> Vec<u64> {
    let n = input.len();
    let mut out = vec![0u64; n];
    if n <= SCAN_GRAIN {
        let mut acc = 0;
        for (o, &x) in out.iter_mut().zip(input) {
            *o = acc;
            acc += x;
        }
        return out;
    }
    let sums: Vec<u64> = input
        .par_chunks(SCAN_GRAIN)
        .map(|c| c.iter().sum())
        .collect();
    let mut starts = Vec::with_capacity(sums.len());
    let mut acc = 0;
    for s in sums {
        starts.push(acc);
        acc += s;
    }
    out.par_chunks_mut(SCAN_GRAIN)
        .zip(input.par_chunks(SCAN_GRAIN))
        .zip(starts)
        .for_each(|((o, i), start)| {
            let mut acc = start;
            for (o, &x) in o.iter_mut().zip(i) {
                *o = acc;
                acc += x;
            }
        });
    out
}

/// A contiguous vertex range and the mutable edge slices it owns.
struct Run<'a> {
    vertices: Range<usize>,
    first_edge: u64,
    keys: &'a mut [VertexId],
    values: Option<&'a mut [f32]>,
}

/// Cuts the edge arrays into disjoint runs of roughly `grain` vertices.
fn split_runs<'a>(
    offsets: &[u64],
    mut keys: &'a mut [VertexId],
    mut values: Option<&'a mut [f32]>,
    grain: usize,
) -> Vec<Run<'a>> {
    let n = offsets.len().saturating_sub(1);
    let mut runs = Vec::with_capacity(n / grain + 1);
    let mut lo = 0;
    while lo < n {
        let hi = (lo + grain).min(n);
        let len = (offsets[hi] - offsets[lo]) as usize;
        let (k, rest) = std::mem::take(&mut keys).split_at_mut(len);
        keys = rest;
        let v = match values.take() {
            Some(vals) => {
                let (v, rest) = vals.split_at_mut(len);
                values = Some(rest);
                Some(v)
            }
            None => None,
        };
        runs.push(Run {
            vertices: lo..hi,
            first_edge: offsets[lo],
            keys: k,
            values: v,
        });
        lo = hi;
    }
    runs
}

#[inline(never)]
fn scatter_edges<C: Increment>(
    edges: &WorkerEdges,
    cursors: &[AtomicU64],
    keys: &[AtomicU32],
    values: &[AtomicU32],
    weighted: bool,
) {
    for i in 0..edges.len() {
        let u = edges.sources[i] as usize;
        let j = C::fetch_inc(&cursors[u]) as usize;
        keys[j].store(edges.targets[i], Ordering::Relaxed);
        if weighted {
            values[j].store(edges.weights[i].to_bits(), Ordering::Relaxed);
        }
    }
}

/// Per-partition CSR scratch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartitionedCsr {
    pub offsets: Vec<Vec<u64>>,
    pub edge_keys: Vec<Vec<VertexId>>,
    pub edge_values: Vec<Vec<f32>>,
}

/// Builds the per-partition CSRs (scan, scatter, offset repair).
///
/// `pdeg` must be untouched since the edge-list read; it is not modified.
pub(crate) fn build_partitions(
    pool: &ThreadPool,
    chunks: &EdgeListChunks,
    pdeg: &PartitionedDegrees,
) -> PartitionedCsr {
    let partitions = pdeg.partitions();
    let n = pdeg.vertices();
    let weighted = chunks.weighted;

    // Offsets per partition.
    let cursors: Vec<Vec<AtomicU64>> = pool.install(|| {
        pdeg.degrees
            .par_iter()
            .map(|d| exclusive_scan(d).into_iter().map(AtomicU64::new).collect())
            .collect()
    });
    let totals: Vec<usize> = cursors
        .iter()
        .map(|c| c[n].load(Ordering::Relaxed) as usize)
        .collect();
    let keys: Vec<Vec<AtomicU32>> = totals
        .iter()
        .map(|&t| (0..t).map(|_| AtomicU32::new(0)).collect())
        .collect();
    let values: Vec<Vec<AtomicU32>> = totals
        .iter()
        .map(|&t| {
            if weighted {
                (0..t).map(|_| AtomicU32::new(0)).collect()
            } else {
                Vec::new()
            }
        })
        .collect();

    // Scatter: each worker pushes its own edges into partition t % partitions.
    let workers = chunks.workers.len();
    let scatter = |t: usize| {
        let Some(edges) = chunks.workers.get(t) else {
            return;
        };
        let p = t % partitions;
        let (cur, k, w) = (&cursors[p], &keys[p][..], &values[p][..]);
        if writers_of_partition(p, workers, partitions) == 1 {
            scatter_edges::<ExclusiveCounter>(edges, cur, k, w, weighted);
        } else {
            scatter_edges::<SharedCounter>(edges, cur, k, w, weighted);
        }
    };
    if chunks.workers.len() == pool.current_num_threads() {
        pool.broadcast(|ctx| scatter(ctx.index()));
    } else {
        pool.install(|| (0..chunks.workers.len()).into_par_iter().for_each(scatter));
    }

    // Every cursor now sits at the end of its run, i.e. the next vertex's
    // start. Shift right by one to recover the offsets.
    let offsets: Vec<Vec<u64>> = pool.install(|| {
        cursors
            .into_par_iter()
            .map(|c| {
                let mut o: Vec<u64> = c.into_iter().map(AtomicU64::into_inner).collect();
                o.copy_within(0..n, 1);
                o[0] = 0;
                o
            })
            .collect()
    });
    let edge_keys = keys
        .into_iter()
        .map(|k| k.into_iter().map(AtomicU32::into_inner).collect())
        .collect();
    let edge_values = values
        .into_iter()
        .map(|w| {
            w.into_iter()
                .map(|x| f32::from_bits(x.into_inner()))
                .collect()
        })
        .collect();
    PartitionedCsr {
        offsets,
        edge_keys,
        edge_values,
    }
}

/// Merges the partition CSRs into one, vertex by vertex, partition 0 first.
/// Each partition's run for `u` is located through that partition's own
/// offsets, not the global ones.
///
/// `pdeg` is combined in place into partition 0 and supplies the global
/// offsets.
pub(crate) fn merge_partitions(
    pool: &ThreadPool,
    pcsr: &PartitionedCsr,
    pdeg: &mut PartitionedDegrees,
    weighted: bool,
) -> Csr {
    let offsets = pool.install(|| {
        combine_degrees(pdeg);
        exclusive_scan(&pdeg.degrees[0])
    });
    let n = pdeg.vertices();
    let m = offsets[n] as usize;
    let mut edge_keys = vec![0 as VertexId; m];
    let mut edge_values = weighted.then(|| vec![0f32; m]);

    let runs = split_runs(
        &offsets,
        &mut edge_keys,
        edge_values.as_deref_mut(),
        MERGE_GRAIN,
    );
    pool.install(|| {
        runs.into_par_iter().for_each(|mut run| {
            let mut j = 0usize;
            for u in run.vertices.clone() {
                for p in 0..pcsr.offsets.len() {
                    let src = pcsr.offsets[p][u] as usize..pcsr.offsets[p][u + 1] as usize;
                    let len = src.len();
                    run.keys[j..j + len].copy_from_slice(&pcsr.edge_keys[p][src.clone()]);
                    if let Some(values) = run.values.as_deref_mut() {
                        values[j..j + len].copy_from_slice(&pcsr.edge_values[p][src]);
                    }
                    j += len;
                }
            }
            debug_assert_eq!(j, run.keys.len());
        })
    });

    Csr {
        offsets,
        edge_keys,
        edge_values,
    }
}

/// Converts per-worker edge lists and their partitioned degrees into a CSR.
///
/// Runs on a fresh pool of `cfg.workers` threads. The degree partitions are
/// consumed as scratch.
pub fn convert_to_csr(
    chunks: &EdgeListChunks,
    pdeg: PartitionedDegrees,
    cfg: &LoadConfig,
) -> Result<Csr> {
    let pool = cfg.build_pool()?;
    Ok(convert_to_csr_in(&pool, chunks, pdeg))
}

pub(crate) fn convert_to_csr_in(
    pool: &ThreadPool,
    chunks: &EdgeListChunks,
    mut pdeg: PartitionedDegrees,
) -> Csr {
    let pcsr = build_partitions(pool, chunks, &pdeg);
    merge_partitions(pool, &pcsr, &mut pdeg, chunks.weighted)
}
