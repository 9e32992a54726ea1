//! Index-chunked worker pool with deterministic result placement and
//! fixed-order reduction.
//!
//! Work over an index space `[0, total)` is split into contiguous chunks
//! (about four per worker), workers claim chunks from a shared counter, and
//! every result lands in its own slot by index. Reductions fold partials in
//! ascending index order, so floating-point outputs are bit-identical for
//! any worker count. An opt-out flag permits completion-order reduction for
//! measuring what determinism costs.
//!
//! ```
//! use deskmd::exec::{deterministic_reduce, parallel_map_indexed, plan_chunks, WorkerPoolConfig};
//!
//! let plan = plan_chunks(1000, 4);
//! let cfg = WorkerPoolConfig::new(4);
//! let squares = parallel_map_indexed(&plan, &cfg, |i| Ok((i as f64).powi(2))).unwrap();
//! assert_eq!(squares[999], 999.0 * 999.0);
//!
//! // fixed-order fold: same bits no matter how many workers computed it
//! let total: f64 = deterministic_reduce(squares);
//! let serial: f64 = (0..1000).map(|i| (i as f64).powi(2)).sum();
//! assert_eq!(total.to_bits(), serial.to_bits());
//! ```

use std::ops::Range;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use crate::{Error, Result};

/// A partition of `[0, total)` into contiguous ascending chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    pub total: usize,
    pub chunk_size: usize,
    pub chunks: Vec<Range<usize>>,
}

/// Worker-pool knobs: worker count and whether reductions must be
/// fixed-order.
#[derive(Debug, Clone, Copy)]
pub struct WorkerPoolConfig {
    pub workers: usize,
    pub deterministic: bool,
}

impl Default for WorkerPoolConfig {
    fn default() -> Self {
        WorkerPoolConfig { workers: 1, deterministic: true }
    }
}

impl WorkerPoolConfig {
    pub fn new(workers: usize) -> Self {
        WorkerPoolConfig { workers: workers.max(1), deterministic: true }
    }
}

/// Split `[0, total)` into chunks of `⌈total / (4·workers)⌉` (minimum 1),
/// giving roughly four chunks per worker.
pub fn plan_chunks(total: usize, workers: usize) -> ChunkPlan {
    let workers = workers.max(1);
    if total == 0 {
        return ChunkPlan { total: 0, chunk_size: 1, chunks: Vec::new() };
    }
    let chunk_size = total.div_ceil(4 * workers).max(1);
    let chunks = (0..total)
        .step_by(chunk_size)
        .map(|start| start..(start + chunk_size).min(total))
        .collect();
    ChunkPlan { total, chunk_size, chunks }
}

/// Apply a pure task to every index in the plan; `results[i] = task(i)`,
/// placed by index regardless of completion order. With one worker this is
/// a plain sequential loop with no pool setup.
pub fn parallel_map_indexed<T, F>(
    plan: &ChunkPlan,
    cfg: &WorkerPoolConfig,
    task: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    map_indexed_impl(plan, cfg, task).map(|(results, _)| results)
}

/// Like [`parallel_map_indexed`], also reporting the order in which chunks
/// finished. The order is scheduling-dependent; it exists so callers can
/// measure the cost of fixed-order reduction against completion-order.
pub fn parallel_map_indexed_with_order<T, F>(
    plan: &ChunkPlan,
    cfg: &WorkerPoolConfig,
    task: F,
) -> Result<(Vec<T>, Vec<usize>)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    map_indexed_impl(plan, cfg, task)
}

fn map_indexed_impl<T, F>(
    plan: &ChunkPlan,
    cfg: &WorkerPoolConfig,
    task: F,
) -> Result<(Vec<T>, Vec<usize>)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if plan.total == 0 {
        return Ok((Vec::new(), Vec::new()));
    }

    if cfg.workers <= 1 {
        let mut results = Vec::with_capacity(plan.total);
        for i in 0..plan.total {
            results.push(task(i).map_err(|e| wrap_task_error(i, e))?);
        }
        return Ok((results, (0..plan.chunks.len()).collect()));
    }

    let n_workers = cfg.workers.min(plan.chunks.len());
    let next_chunk = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<ChunkResult<T>>();

    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            let tx = tx.clone();
            let task = &task;
            let next_chunk = &next_chunk;
            let abort = &abort;
            let chunks = &plan.chunks;
            scope.spawn(move || {
                loop {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let c = next_chunk.fetch_add(1, Ordering::Relaxed);
                    if c >= chunks.len() {
                        break;
                    }
                    let range = chunks[c].clone();
                    let mut values = Vec::with_capacity(range.len());
                    let mut failure = None;
                    for i in range.clone() {
                        match task(i) {
                            Ok(v) => values.push(v),
                            Err(e) => {
                                failure = Some((i, e));
                                break;
                            }
                        }
                    }
                    let failed = failure.is_some();
                    if failed {
                        abort.store(true, Ordering::Relaxed);
                    }
                    let _ = tx.send(ChunkResult { chunk: c, values, failure });
                    if failed {
                        break;
                    }
                }
            });
        }
        drop(tx);

        let mut slots: Vec<Option<Vec<T>>> = (0..plan.chunks.len()).map(|_| None).collect();
        let mut completion = Vec::with_capacity(plan.chunks.len());
        let mut first_failure: Option<(usize, Error)> = None;
        for res in rx {
            if let Some((i, e)) = res.failure {
                match &first_failure {
                    Some((j, _)) if *j <= i => {}
                    _ => first_failure = Some((i, e)),
                }
            } else {
                completion.push(res.chunk);
                slots[res.chunk] = Some(res.values);
            }
        }
        if let Some((i, e)) = first_failure {
            return Err(wrap_task_error(i, e));
        }
        if slots.iter().any(|s| s.is_none()) {
            return Err(Error::TaskFailed {
                index: 0,
                message: "worker pool lost a chunk result".into(),
            });
        }
        let mut results = Vec::with_capacity(plan.total);
        for s in slots {
            results.extend(s.unwrap());
        }
        Ok((results, completion))
    })
}

struct ChunkResult<T> {
    chunk: usize,
    values: Vec<T>,
    failure: Option<(usize, Error)>,
}

fn wrap_task_error(index: usize, e: Error) -> Error {
    match e {
        already @ Error::TaskFailed { .. } => already,
        // keep the pair ids visible to callers
        overlap @ Error::OverlappingAtoms { .. } => overlap,
        other => Error::TaskFailed { index, message: other.to_string() },
    }
}

/// Something that can be combined additively in a fixed order.
pub trait Accumulator: Sized {
    fn zero() -> Self;
    fn merge(&mut self, other: &Self);
}

impl Accumulator for f64 {
    fn zero() -> Self {
        0.0
    }
    fn merge(&mut self, other: &Self) {
        *self += other;
    }
}

/// Serial left fold of partials in the order given. Callers pass partials
/// in ascending chunk (or index) order, making the combined value
/// independent of how many workers produced them.
pub fn deterministic_reduce<A, I>(partials: I) -> A
where
    A: Accumulator,
    I: IntoIterator<Item = A>,
{
    let mut acc = A::zero();
    for p in partials {
        acc.merge(&p);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_follows_stated_rule() {
        let plan = plan_chunks(10, 1);
        let ranges: Vec<_> = plan.chunks.iter().map(|r| (r.start, r.end)).collect();
        assert_eq!(ranges, vec![(0, 3), (3, 6), (6, 9), (9, 10)]);
    }

    #[test]
    fn empty_plan() {
        let plan = plan_chunks(0, 4);
        assert!(plan.chunks.is_empty());
    }

    #[test]
    fn plan_partitions_exactly() {
        let plan = plan_chunks(500, 8);
        let mut covered = vec![0u8; 500];
        let mut prev_end = 0;
        for r in &plan.chunks {
            assert_eq!(r.start, prev_end, "chunks must be contiguous and ascending");
            prev_end = r.end;
            for i in r.clone() {
                covered[i] += 1;
            }
        }
        assert_eq!(prev_end, 500);
        assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn map_squares() {
        let plan = plan_chunks(5, 4);
        let cfg = WorkerPoolConfig { workers: 4, deterministic: true };
        let out = parallel_map_indexed(&plan, &cfg, |i| Ok(i * i)).unwrap();
        assert_eq!(out, vec![0, 1, 4, 9, 16]);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let task = |i: usize| Ok((i as f64).sin() * 1e3);
        let baseline = parallel_map_indexed(&plan_chunks(97, 1), &WorkerPoolConfig::new(1), task).unwrap();
        for w in [2, 4, 8] {
            let out = parallel_map_indexed(&plan_chunks(97, w), &WorkerPoolConfig::new(w), task).unwrap();
            assert_eq!(out, baseline);
        }
    }

    #[test]
    fn failure_surfaces_first_failing_index() {
        let plan = plan_chunks(10, 4);
        let cfg = WorkerPoolConfig::new(4);
        let err = parallel_map_indexed(&plan, &cfg, |i| {
            if i == 3 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(i)
            }
        })
        .unwrap_err();
        match err {
            Error::TaskFailed { index, .. } => assert_eq!(index, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn reduce_folds_left() {
        let total: f64 = deterministic_reduce(vec![1.0, 2.0, 3.0]);
        assert_eq!(total, 6.0);
        let empty: f64 = deterministic_reduce(Vec::new());
        assert_eq!(empty, 0.0);
    }

    #[test]
    fn reduce_bit_identical_across_workers() {
        // Sum of per-index values folded in index order, regardless of how
        // chunks were scheduled.
        let task = |i: usize| Ok(1.0 / (i as f64 + 1.0));
        let mut sums = Vec::new();
        for w in [1usize, 2, 4, 8] {
            let plan = plan_chunks(1000, w);
            let vals = parallel_map_indexed(&plan, &WorkerPoolConfig::new(w), task).unwrap();
            let sum: f64 = deterministic_reduce(vals);
            sums.push(sum.to_bits());
        }
        assert!(sums.windows(2).all(|w| w[0] == w[1]));
    }
}
