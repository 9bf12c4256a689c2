//! Deterministic parallel execution over random number streams.
//!
//! A [`WorkerPlan`] fixes, before anything runs, which stream and how many
//! samples each rank gets. Two equivalent ways to build one are provided:
//! every worker building the same array of streams from a shared factory
//! ([`plan_streams`]), and a leader computing each rank's seed by chained
//! advancement and handing them out ([`distribute_seeds`]).
//!
//! [`run_parallel`] executes one job per rank. Ranks are mapped onto a
//! fixed number of threads, each rank owns its stream exclusively, and
//! results land in rank-indexed slots, so the output does not depend on
//! scheduling or on the number of threads. The usual paper-style setup is
//! one rank per thread; running S ranks on P < S threads gives results
//! that depend only on S.

use std::fmt;
use std::thread;
use std::time::Instant;

use thiserror::Error;

use crate::generator::GeneratorState;
use crate::stream::{advance_seed, PackageSeed, Stream, StreamFactory};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HarnessError {
    #[error("job for rank {rank} failed: {cause}")]
    JobFailure { rank: usize, cause: String },
    #[error("cannot reduce an empty list of partial results")]
    Empty,
    #[error("partial result for rank {rank} has length {found}, expected {expected}")]
    LengthMismatch {
        rank: usize,
        expected: usize,
        found: usize,
    },
}

/// Stream and sample assignment for every rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerPlan {
    streams: Vec<Stream>,
    samples_per_worker: Vec<usize>,
    total_requested: usize,
}

impl WorkerPlan {
    pub fn n_workers(&self) -> usize {
        self.streams.len()
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    pub fn stream_seeds(&self) -> Vec<GeneratorState> {
        self.streams.iter().map(Stream::initial_state).collect()
    }

    pub fn samples_per_worker(&self) -> &[usize] {
        &self.samples_per_worker
    }

    pub fn total_requested(&self) -> usize {
        self.total_requested
    }

    /// Samples actually drawn, which can differ from the request because
    /// every rank gets the same rounded share.
    pub fn total_assigned(&self) -> usize {
        self.samples_per_worker.iter().sum()
    }

    /// Assigns `round(n_sim / n_workers)` samples to every rank.
    pub fn with_samples(mut self, n_sim: usize) -> Self {
        self.samples_per_worker = partition_samples(n_sim, self.n_workers());
        self.total_requested = n_sim;
        self
    }

    fn from_streams(streams: Vec<Stream>) -> Self {
        let n = streams.len();
        Self {
            streams,
            samples_per_worker: vec![0; n],
            total_requested: 0,
        }
    }
}

/// Creates `n_workers` streams from `factory` in order; rank `r` gets the
/// `r`-th stream created.
///
/// Panics if `n_workers` is zero.
pub fn plan_streams(n_workers: usize, factory: &mut StreamFactory) -> WorkerPlan {
    assert!(n_workers >= 1, "a plan needs at least one worker");
    WorkerPlan::from_streams((0..n_workers).map(|_| factory.create_stream()).collect())
}

/// Leader-side seed distribution: rank 0 keeps `package_seed`, and each
/// further rank receives its predecessor's seed advanced by one stream.
/// The returned plan holds the seed payloads each rank would receive.
///
/// Panics if `n_workers` is zero.
pub fn distribute_seeds(n_workers: usize, package_seed: PackageSeed) -> WorkerPlan {
    assert!(n_workers >= 1, "a plan needs at least one worker");
    let mut payloads: Vec<[u64; 6]> = Vec::with_capacity(n_workers);
    let mut seed = package_seed.state();
    payloads.push(seed.to_array());
    for _ in 1..n_workers {
        seed = advance_seed(seed);
        payloads.push(seed.to_array());
    }
    // Each worker seeds its own generator from the received payload.
    let streams = payloads
        .into_iter()
        .enumerate()
        .map(|(rank, payload)| {
            let seed = PackageSeed::new(payload).expect("advanced seeds stay valid");
            Stream::from_seed(rank as u64, seed)
        })
        .collect();
    WorkerPlan::from_streams(streams)
}

/// Every worker gets `round(n_sim / n_workers)` samples, ties to even.
///
/// Panics if `n_workers` is zero.
pub fn partition_samples(n_sim: usize, n_workers: usize) -> Vec<usize> {
    assert!(n_workers >= 1, "a partition needs at least one worker");
    let q = n_sim / n_workers;
    let rem = n_sim % n_workers;
    let share = match (2 * rem).cmp(&n_workers) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    };
    vec![share; n_workers]
}

/// How ranks are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Executor {
    /// All ranks in order on the calling thread.
    Serial,
    /// Ranks spread over this many scoped threads (rank `r` runs on thread
    /// `r % threads`).
    Threads(usize),
}

impl Executor {
    pub fn threads(&self) -> usize {
        match *self {
            Executor::Serial => 1,
            Executor::Threads(n) => n.max(1),
        }
    }
}

/// Runs `job(rank, stream, samples)` for every rank of `plan` and returns
/// the results in rank order.
///
/// Each job receives its own copy of its rank's stream. If any job fails
/// or panics, the first failing rank (in rank order) is reported and all
/// results are discarded.
pub fn run_parallel<T, E, F>(
    plan: &WorkerPlan,
    executor: Executor,
    job: F,
) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    E: fmt::Display,
    F: Fn(usize, Stream, usize) -> Result<T, E> + Sync,
{
    let n = plan.n_workers();
    let run_rank = |rank: usize| -> Result<T, HarnessError> {
        job(
            rank,
            plan.streams[rank].clone(),
            plan.samples_per_worker[rank],
        )
        .map_err(|e| HarnessError::JobFailure {
            rank,
            cause: e.to_string(),
        })
    };

    let threads = executor.threads().min(n);
    let mut slots: Vec<Option<Result<T, HarnessError>>> = (0..n).map(|_| None).collect();

    if executor == Executor::Serial {
        for (rank, slot) in slots.iter_mut().enumerate() {
            *slot = Some(run_rank(rank));
        }
    } else {
        let run_rank = &run_rank;
        let per_thread: Vec<Vec<(usize, Result<T, HarnessError>)>> = thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    scope.spawn(move || {
                        (t..n)
                            .step_by(threads)
                            .map(|rank| (rank, run_rank(rank)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .enumerate()
                .map(|(t, h)| {
                    h.join().unwrap_or_else(|_| {
                        (t..n)
                            .step_by(threads)
                            .map(|rank| {
                                (
                                    rank,
                                    Err(HarnessError::JobFailure {
                                        rank,
                                        cause: "worker thread panicked".into(),
                                    }),
                                )
                            })
                            .collect()
                    })
                })
                .collect()
        });
        for (rank, result) in per_thread.into_iter().flatten() {
            slots[rank] = Some(result);
        }
    }

    slots
        .into_iter()
        .map(|slot| slot.expect("every rank ran"))
        .collect()
}

/// Componentwise mean of the partial results, summed in rank order.
pub fn reduce_mean(partials: &[Vec<f64>]) -> Result<Vec<f64>, HarnessError> {
    let first = partials.first().ok_or(HarnessError::Empty)?;
    let len = first.len();
    let mut sum = vec![0.0; len];
    for (rank, p) in partials.iter().enumerate() {
        if p.len() != len {
            return Err(HarnessError::LengthMismatch {
                rank,
                expected: len,
                found: p.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    let n = partials.len() as f64;
    for s in &mut sum {
        *s /= n;
    }
    Ok(sum)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub workers: usize,
    pub seconds: f64,
    pub speedup: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn speedup_at(&self, workers: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.workers == workers)
            .map(|r| r.speedup)
    }
}

impl fmt::Display for BenchTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>7}  {:>10}  {:>7}", "workers", "seconds", "speedup")?;
        for r in &self.rows {
            writeln!(f, "{:>7}  {:>10.3}  {:>7.3}", r.workers, r.seconds, r.speedup)?;
        }
        Ok(())
    }
}

/// Times `job(workers)` for each worker count, averaging over `repeats`
/// runs, and reports speedup relative to the single-worker time.
///
/// Returns the table together with each worker count's last job output.
///
/// Panics if `worker_counts` does not contain 1.
pub fn benchmark<T, F>(worker_counts: &[usize], repeats: usize, mut job: F) -> (BenchTable, Vec<T>)
where
    F: FnMut(usize) -> T,
{
    assert!(
        worker_counts.contains(&1),
        "benchmark worker counts must include 1"
    );
    let repeats = repeats.max(1);
    let mut timings = Vec::with_capacity(worker_counts.len());
    let mut outputs = Vec::with_capacity(worker_counts.len());
    for &w in worker_counts {
        let mut last = None;
        let start = Instant::now();
        for _ in 0..repeats {
            last = Some(job(w));
        }
        timings.push((w, start.elapsed().as_secs_f64() / repeats as f64));
        outputs.push(last.expect("at least one repeat"));
    }
    let base = timings
        .iter()
        .find(|(w, _)| *w == 1)
        .map(|&(_, s)| s)
        .expect("checked above");
    let rows = timings
        .into_iter()
        .map(|(workers, seconds)| BenchRow {
            workers,
            seconds,
            speedup: if workers == 1 { 1.0 } else { base / seconds },
        })
        .collect();
    (BenchTable { rows }, outputs)
}
