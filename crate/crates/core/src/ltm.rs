//! Importance-sampling estimates of the 32 response-pattern probabilities
//! of a five-item, one-factor latent trait model.
//!
//! For a pattern `y` the target is `p(y) = E[p(y | Z)]` with `Z ~ N(0, 1)`
//! and `p_i(z) = 1 / (1 + exp(alpha_i + beta z))`. Draws come from a
//! `N(0, sd = 2)` proposal `g` and are weighted by `phi(z) / (g(z) n)`.

use std::str::FromStr;

use thiserror::Error;

use crate::harness::{self, Executor, HarnessError, WorkerPlan};
use crate::normal::{dnorm, qnorm_unchecked};
use crate::stream::{PackageSeed, Stream, StreamFactory};

pub const N_ITEMS: usize = 5;
pub const N_PATTERNS: usize = 1 << N_ITEMS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LtmError {
    #[error("estimate needs at least one draw")]
    EmptySample,
    #[error("malformed parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

/// All 32 binary response patterns; row `r` is `r` written as 5 bits,
/// most significant (first item) first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternTable {
    rows: [[u8; N_ITEMS]; N_PATTERNS],
}

impl PatternTable {
    pub fn new() -> Self {
        let mut rows = [[0u8; N_ITEMS]; N_PATTERNS];
        for (r, row) in rows.iter_mut().enumerate() {
            for (i, bit) in row.iter_mut().enumerate() {
                *bit = ((r >> (N_ITEMS - 1 - i)) & 1) as u8;
            }
        }
        Self { rows }
    }

    pub fn rows(&self) -> &[[u8; N_ITEMS]; N_PATTERNS] {
        &self.rows
    }
}

impl Default for PatternTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Item intercepts and the common slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ItemParams {
    pub alpha: [f64; N_ITEMS],
    pub beta: f64,
}

impl ItemParams {
    pub fn new(alpha: [f64; N_ITEMS], beta: f64) -> Result<Self, LtmError> {
        if alpha.iter().chain([&beta]).any(|v| !v.is_finite()) {
            return Err(LtmError::Params("all parameters must be finite".into()));
        }
        Ok(Self { alpha, beta })
    }
}

/// Six whitespace-separated reals: alpha_1..alpha_5, then beta.
impl FromStr for ItemParams {
    type Err = LtmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = s
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| LtmError::Params(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if v.len() != N_ITEMS + 1 {
            return Err(LtmError::Params(format!(
                "expected {} values, got {}",
                N_ITEMS + 1,
                v.len()
            )));
        }
        Self::new([v[0], v[1], v[2], v[3], v[4]], v[5])
    }
}

/// Cell-probability estimates in pattern-table order.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateVector {
    pub values: Vec<f64>,
    pub n_samples: usize,
}

impl EstimateVector {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `1 / (1 + exp(alpha + beta z))`.
#[inline]
pub fn item_prob(z: f64, alpha: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (alpha + beta * z).exp())
}

/// `prod_i p_i(z)^y_i (1 - p_i(z))^(1 - y_i)`.
pub fn pattern_likelihood(y: &[u8; N_ITEMS], z: f64, params: &ItemParams) -> f64 {
    y.iter()
        .zip(&params.alpha)
        .map(|(&yi, &a)| {
            let p = item_prob(z, a, params.beta);
            if yi == 1 {
                p
            } else {
                1.0 - p
            }
        })
        .product()
}

/// Per-item factors of every pattern's likelihood at `z`.
pub fn prob_mat(z: f64, table: &PatternTable, params: &ItemParams) -> Vec<[f64; N_ITEMS]> {
    let p: [f64; N_ITEMS] = params.alpha.map(|a| item_prob(z, a, params.beta));
    table
        .rows()
        .iter()
        .map(|row| {
            let mut out = [0.0; N_ITEMS];
            for i in 0..N_ITEMS {
                out[i] = if row[i] == 1 { p[i] } else { 1.0 - p[i] };
            }
            out
        })
        .collect()
}

/// `2 phi(z) / (phi(z / 2) n)`, i.e. `phi(z) / (g(z) n)` for the
/// `N(0, sd = 2)` density `g`.
#[inline]
pub fn importance_weight(z: f64, n: usize) -> f64 {
    2.0 * dnorm(z) / (dnorm(z / 2.0) * n as f64)
}

/// `n` draws from `N(0, sd = 2)` by inversion, one uniform per draw.
pub fn sample_proposal(stream: &mut Stream, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| 2.0 * qnorm_unchecked(stream.rand_u01()))
        .collect()
}

/// Sums weighted pattern likelihoods over the draws, in draw order.
pub fn mc_cell_probabilities(
    draws: &[f64],
    table: &PatternTable,
    params: &ItemParams,
) -> Result<EstimateVector, LtmError> {
    if draws.is_empty() {
        return Err(LtmError::EmptySample);
    }
    let n = draws.len();
    let mut prob = vec![0.0; N_PATTERNS];
    for &z in draws {
        let mat = prob_mat(z, table, params);
        let w = importance_weight(z, n);
        for (acc, row) in prob.iter_mut().zip(&mat) {
            let mut t = 1.0;
            for f in row {
                t *= f;
            }
            *acc += t * w;
        }
    }
    Ok(EstimateVector {
        values: prob,
        n_samples: n,
    })
}

/// How an LTM run maps onto streams and threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LtmRun {
    pub seed: PackageSeed,
    pub n_sim: usize,
    /// Number of streams, and of partial estimates averaged.
    pub n_streams: usize,
    pub executor: Executor,
}

impl LtmRun {
    /// One stream per worker, one thread per worker.
    pub fn per_worker(seed: PackageSeed, n_sim: usize, n_workers: usize) -> Self {
        Self {
            seed,
            n_sim,
            n_streams: n_workers,
            executor: Executor::Threads(n_workers),
        }
    }

    pub fn plan(&self) -> WorkerPlan {
        let mut factory = StreamFactory::new(self.seed);
        harness::plan_streams(self.n_streams, &mut factory).with_samples(self.n_sim)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LtmResult {
    pub partials: Vec<EstimateVector>,
    pub combined: EstimateVector,
}

/// Draws and estimates on every rank, then averages the partials.
pub fn run_ltm_with(run: &LtmRun, params: &ItemParams) -> Result<LtmResult, LtmError> {
    let plan = run.plan();
    let table = PatternTable::new();
    let partials = harness::run_parallel(&plan, run.executor, |_rank, mut stream, n| {
        let draws = sample_proposal(&mut stream, n);
        mc_cell_probabilities(&draws, &table, params)
    })?;
    let values: Vec<Vec<f64>> = partials.iter().map(|p| p.values.clone()).collect();
    let combined = EstimateVector {
        values: harness::reduce_mean(&values)?,
        n_samples: plan.total_assigned(),
    };
    Ok(LtmResult { partials, combined })
}

/// The per-worker pipeline: `n_workers` streams from `seed`, each drawing
/// `round(n_sim / n_workers)` proposals, partials averaged in rank order.
pub fn run_ltm(
    seed: PackageSeed,
    n_sim: usize,
    n_workers: usize,
    params: &ItemParams,
) -> Result<EstimateVector, LtmError> {
    run_ltm_with(&LtmRun::per_worker(seed, n_sim, n_workers), params).map(|r| r.combined)
}
