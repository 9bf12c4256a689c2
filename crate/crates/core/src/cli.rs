//! Command-line surface. Every subcommand renders to a `String` so the
//! binary stays a thin dispatcher and the output is testable.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::harness::{self, Executor, HarnessError};
use crate::ltm::{self, ItemParams, LtmError, LtmRun};
use crate::stream::{normalize_signed_seed, PackageSeed, SeedError, StreamFactory};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    Ltm(#[from] LtmError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Short tag used as the machine-parsable prefix on stderr.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Seed(_) => "seed",
            CliError::Ltm(LtmError::Params(_)) => "params",
            CliError::Ltm(_) | CliError::Harness(_) => "run",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rngstreams", version, about = "MRG32k3a parallel random number streams")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Package seed: six values, generator-1 triple then generator-2 triple.
    #[arg(long, global = true, num_args = 6, value_names = ["S1", "S2", "S3", "S4", "S5", "S6"], allow_negative_numbers = true)]
    pub seed: Option<Vec<i64>>,
    /// Read --seed as signed 32-bit values (negatives get 2^32 added).
    #[arg(long, global = true)]
    pub signed: bool,
    /// Significant digits for uniform output.
    #[arg(long, global = true, default_value_t = 7, value_parser = clap::value_parser!(u8).range(1..=17))]
    pub precision: u8,
    /// One value per line.
    #[arg(long, global = true)]
    pub machine: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the first uniform of each of the first N streams.
    Kat {
        #[arg(long, default_value_t = 4)]
        streams: u64,
    },
    /// Print the seed advanced by N whole streams.
    Advance {
        #[arg(long, default_value_t = 1)]
        streams: u64,
    },
    /// Convert six signed 32-bit seed values to their unsigned form.
    Normalize {
        #[arg(num_args = 6, value_names = ["V1", "V2", "V3", "V4", "V5", "V6"], allow_negative_numbers = true, required = true)]
        values: Vec<i32>,
    },
    /// Monte Carlo estimates of the 32 latent trait model cell probabilities.
    Ltm {
        /// File with alpha_1..alpha_5 and beta.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        nsim: usize,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        workers: u64,
        /// Fix the number of streams independently of --workers.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        streams: Option<u64>,
    },
    /// Time the LTM job at several worker counts.
    Bench {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        nsim: usize,
        /// Comma-separated worker counts; must include 1.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8])]
        workers: Vec<usize>,
        /// Streams used at every worker count (defaults to the largest count).
        #[arg(long)]
        streams: Option<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
}

/// Formats like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros dropped, exponent form outside `1e-4 <= |x| < 10^digits`.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.clamp(1, 17);
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn join(values: &[String], machine: bool) -> String {
    let mut out = values.join(if machine { "\n" } else { " " });
    out.push('\n');
    out
}

/// Resolves `--seed`/`--signed` into a validated seed; the default seed
/// when none is given.
pub fn resolve_seed(raw: Option<&[i64]>, signed: bool) -> Result<PackageSeed, CliError> {
    let Some(raw) = raw else {
        return Ok(PackageSeed::default());
    };
    let raw: [i64; 6] = raw
        .try_into()
        .map_err(|_| CliError::Usage(format!("--seed takes 6 values, got {}", raw.len())))?;
    if signed {
        let mut v = [0i32; 6];
        for (o, &r) in v.iter_mut().zip(&raw) {
            *o = i32::try_from(r)
                .map_err(|_| CliError::Usage(format!("{r} is not a signed 32-bit value")))?;
        }
        Ok(PackageSeed::new(normalize_signed_seed(v))?)
    } else {
        let mut v = [0u64; 6];
        for (o, &r) in v.iter_mut().zip(&raw) {
            *o = u64::try_from(r).map_err(|_| {
                CliError::Usage(format!("negative seed value {r} (use --signed)"))
            })?;
        }
        Ok(PackageSeed::new(v)?)
    }
}

pub fn cmd_kat(seed: PackageSeed, n_streams: u64, precision: usize, machine: bool) -> String {
    let mut factory = StreamFactory::new(seed);
    let values: Vec<String> = (0..n_streams)
        .map(|_| format_significant(factory.create_stream().rand_u01(), precision))
        .collect();
    join(&values, machine)
}

pub fn cmd_advance(seed: PackageSeed, k: u64) -> String {
    let mut factory = StreamFactory::new(seed);
    for _ in 0..k {
        factory.create_stream();
    }
    format!("{}\n", factory.next_seed())
}

pub fn cmd_normalize(values: [i32; 6]) -> String {
    let v = normalize_signed_seed(values);
    format!("{} {} {} {} {} {}\n", v[0], v[1], v[2], v[3], v[4], v[5])
}

/// Nine decimals, five per line (one per line with `machine`).
pub fn format_estimates(values: &[f64], machine: bool) -> String {
    let mut out = String::from("Integration results:\n");
    let cells: Vec<String> = values.iter().map(|v| format!("{v:.9}")).collect();
    if machine {
        for c in cells {
            out.push_str(&c);
            out.push('\n');
        }
    } else {
        for line in cells.chunks(5) {
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn read_params(path: &Path) -> Result<ItemParams, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text.parse()?)
}

pub fn cmd_ltm(
    seed: PackageSeed,
    params: &ItemParams,
    n_sim: usize,
    workers: usize,
    streams: Option<usize>,
    machine: bool,
) -> Result<String, CliError> {
    let run = LtmRun {
        seed,
        n_sim,
        n_streams: streams.unwrap_or(workers),
        executor: Executor::Threads(workers),
    };
    let result = ltm::run_ltm_with(&run, params)?;
    Ok(format_estimates(&result.combined.values, machine))
}

pub fn cmd_bench(
    seed: PackageSeed,
    params: &ItemParams,
    n_sim: usize,
    workers: &[usize],
    streams: Option<usize>,
    repeats: usize,
) -> Result<String, CliError> {
    if !workers.contains(&1) {
        return Err(CliError::Usage("--workers must include 1".into()));
    }
    if workers.contains(&0) {
        return Err(CliError::Usage("worker counts must be positive".into()));
    }
    let n_streams = streams.unwrap_or_else(|| workers.iter().copied().max().unwrap_or(1));
    let (table, outputs) = harness::benchmark(workers, repeats, |w| {
        let run = LtmRun {
            seed,
            n_sim,
            n_streams,
            executor: Executor::Threads(w),
        };
        ltm::run_ltm_with(&run, params)
    });
    let outputs = outputs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let consistent = outputs.windows(2).all(|w| w[0].partials == w[1].partials);
    Ok(format!(
        "{table}streams: {n_streams}, per-rank results identical across worker counts: {}\n",
        if consistent { "yes" } else { "NO" }
    ))
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    let g = &cli.global;
    let seed = || resolve_seed(g.seed.as_deref(), g.signed);
    match &cli.command {
        Command::Kat { streams } => Ok(cmd_kat(seed()?, *streams, g.precision as usize, g.machine)),
        Command::Advance { streams } => Ok(cmd_advance(seed()?, *streams)),
        Command::Normalize { values } => {
            let v: [i32; 6] = values
                .as_slice()
                .try_into()
                .map_err(|_| CliError::Usage("normalize takes 6 values".into()))?;
            Ok(cmd_normalize(v))
        }
        Command::Ltm {
            params,
            nsim,
            workers,
            streams,
        } => cmd_ltm(
            seed()?,
            &read_params(params)?,
            *nsim,
            *workers as usize,
            streams.map(|s| s as usize),
            g.machine,
        ),
        Command::Bench {
            params,
            nsim,
            workers,
            streams,
            repeats,
        } => cmd_bench(seed()?, &read_params(params)?, *nsim, workers, *streams, *repeats),
    }
}
