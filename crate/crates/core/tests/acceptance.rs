//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use rngstreams::generator::{companion_matrices, GeneratorState, PUBLISHED_A1P127, PUBLISHED_A2P127, M1, M2};
use rngstreams::harness::{self, distribute_seeds, plan_streams, Executor};
use rngstreams::ltm::{self, mc_cell_probabilities, pattern_likelihood, sample_proposal, ItemParams, LtmRun, PatternTable};
use rngstreams::normal::dnorm;
use rngstreams::{cli, PackageSeed, Stream, StreamFactory};

const PAPER_SEED: [u64; 6] = [
    1806547166, 3311292359, 643431772, 1162448557, 3335719306, 4161054083,
];

/// First uniforms of streams 0-3 from the independent oracle
/// (`data/gen_reference_draws.py` algorithm), full precision.
const REFERENCE_FIRST: [f64; 4] = [
    0.1663742155315906,
    0.34110639522553665,
    0.31239933357086536,
    0.1494334410135997,
];

/// Published 32 cell estimates (4 workers, 10^5 draws).
const PUBLISHED_ESTIMATES: [f64; 32] = [
    0.010591032, 0.014465339, 0.003321068, 0.007459930, 0.008497401, 0.019087239, 0.004382200,
    0.016301170, 0.004348307, 0.009767360, 0.002242468, 0.008341667, 0.005737658, 0.021343283,
    0.004900161, 0.031011491, 0.012769320, 0.028683011, 0.006585274, 0.024496295, 0.016849315,
    0.062677083, 0.014389904, 0.091068923, 0.008622165, 0.032073241, 0.007363630, 0.046601970,
    0.018840844, 0.119237442, 0.027375482, 0.310245431,
];

/// Coefficients of the published run, if someone has supplied them.
const SUPPLEMENTARY_PARAMS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/supplementary_params.txt");

type Outcome = Result<String, String>;

// Raised when a criterion's precondition does not hold on this machine.
const UNMET: &str = "precondition unmet: ";
type Criterion = (&'static str, fn() -> Outcome);

fn paper_seed() -> PackageSeed {
    PackageSeed::new(PAPER_SEED).unwrap()
}

fn demo_params() -> ItemParams {
    ItemParams::new([-3.36, -1.37, -0.28, -1.87, -2.97], -1.0).unwrap()
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn known_answer_streams() -> Outcome {
    let start = Instant::now();
    let line = cli::cmd_kat(paper_seed(), 4, 7, false);
    check(
        line == "0.1663742 0.3411064 0.3123993 0.1494334\n",
        format!("printed {line:?}"),
    )?;
    let mut f = StreamFactory::new(paper_seed());
    let first: Vec<f64> = (0..4).map(|_| f.create_stream().rand_u01()).collect();
    for (got, want) in first.iter().zip(REFERENCE_FIRST) {
        check(got.to_bits() == want.to_bits(), format!("{got:e} != {want:e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("4 streams bit-exact, {secs:.4} s"))
}

// Valid seeds from a stream other than the ones under test.
fn random_seeds(n: usize) -> Vec<GeneratorState> {
    let mut s = Stream::from_seed(0, PackageSeed::new([1, 2, 3, 4, 5, 6]).unwrap());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut draw = |m: u64| (s.rand_u01() * m as f64) as u64 % m;
        let st = GeneratorState::new([draw(M1), draw(M1), draw(M1)], [draw(M2), draw(M2), draw(M2)]);
        if st.is_valid() {
            out.push(st);
        }
    }
    out
}

fn jump_ahead() -> Outcome {
    let (a1, a2) = companion_matrices();
    let jumps: Vec<_> = (0..=20).map(|k| (a1.pow2(k), a2.pow2(k))).collect();
    let seeds = random_seeds(100);
    for seed in &seeds {
        // k = 0 is a single step
        let mut walked = seed.step();
        let mut steps = 1u64;
        for (k, (j1, j2)) in jumps.iter().enumerate() {
            while steps < 1 << k {
                walked = walked.step();
                steps += 1;
            }
            let jumped = GeneratorState::new(j1.apply(seed.x1), j2.apply(seed.x2));
            check(jumped == walked, format!("mismatch at k = {k} for {seed}"))?;
        }
    }
    Ok(format!("{} seeds x k = 0..20 exact", seeds.len()))
}

fn jump_matrix_golden() -> Outcome {
    let (a1, a2) = companion_matrices();
    let (j1, j2) = (a1.pow2(127), a2.pow2(127));
    check(*j1.entries() == PUBLISHED_A1P127, "A1^(2^127) differs")?;
    check(*j2.entries() == PUBLISHED_A2P127, "A2^(2^127) differs")?;
    Ok("18 entries exact".into())
}

fn scheme_equivalence() -> Outcome {
    for n in 1..=64 {
        let a = plan_streams(n, &mut StreamFactory::new(paper_seed())).stream_seeds();
        let b = distribute_seeds(n, paper_seed()).stream_seeds();
        check(a == b, format!("plans differ at n_workers = {n}"))?;
    }
    Ok("n_workers 1..64 identical".into())
}

fn determinism() -> Outcome {
    let params = demo_params();
    let serial = LtmRun {
        executor: Executor::Serial,
        ..LtmRun::per_worker(paper_seed(), 10_000, 4)
    };
    let reference = ltm::run_ltm_with(&serial, &params).map_err(|e| e.to_string())?;
    for i in 0..5 {
        let par = ltm::run_ltm_with(&LtmRun::per_worker(paper_seed(), 10_000, 4), &params)
            .map_err(|e| e.to_string())?;
        let same = par
            .combined
            .values
            .iter()
            .zip(&reference.combined.values)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        check(same && par == reference, format!("concurrent run {i} differs"))?;
    }
    Ok("serial == 5 concurrent runs, bitwise".into())
}

fn density_ratio(z: f64) -> f64 {
    let g = (-z * z / 8.0).exp() / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
    dnorm(z) / g
}

fn estimator_identities() -> Outcome {
    let table = PatternTable::new();
    let mut s = Stream::from_seed(0, PackageSeed::new([7, 7, 7, 7, 7, 7]).unwrap());
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut u = || s.rand_u01();
        let z = 16.0 * u() - 8.0;
        let alpha = [0; 5].map(|_| 8.0 * u() - 4.0);
        let params = ItemParams::new(alpha, 4.0 * u() - 2.0).unwrap();
        let sum: f64 = table.rows().iter().map(|y| pattern_likelihood(y, z, &params)).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    check(worst <= 1e-12, format!("sum of likelihoods off by {worst:e}"))?;

    let mut worst_rel = 0.0f64;
    let mut f = StreamFactory::new(paper_seed());
    for n in [1usize, 10, 1000, 100_000] {
        let z = sample_proposal(&mut f.create_stream(), n);
        let est = mc_cell_probabilities(&z, &table, &demo_params()).map_err(|e| e.to_string())?;
        let target = z.iter().map(|&x| density_ratio(x)).sum::<f64>() / n as f64;
        worst_rel = worst_rel.max((est.sum() - target).abs() / target);
    }
    check(worst_rel <= 1e-12, format!("estimate sum off by {worst_rel:e} relative"))?;
    Ok(format!("max |sum p - 1| = {worst:.1e}, max rel = {worst_rel:.1e}"))
}

fn ltm_reproduction() -> Outcome {
    let start = Instant::now();
    let path = Path::new(SUPPLEMENTARY_PARAMS);
    if path.exists() {
        let params = cli::read_params(path).map_err(|e| e.to_string())?;
        let est = ltm::run_ltm(paper_seed(), 100_000, 4, &params).map_err(|e| e.to_string())?;
        let worst = est
            .values
            .iter()
            .zip(PUBLISHED_ESTIMATES)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        check(worst <= 1e-6, format!("max deviation from published values {worst:e}"))?;
        return Ok(format!("published vector reproduced, max dev {worst:.1e}"));
    }

    // Replacement check when the coefficients are unavailable.
    let n_sim = 100_000;
    let est = ltm::run_ltm(paper_seed(), n_sim, 4, &demo_params()).map_err(|e| e.to_string())?;
    let mut ratios = Vec::with_capacity(n_sim);
    let mut f = StreamFactory::new(paper_seed());
    for _ in 0..4 {
        ratios.extend(sample_proposal(&mut f.create_stream(), n_sim / 4).into_iter().map(density_ratio));
    }
    let mean = ratios.iter().sum::<f64>() / n_sim as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n_sim - 1) as f64;
    let se = (var / n_sim as f64).sqrt();
    let dev = (est.sum() - 1.0).abs();
    check(dev <= 3.0 * se, format!("sum {} is {:.2} SE from 1", est.sum(), dev / se))?;

    let params = ItemParams::new([0.0; 5], 1.0).unwrap();
    let tiny = mc_cell_probabilities(&[-1.0, 0.0, 1.0], &PatternTable::new(), &params)
        .map_err(|e| e.to_string())?;
    let exact = include_str!("data/ltm_bruteforce_n3.txt").lines();
    let bits = include_str!("data/ltm_bruteforce_n3_f64.txt").lines();
    let mut worst_rel = 0.0f64;
    for ((got, e), b) in tiny.values.iter().zip(exact).zip(bits) {
        let want: f64 = e.split_whitespace().nth(1).unwrap().parse().unwrap();
        let want_bits = u64::from_str_radix(b.split_whitespace().nth(1).unwrap(), 16).unwrap();
        check(got.to_bits() == want_bits, format!("brute-force mismatch {got} ({e})"))?;
        worst_rel = worst_rel.max((got - want).abs() / want);
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "coefficients unavailable; replacement: sum within {:.2} SE of 1, brute-force golden bit-exact ({worst_rel:.1e} rel to 50-digit values)",
        dev / se
    ))
}

fn statistical_sanity() -> Outcome {
    let n = 100_000;
    let sigma = 1.0 / (12.0 * n as f64).sqrt();
    let mut f = StreamFactory::new(paper_seed());
    let draws: Vec<Vec<f64>> = (0..64).map(|_| f.create_stream().take(n).collect()).collect();
    let mut worst_mean = 0.0f64;
    for (i, d) in draws.iter().enumerate() {
        let mean = d.iter().sum::<f64>() / n as f64;
        let z = (mean - 0.5).abs() / sigma;
        worst_mean = worst_mean.max(z);
        check(z <= 4.0, format!("stream {i} mean {mean} is {z:.2} sigma off"))?;
    }
    let m = 10_000;
    let centered: Vec<(Vec<f64>, f64)> = draws
        .iter()
        .map(|d| {
            let mean = d[..m].iter().sum::<f64>() / m as f64;
            let c: Vec<f64> = d[..m].iter().map(|v| v - mean).collect();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            (c, norm)
        })
        .collect();
    let mut worst_corr = 0.0f64;
    for i in 0..64 {
        for j in i + 1..64 {
            let (a, na) = &centered[i];
            let (b, nb) = &centered[j];
            let r = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
            worst_corr = worst_corr.max(r.abs());
            check(r.abs() < 0.04, format!("streams {i},{j} correlation {r}"))?;
        }
    }
    Ok(format!("max |mean z| = {worst_mean:.2}, max |corr| = {worst_corr:.4}"))
}

fn scaling() -> Outcome {
    let params = demo_params();
    let n_streams = 8;
    let worker_counts = [1, 2, 4, 8];
    let (table, outputs) = harness::benchmark(&worker_counts, 1, |w| {
        let run = LtmRun {
            seed: paper_seed(),
            n_sim: 1_000_000,
            n_streams,
            executor: Executor::Threads(w),
        };
        ltm::run_ltm_with(&run, &params)
    });
    let outputs = outputs.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    // one worker per stream is the reference decomposition
    let reference = &outputs[worker_counts.len() - 1];
    for (w, out) in worker_counts.iter().zip(&outputs) {
        check(out == reference, format!("per-rank results differ at {w} workers"))?;
    }
    let speedup = table.speedup_at(8).unwrap();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    for line in table.to_string().lines() {
        println!("      {line}");
    }
    if cores >= 8 {
        check(speedup >= 3.0, format!("speedup at 8 workers {speedup:.3} < 3.0"))?;
        Ok(format!("speedup at 8 workers {speedup:.3}, per-rank results invariant"))
    } else {
        Ok(format!(
            "{UNMET}{cores} logical core(s), needs >= 8; speedup bound not evaluated (observed {speedup:.3}); per-rank results invariant"
        ))
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 known-answer streams", known_answer_streams),
        ("2 jump-ahead correctness", jump_ahead),
        ("3 jump-matrix golden check", jump_matrix_golden),
        ("4 scheme equivalence", scheme_equivalence),
        ("5 determinism under concurrency", determinism),
        ("6 estimator identities", estimator_identities),
        ("7 LTM output reproduction", ltm_reproduction),
        ("8 statistical sanity", statistical_sanity),
        ("9 scaling", scaling),
    ];
    let mut failed = 0;
    let mut unmet = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) if detail.starts_with(UNMET) => {
                unmet += 1;
                println!("SKIP  criterion {name} ({secs:.2} s): {detail}");
            }
            Ok(detail) => println!("PASS  criterion {name} ({secs:.2} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name} ({secs:.2} s): {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed, {unmet} not evaluable here",
        criteria.len() - failed - unmet
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
