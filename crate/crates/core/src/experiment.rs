//! Synthetic stream generation and checkpointed accuracy, size and runtime
//! measurement.
//!
//! Streams are generated by a seeded ChaCha8 generator, so a spec plus seed
//! reproduces the identical sequence. Reports record, at every checkpoint,
//! the summary's copula and tail dependence errors against exact oracles
//! recomputed over the stream prefix, the theoretical bounds, stored tuple
//! counts, the size ratio against raw storage, and per-insert timing. All
//! report fields except the timing block are deterministic.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaSummary, PAIR_BYTES};
use crate::error::Error;
use crate::oracle::{CopulaOracle, RawPairs};
use crate::quantile::ErrorMode;
use crate::tail::{estimate_lambda_lower, estimate_lambda_upper, TailSide};

/// Families of synthetic bivariate streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairDistribution {
    /// Standard normal marginals, Pearson correlation `rho`.
    GaussianPair,
    /// Beta(10, 1) marginals coupled through a normal copula with
    /// correlation parameter `rho`.
    BetaPair,
    /// Second coordinate equals the first.
    Comonotone,
    /// Second coordinate is the negation of the first.
    Antimonotone,
    /// Independent uniforms on [0, 1].
    IndependentUniform,
}

/// Specification of one synthetic stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub distribution: PairDistribution,
    /// Correlation parameter; ignored by the degenerate distributions.
    pub rho: f64,
    pub length: u64,
    pub seed: u64,
}

/// Generate the stream for `spec`. Identical specs produce identical pairs.
pub fn generate_stream(spec: &StreamSpec) -> Result<RawPairs, Error> {
    if spec.length < 1 {
        return Err(Error::InvalidSpec("empty stream".to_string()));
    }
    if !spec.rho.is_finite() || !(-1.0..=1.0).contains(&spec.rho) {
        return Err(Error::InvalidSpec(format!(
            "rho must lie in [-1, 1], got {}",
            spec.rho
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.length as usize;
    let mut pairs = Vec::with_capacity(n);
    match spec.distribution {
        PairDistribution::Comonotone => {
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                pairs.push((z, z));
            }
        }
        PairDistribution::Antimonotone => {
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                pairs.push((z, -z));
            }
        }
        PairDistribution::IndependentUniform => {
            for _ in 0..n {
                pairs.push((rng.gen::<f64>(), rng.gen::<f64>()));
            }
        }
        PairDistribution::GaussianPair => {
            for _ in 0..n {
                pairs.push(correlated_normals(&mut rng, spec.rho));
            }
        }
        PairDistribution::BetaPair => {
            for _ in 0..n {
                let (z1, z2) = correlated_normals(&mut rng, spec.rho);
                pairs.push((beta_10_1_quantile(normal_cdf(z1)), beta_10_1_quantile(normal_cdf(z2))));
            }
        }
    }
    RawPairs::new(pairs)
}

fn correlated_normals(rng: &mut ChaCha8Rng, rho: f64) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let w: f64 = rng.sample(StandardNormal);
    (z1, rho * z1 + (1.0 - rho * rho).sqrt() * w)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Inverse CDF of Beta(10, 1): `F(x) = x^10` on [0, 1].
fn beta_10_1_quantile(u: f64) -> f64 {
    u.powf(0.1)
}

/// What to measure at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Copula evaluation points `(u1, u2)`.
    pub eval_points: Vec<(f64, f64)>,
    /// For each index `i`, the lower tail is evaluated at rank `i` and the
    /// upper tail at rank `n - i` (offset `i` from the top). Evaluations
    /// whose rank falls outside the estimator's valid range at the current
    /// `n` are skipped.
    pub tail_indices: Vec<u64>,
    pub checkpoint_every: u64,
}

/// Full record of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: StreamSpec,
    pub mode: ErrorMode,
    pub config: ExperimentConfig,
    /// FNV-1a hash of the raw pair bits, for cheap stream identity checks.
    pub stream_checksum: u64,
    pub checkpoints: Vec<CheckpointRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub n: u64,
    pub copula: Vec<CopulaEval>,
    pub tails: Vec<TailEval>,
    pub entry_count: usize,
    pub tuple_count: usize,
    pub byte_estimate: u64,
    /// `byte_estimate / (PAIR_BYTES * n)`.
    pub size_ratio: f64,
    pub timing: InsertTiming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaEval {
    pub u1: f64,
    pub u2: f64,
    pub estimate: f64,
    pub oracle: f64,
    pub abs_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEval {
    pub side: TailSide,
    /// The rank the tail function was evaluated at.
    pub rank: u64,
    pub estimate: f64,
    pub oracle: f64,
    pub abs_error: f64,
    pub bound: f64,
}

/// Per-insert wall-clock statistics over one checkpoint window. The only
/// non-deterministic part of a report.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InsertTiming {
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

/// Feed the spec's stream into a copula summary and measure at checkpoints.
pub fn run_experiment(
    spec: &StreamSpec,
    mode: ErrorMode,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, Error> {
    let data = generate_stream(spec)?;
    run_over_pairs(spec, data.pairs(), mode, config)
}

/// Run both modes over the identical stream with the same tail index.
pub fn compare_modes(
    spec: &StreamSpec,
    epsilon: f64,
    tail_index: u64,
    checkpoint_every: u64,
) -> Result<ModeComparison, Error> {
    let data = generate_stream(spec)?;
    let config = ExperimentConfig {
        eval_points: Vec::new(),
        tail_indices: vec![tail_index],
        checkpoint_every,
    };
    Ok(ModeComparison {
        biased: run_over_pairs(spec, data.pairs(), ErrorMode::biased(epsilon)?, &config)?,
        uniform: run_over_pairs(spec, data.pairs(), ErrorMode::uniform(epsilon)?, &config)?,
    })
}

/// Paired reports over the identical stream: biased bounds stay constant in
/// `n` while uniform tail bounds grow linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub biased: ExperimentReport,
    pub uniform: ExperimentReport,
}

fn run_over_pairs(
    spec: &StreamSpec,
    pairs: &[(f64, f64)],
    mode: ErrorMode,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, Error> {
    if config.checkpoint_every < 1 {
        return Err(Error::InvalidSpec(
            "checkpoint_every must be at least 1".to_string(),
        ));
    }
    let mut summary = CopulaSummary::new(mode);
    let mut checkpoints = Vec::new();
    let mut window_ns: Vec<u64> = Vec::with_capacity(config.checkpoint_every as usize);
    for (idx, &(x1, x2)) in pairs.iter().enumerate() {
        let started = Instant::now();
        summary.update(x1, x2)?;
        window_ns.push(started.elapsed().as_nanos() as u64);
        let n = (idx + 1) as u64;
        if n.is_multiple_of(config.checkpoint_every) || idx + 1 == pairs.len() {
            let timing = timing_stats(&mut window_ns);
            checkpoints.push(measure_checkpoint(&summary, &pairs[..=idx], config, timing)?);
        }
    }
    Ok(ExperimentReport {
        spec: *spec,
        mode,
        config: config.clone(),
        stream_checksum: stream_checksum(pairs),
        checkpoints,
    })
}

fn measure_checkpoint(
    summary: &CopulaSummary,
    prefix: &[(f64, f64)],
    config: &ExperimentConfig,
    timing: InsertTiming,
) -> Result<CheckpointRecord, Error> {
    let n = summary.n();
    let oracle = CopulaOracle::new(prefix)?;

    let mut copula = Vec::with_capacity(config.eval_points.len());
    for &(u1, u2) in &config.eval_points {
        let estimate = summary.query(u1, u2)?;
        let exact = oracle.copula(u1, u2)?;
        copula.push(CopulaEval {
            u1,
            u2,
            estimate: estimate.value,
            oracle: exact,
            abs_error: (estimate.value - exact).abs(),
            bound: estimate.bound,
        });
    }

    let mut tails = Vec::new();
    for &index in &config.tail_indices {
        if index >= 1 && index <= n.div_ceil(2) {
            let est = estimate_lambda_lower(summary, index)?;
            let exact = oracle.lambda_lower_at(index)?;
            tails.push(TailEval {
                side: TailSide::Lower,
                rank: index,
                estimate: est.lambda,
                oracle: exact,
                abs_error: (est.lambda - exact).abs(),
                bound: est.bound,
            });
        }
        if index < n {
            let upper_rank = n - index;
            if upper_rank > n.div_ceil(2) {
                let est = estimate_lambda_upper(summary, upper_rank)?;
                let exact = oracle.lambda_upper_at(upper_rank)?;
                tails.push(TailEval {
                    side: TailSide::Upper,
                    rank: upper_rank,
                    estimate: est.lambda,
                    oracle: exact,
                    abs_error: (est.lambda - exact).abs(),
                    bound: est.bound,
                });
            }
        }
    }

    let size = summary.size();
    Ok(CheckpointRecord {
        n,
        copula,
        tails,
        entry_count: size.entry_count,
        tuple_count: size.tuple_count,
        byte_estimate: size.byte_estimate,
        size_ratio: size.byte_estimate as f64 / (PAIR_BYTES * n) as f64,
        timing,
    })
}

fn timing_stats(window_ns: &mut Vec<u64>) -> InsertTiming {
    if window_ns.is_empty() {
        return InsertTiming::default();
    }
    window_ns.sort_unstable();
    let len = window_ns.len();
    let pick = |p: f64| window_ns[(((len as f64 * p).ceil() as usize).max(1) - 1).min(len - 1)];
    let stats = InsertTiming {
        mean_ns: window_ns.iter().sum::<u64>() as f64 / len as f64,
        p50_ns: pick(0.50),
        p99_ns: pick(0.99),
        max_ns: window_ns[len - 1],
    };
    window_ns.clear();
    stats
}

/// FNV-1a over the little-endian bits of each coordinate.
pub fn stream_checksum(pairs: &[(f64, f64)]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &(a, b) in pairs {
        for byte in a.to_le_bytes().into_iter().chain(b.to_le_bytes()) {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Serialize a report as pretty JSON.
pub fn write_report_json<W: std::io::Write>(report: &ExperimentReport, writer: W) -> Result<(), Error> {
    serde_json::to_writer_pretty(writer, report).map_err(|e| Error::Report(e.to_string()))
}

/// Flatten a report to CSV, one row per checkpoint and metric. Copula and
/// tail rows carry their evaluation point, estimate, oracle, error and
/// bound; scalar metrics carry a single value.
pub fn write_report_csv<W: std::io::Write>(report: &ExperimentReport, writer: W) -> Result<(), Error> {
    let mut out = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::Report(e.to_string());
    for cp in &report.checkpoints {
        for c in &cp.copula {
            out.serialize(CsvRow {
                n: cp.n,
                metric: "copula",
                u1: Some(c.u1),
                u2: Some(c.u2),
                side: None,
                rank: None,
                estimate: Some(c.estimate),
                oracle: Some(c.oracle),
                abs_error: Some(c.abs_error),
                bound: Some(c.bound),
                value: None,
            })
            .map_err(fail)?;
        }
        for t in &cp.tails {
            out.serialize(CsvRow {
                n: cp.n,
                metric: "lambda",
                u1: None,
                u2: None,
                side: Some(match t.side {
                    TailSide::Lower => "lower",
                    TailSide::Upper => "upper",
                }),
                rank: Some(t.rank),
                estimate: Some(t.estimate),
                oracle: Some(t.oracle),
                abs_error: Some(t.abs_error),
                bound: Some(t.bound),
                value: None,
            })
            .map_err(fail)?;
        }
        let scalars = [
            ("entry_count", cp.entry_count as f64),
            ("tuple_count", cp.tuple_count as f64),
            ("byte_estimate", cp.byte_estimate as f64),
            ("size_ratio", cp.size_ratio),
            ("insert_mean_ns", cp.timing.mean_ns),
            ("insert_p50_ns", cp.timing.p50_ns as f64),
            ("insert_p99_ns", cp.timing.p99_ns as f64),
            ("insert_max_ns", cp.timing.max_ns as f64),
        ];
        for (metric, value) in scalars {
            out.serialize(CsvRow {
                n: cp.n,
                metric,
                u1: None,
                u2: None,
                side: None,
                rank: None,
                estimate: None,
                oracle: None,
                abs_error: None,
                bound: None,
                value: Some(value),
            })
            .map_err(fail)?;
        }
    }
    out.flush().map_err(|e| Error::Report(e.to_string()))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    n: u64,
    metric: &'a str,
    u1: Option<f64>,
    u2: Option<f64>,
    side: Option<&'a str>,
    rank: Option<u64>,
    estimate: Option<f64>,
    oracle: Option<f64>,
    abs_error: Option<f64>,
    bound: Option<f64>,
    value: Option<f64>,
}
