//! Acceptance suite: one test per accuracy/size criterion, each printing a
//! pass line (run with `--nocapture` to see them). Every tolerance is the
//! theoretical bound with zero allowed violations unless noted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailstream::*;

fn biased(eps: f64) -> ErrorMode {
    ErrorMode::biased(eps).unwrap()
}

fn pass(number: u32, what: &str) {
    println!("acceptance criterion {number} ({what}): PASS");
}

/// 1-based rank range a value occupies in sorted data.
fn rank_range(sorted: &[f64], v: f64) -> (f64, f64) {
    let lo = sorted.partition_point(|&s| s < v) as f64 + 1.0;
    let hi = sorted.partition_point(|&s| s <= v) as f64;
    (lo, hi)
}

const U_GRID: [f64; 15] = [
    0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 0.95, 0.99, 0.995, 0.999,
];

/// Five qualitatively different seeded streams: two Gaussian-derived, one
/// heavy-tailed, one uniform, one duplicate-heavy.
fn test_streams(n: u64) -> Vec<Vec<f64>> {
    let first = |d: PairDistribution, seed: u64| -> Vec<f64> {
        let spec = StreamSpec { distribution: d, rho: 0.8, length: n, seed };
        generate_stream(&spec).unwrap().pairs().iter().map(|p| p.0).collect()
    };
    let gauss = first(PairDistribution::GaussianPair, 101);
    let beta = first(PairDistribution::BetaPair, 102);
    let lognormal: Vec<f64> = first(PairDistribution::GaussianPair, 103)
        .into_iter()
        .map(f64::exp)
        .collect();
    let uniform = first(PairDistribution::IndependentUniform, 104);
    let duplicated: Vec<f64> = first(PairDistribution::IndependentUniform, 105)
        .into_iter()
        .map(|x| (x * 500.0).round())
        .collect();
    vec![gauss, beta, lognormal, uniform, duplicated]
}

fn assert_rank_bound(qs: &QuantileSummary, sorted: &[f64], u: f64, context: &str) {
    let eps = qs.mode().epsilon();
    let n = qs.n() as f64;
    let v = qs.query(u).unwrap();
    let (lo, hi) = rank_range(sorted, v);
    let target = (u * n).ceil();
    let tol = eps * (u * n).min((1.0 - u) * n) + 1.0;
    assert!(
        lo <= target + tol && hi >= target - tol,
        "{context}: u={u} rank range [{lo},{hi}] outside {target} +/- {tol}"
    );
}

#[test]
fn criterion_1_quantile_rank_bound() {
    let n = 100_000u64;
    for (si, stream) in test_streams(n).iter().enumerate() {
        let mut sorted = stream.clone();
        sorted.sort_by(f64::total_cmp);
        for eps in [0.05, 0.1] {
            let mut qs = QuantileSummary::new(biased(eps));
            for &x in stream {
                qs.update(x).unwrap();
            }
            assert!(qs.check_invariant(), "stream {si} eps {eps}");
            for u in U_GRID {
                assert_rank_bound(&qs, &sorted, u, &format!("stream {si} eps {eps}"));
            }
        }
    }
    pass(1, "quantile rank bound, 5 streams x 2 eps x 15 quantiles");
}

#[test]
fn criterion_2_merge_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let eps = if case % 2 == 0 { 0.1 } else { 0.05 };
        let na = rng.gen_range(1..=3000);
        let nb = rng.gen_range(1..=3000);
        // Random overlap between value ranges, sometimes heavy duplication.
        let shift = rng.gen_range(-1.0f64..1.0) * 1000.0;
        let quantize = rng.gen_bool(0.3);
        let draw = |rng: &mut ChaCha8Rng, count: usize, offset: f64| -> Vec<f64> {
            (0..count)
                .map(|_| {
                    let x = rng.gen_range(-500.0f64..500.0) + offset;
                    if quantize {
                        (x / 50.0).round() * 50.0
                    } else {
                        x
                    }
                })
                .collect()
        };
        let xs = draw(&mut rng, na, 0.0);
        let ys = draw(&mut rng, nb, shift);

        let mode = biased(eps);
        let mut a = QuantileSummary::new(mode);
        for &x in &xs {
            a.update(x).unwrap();
        }
        let mut b = QuantileSummary::new(mode);
        for &y in &ys {
            b.update(y).unwrap();
        }
        let merged = QuantileSummary::merge(&a, &b).unwrap();
        assert_eq!(merged.n(), (na + nb) as u64);
        assert!(merged.check_invariant(), "case {case}");

        let mut sorted: Vec<f64> = xs.into_iter().chain(ys).collect();
        sorted.sort_by(f64::total_cmp);
        for u in U_GRID {
            assert_rank_bound(&merged, &sorted, u, &format!("merge case {case}"));
        }
    }
    pass(2, "merge closure, 200 randomized cases");
}

#[test]
fn criterion_3_inverse_query_bound() {
    let n = 10_000u64;
    for (si, stream) in test_streams(n).iter().enumerate() {
        let mut sorted = stream.clone();
        sorted.sort_by(f64::total_cmp);
        for eps in [0.05, 0.1] {
            let mut qs = QuantileSummary::new(biased(eps));
            for &x in stream {
                qs.update(x).unwrap();
            }
            // 50 probes: 25 stream values plus 24 between-sample midpoints
            // plus one point past the maximum.
            let mut rng = ChaCha8Rng::seed_from_u64(si as u64 + 31);
            let mut probes = Vec::with_capacity(50);
            for _ in 0..25 {
                probes.push(stream[rng.gen_range(0..stream.len())]);
            }
            for _ in 0..24 {
                let k = rng.gen_range(0..sorted.len() - 1);
                probes.push(0.5 * (sorted[k] + sorted[k + 1]));
            }
            probes.push(sorted[sorted.len() - 1] + 1.0);
            for x in probes {
                let est = qs.inverse_query(x).unwrap();
                let cdf = sorted.partition_point(|&s| s <= x) as f64 / n as f64;
                let bound = 3.0 * eps * cdf.min(1.0 - cdf);
                assert!(
                    (est - cdf).abs() <= bound,
                    "stream {si} eps {eps}: x={x} est {est} cdf {cdf} bound {bound}"
                );
            }
        }
    }
    pass(3, "inverse query bound, 5 streams x 50 probes");
}

#[test]
fn criterion_4_copula_bound() {
    let n_total = 30_000u64;
    let mode = biased(0.1);
    for distribution in [PairDistribution::GaussianPair, PairDistribution::BetaPair] {
        for seed in 40..45 {
            let spec = StreamSpec { distribution, rho: 0.8, length: n_total, seed };
            let data = generate_stream(&spec).unwrap();
            let pairs = data.pairs();
            let mut cs = CopulaSummary::new(mode);
            for (idx, &(a, b)) in pairs.iter().enumerate() {
                cs.update(a, b).unwrap();
                let n = (idx + 1) as u64;
                if n % 5000 != 0 {
                    continue;
                }
                let oracle = CopulaOracle::new(&pairs[..=idx]).unwrap();
                for i in [25, 600, n / 10, n / 2, 9 * n / 10, n - 25] {
                    let u = i as f64 / n as f64;
                    let q = cs.query(u, u).unwrap();
                    let exact = oracle.copula_at_ranks(i, i).unwrap();
                    let bound = bound_values(&mode, i, n).copula_bound;
                    assert!(
                        (q.value - exact).abs() <= bound,
                        "{distribution:?} seed {seed} n={n} i={i}: \
                         est {} exact {exact} bound {bound}",
                        q.value
                    );
                }
                for (u1, u2) in [(0.7, 0.7), (0.02, 0.02)] {
                    let q = cs.query(u1, u2).unwrap();
                    let exact = oracle.copula(u1, u2).unwrap();
                    assert!(
                        (q.value - exact).abs() <= q.bound,
                        "{distribution:?} seed {seed} n={n} ({u1},{u2}): \
                         est {} exact {exact} bound {}",
                        q.value,
                        q.bound
                    );
                }
            }
        }
    }
    pass(4, "copula bound, Gaussian and Beta streams, all checkpoints");
}

#[test]
fn criterion_5_tail_bound_and_stream_length_invariance() {
    let config = ExperimentConfig {
        eval_points: vec![],
        tail_indices: vec![25],
        checkpoint_every: 5000,
    };
    let mode = biased(0.1);
    let bound = 0.1 * (8.0 + 9.0 * 0.1);
    let mut per_checkpoint_max: Vec<(u64, f64)> = Vec::new();
    for distribution in [PairDistribution::GaussianPair, PairDistribution::BetaPair] {
        for seed in 50..55 {
            let spec = StreamSpec { distribution, rho: 0.8, length: 100_000, seed };
            let report = run_experiment(&spec, mode, &config).unwrap();
            assert_eq!(report.checkpoints.len(), 20);
            for cp in &report.checkpoints {
                assert_eq!(cp.tails.len(), 2, "lower and upper recorded at n={}", cp.n);
                for t in &cp.tails {
                    assert!(
                        t.abs_error <= t.bound,
                        "{distribution:?} seed {seed} n={} {:?} rank {}: \
                         error {} > bound {}",
                        cp.n,
                        t.side,
                        t.rank,
                        t.abs_error,
                        t.bound
                    );
                    assert!((t.bound - bound).abs() < 1e-12);
                    match per_checkpoint_max.iter_mut().find(|(n, _)| *n == cp.n) {
                        Some((_, m)) => *m = m.max(t.abs_error),
                        None => per_checkpoint_max.push((cp.n, t.abs_error)),
                    }
                }
            }
        }
    }
    per_checkpoint_max.sort_by_key(|&(n, _)| n);
    for &(n, max_err) in &per_checkpoint_max {
        assert!(max_err <= bound, "n={n}: max error {max_err} > {bound}");
    }
    println!("per-checkpoint max biased error (bound {bound}):");
    for &(n, max_err) in &per_checkpoint_max {
        println!("  n={n:>6}  max|error| = {max_err:.4}");
    }

    // Uniform-mode comparison on one stream: the theoretical bound column
    // must grow strictly with n; measured uniform errors are reported only.
    let spec = StreamSpec {
        distribution: PairDistribution::GaussianPair,
        rho: 0.8,
        length: 100_000,
        seed: 50,
    };
    let cmp = compare_modes(&spec, 0.1, 25, 5000).unwrap();
    assert_eq!(cmp.biased.stream_checksum, cmp.uniform.stream_checksum);
    let uniform_lower: Vec<(u64, f64, f64)> = cmp
        .uniform
        .checkpoints
        .iter()
        .map(|cp| {
            let t = cp
                .tails
                .iter()
                .find(|t| t.side == TailSide::Lower)
                .expect("lower tail present");
            (cp.n, t.bound, t.abs_error)
        })
        .collect();
    for w in uniform_lower.windows(2) {
        assert!(
            w[1].1 > w[0].1,
            "uniform bound column not strictly increasing: {:?}",
            (w[0], w[1])
        );
    }
    assert_eq!(uniform_lower[0].1, 5.0 * 0.1 * 5000.0 / 25.0);
    println!("uniform-mode lower-tail bound and measured error by n:");
    for (n, b, e) in &uniform_lower {
        println!("  n={n:>6}  bound = {b:>8.1}  measured = {e:.4}");
    }
    pass(5, "tail bound constant to n=1e5; uniform bound strictly increasing");
}

#[test]
fn criterion_6_oracle_self_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..100 {
        let n = rng.gen_range(1..=200usize);
        // Small integer grids force plenty of ties.
        let grid = rng.gen_range(2..30i64);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                (
                    rng.gen_range(-grid..=grid) as f64,
                    rng.gen_range(-grid..=grid) as f64,
                )
            })
            .collect();
        let data = RawPairs::new(pairs).unwrap();
        for _ in 0..5 {
            let u1 = rng.gen_range(0.001..=1.0);
            let u2 = rng.gen_range(0.001..=1.0);
            let a = data.copula_via_indicators(u1, u2).unwrap();
            let b = data.copula_via_restricted_set(u1, u2).unwrap();
            assert_eq!(
                a.to_bits(),
                b.to_bits(),
                "case {case}: forms disagree at ({u1},{u2}): {a} vs {b}"
            );
        }
    }

    // Closed forms for the degenerate streams, exact equality.
    let n = 144u64;
    let comonotone =
        RawPairs::new((1..=n).map(|i| (i as f64, i as f64)).collect()).unwrap();
    let antimonotone =
        RawPairs::new((1..=n).map(|i| (i as f64, -(i as f64))).collect()).unwrap();
    for i in 1..=n {
        let t = i as f64 / n as f64;
        assert_eq!(comonotone.copula(t, t).unwrap(), i as f64 / n as f64);
        assert_eq!(
            antimonotone.copula(t, t).unwrap(),
            (2 * i).saturating_sub(n) as f64 / n as f64
        );
    }
    pass(6, "oracle forms agree exactly on 100 tied instances + closed forms");
}

#[test]
fn criterion_7_compression() {
    let n = 300_000u64;
    let spec = StreamSpec {
        distribution: PairDistribution::GaussianPair,
        rho: 0.8,
        length: n,
        seed: 70,
    };
    let data = generate_stream(&spec).unwrap();
    let mut cs = CopulaSummary::new(biased(0.1));
    for &(a, b) in data.pairs() {
        cs.update(a, b).unwrap();
    }
    assert!(cs.check_invariant());
    let size = cs.size();
    assert!(
        (size.tuple_count as u64) <= n / 5,
        "stored {} tuples for n={n}",
        size.tuple_count
    );
    println!(
        "compression: {} tuples for n={n} ({}x), size ratio {:.4}",
        size.tuple_count,
        n / size.tuple_count as u64,
        size.byte_estimate as f64 / (PAIR_BYTES * n) as f64
    );
    pass(7, "tuple count within n/5 at n=3e5");
}
