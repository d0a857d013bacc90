//! The bivariate copula summary.
//!
//! The structure is a first-marginal quantile summary in which every tuple
//! owns a *subsummary*: a quantile summary over the second-marginal values
//! of exactly the pairs that tuple's `g` accounts for. Inserting a pair adds
//! a first-marginal tuple with a fresh one-element subsummary; combining
//! first-marginal tuples merges their subsummaries and compresses the
//! result. A copula query locates the `u1` quantile in the first marginal,
//! takes the prefix count of pairs at or below it, and inverse-queries the
//! merged prefix subsummaries at the second marginal's `u2` quantile.
//!
//! With biased-mode summaries throughout, the diagonal query error is at
//! most `eps * min(i, n-i) * (8 + 9*eps) / n`, which keeps tail dependence
//! estimates accurate no matter how long the stream grows.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::quantile::{self, ErrorMode, InvariantKind, QuantileSummary, SummaryTuple};
use crate::tail::copula_bound_at;

/// Bytes charged per stored tuple in size estimates: one f64 value plus two
/// u64 rank fields.
pub const TUPLE_BYTES: u64 = 24;

/// Bytes per raw stream element (a pair of f64), the denominator of size
/// ratios.
pub const PAIR_BYTES: u64 = 16;

/// One first-marginal tuple together with its second-marginal subsummary.
/// `sub.n == tuple.g` always: every pair counted by the tuple lives in
/// exactly one subsummary.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaEntry {
    pub tuple: SummaryTuple,
    pub sub: QuantileSummary,
}

/// Result of a copula query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaQueryResult {
    /// The copula estimate, in [0, 1].
    pub value: f64,
    /// Number of stream pairs credited to entries up to `entry_index`.
    pub prefix_count: u64,
    /// Index of the entry whose value answered the first-marginal query.
    pub entry_index: usize,
    /// Theoretical error bound of `value` against the exact empirical copula.
    pub bound: f64,
}

/// Entry count, stored tuple count and a deterministic byte estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarySize {
    pub entry_count: usize,
    pub tuple_count: usize,
    pub byte_estimate: u64,
}

/// Streaming summary of a bivariate distribution supporting empirical copula
/// queries with bounded error.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaSummary {
    entries: Vec<CopulaEntry>,
    n: u64,
    mode: ErrorMode,
}

impl CopulaSummary {
    pub fn new(mode: ErrorMode) -> Self {
        CopulaSummary {
            entries: Vec::new(),
            n: 0,
            mode,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mode(&self) -> ErrorMode {
        self.mode
    }

    pub fn entries(&self) -> &[CopulaEntry] {
        &self.entries
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    /// Insert one pair. The first coordinate is placed by the quantile
    /// summary insertion rule; a one-element subsummary holding the second
    /// coordinate is inserted at the matching position.
    pub fn insert(&mut self, x1: f64, x2: f64) -> Result<(), Error> {
        if !x1.is_finite() {
            return Err(Error::NonFiniteValue(x1));
        }
        if !x2.is_finite() {
            return Err(Error::NonFiniteValue(x2));
        }
        let pos = self.entries.partition_point(|e| e.tuple.value <= x1);
        let delta = if pos == 0 || pos == self.entries.len() {
            0
        } else {
            let next = &self.entries[pos].tuple;
            next.g + next.delta - 1
        };
        let sub = QuantileSummary::singleton(self.mode, x2)?;
        self.entries.insert(
            pos,
            CopulaEntry {
                tuple: SummaryTuple { value: x1, g: 1, delta },
                sub,
            },
        );
        self.n += 1;
        Ok(())
    }

    /// Insert and combine on the standard cadence of one combination pass
    /// per `floor(1/(2*eps))` insertions.
    pub fn update(&mut self, x1: f64, x2: f64) -> Result<(), Error> {
        self.insert(x1, x2)?;
        if self.n.is_multiple_of(self.mode.compress_cadence()) {
            self.combine();
        }
        Ok(())
    }

    /// Combine first-marginal tuples wherever the gap condition permits,
    /// merging the affected subsummaries left to right and compressing each
    /// merged result. Counts are conserved exactly: a combined entry's
    /// subsummary holds the sum of the absorbed subsummary counts.
    pub fn combine(&mut self) {
        let tuples: Vec<SummaryTuple> = self.entries.iter().map(|e| e.tuple).collect();
        let Some(groups) = quantile::compress_groups(&tuples, self.n, &self.mode) else {
            return;
        };
        let old = std::mem::take(&mut self.entries);
        let mut iter = old.into_iter();
        let mut out = Vec::with_capacity(groups.len());
        for (s, e) in groups {
            let span = e - s + 1;
            if span == 1 {
                out.push(iter.next().expect("group within entry range"));
                continue;
            }
            let group: Vec<CopulaEntry> = iter.by_ref().take(span).collect();
            let g: u64 = group.iter().map(|en| en.tuple.g).sum();
            let tuple = SummaryTuple {
                value: group[span - 1].tuple.value,
                g,
                delta: group[span - 1].tuple.delta,
            };
            let mut subs = group.into_iter().map(|en| en.sub);
            let mut sub = subs.next().expect("non-empty group");
            for next in subs {
                sub = quantile::merge_same_mode(&sub, &next);
            }
            sub.compress();
            debug_assert_eq!(sub.n(), g);
            out.push(CopulaEntry { tuple, sub });
        }
        self.entries = out;
    }

    /// Locate the entry answering a first-marginal quantile query (first
    /// matching index on value ties) and count the stream pairs credited to
    /// entries up to and including it.
    pub fn prefix_count(&self, u1: f64) -> Result<PrefixCount, Error> {
        if self.n == 0 {
            return Err(Error::EmptySummary);
        }
        if !(u1 > 0.0 && u1 <= 1.0) {
            return Err(Error::InvalidQuantile(u1));
        }
        let tuples: Vec<SummaryTuple> = self.entries.iter().map(|e| e.tuple).collect();
        let mut idx = quantile::query_index(&tuples, self.n, &self.mode, u1);
        while idx > 0 && tuples[idx - 1].value == tuples[idx].value {
            idx -= 1;
        }
        let count = tuples[..=idx].iter().map(|t| t.g).sum();
        Ok(PrefixCount {
            entry_index: idx,
            count,
        })
    }

    /// Approximate the empirical copula at `(u1, u2)`.
    ///
    /// Computes the prefix count for `u1`, queries the merge of *all*
    /// subsummaries for the second marginal's `u2` quantile, inverse-queries
    /// the merge of the prefix subsummaries at that value, and rescales by
    /// `prefix_count / n`. Both merges are materialized per call and the
    /// structure is never mutated.
    pub fn query(&self, u1: f64, u2: f64) -> Result<CopulaQueryResult, Error> {
        if self.n == 0 {
            return Err(Error::EmptySummary);
        }
        if !(u2 > 0.0 && u2 <= 1.0) {
            return Err(Error::InvalidQuantile(u2));
        }
        let pc = self.prefix_count(u1)?;
        let all = self.merged_subsummaries(self.entries.len());
        let threshold = all.query(u2)?;
        let prefix = self.merged_subsummaries(pc.entry_index + 1);
        let cdf = prefix.inverse_query(threshold)?;
        Ok(CopulaQueryResult {
            value: pc.count as f64 / self.n as f64 * cdf,
            prefix_count: pc.count,
            entry_index: pc.entry_index,
            bound: copula_bound_at(&self.mode, u1, u2, self.n),
        })
    }

    /// Left fold of the first `upto` subsummaries into one summary.
    fn merged_subsummaries(&self, upto: usize) -> QuantileSummary {
        debug_assert!(upto >= 1 && upto <= self.entries.len());
        let mut acc = self.entries[0].sub.clone();
        for e in &self.entries[1..upto] {
            acc = quantile::merge_same_mode(&acc, &e.sub);
        }
        acc
    }

    /// The first-marginal quantile summary (a copy of the projection of the
    /// entries onto their tuples).
    pub fn first_marginal(&self) -> QuantileSummary {
        let tuples: Vec<SummaryTuple> = self.entries.iter().map(|e| e.tuple).collect();
        quantile::from_parts(tuples, self.n, self.mode)
    }

    /// Merge of every subsummary: a quantile summary of the whole second
    /// marginal.
    pub fn second_marginal(&self) -> Result<QuantileSummary, Error> {
        if self.n == 0 {
            return Err(Error::EmptySummary);
        }
        Ok(self.merged_subsummaries(self.entries.len()))
    }

    /// Entry count, total stored tuples (first marginal plus all
    /// subsummaries) and the byte estimate `tuple_count * TUPLE_BYTES`.
    pub fn size(&self) -> SummarySize {
        let tuple_count = self.entries.len()
            + self
                .entries
                .iter()
                .map(|e| e.sub.tuple_count())
                .sum::<usize>();
        SummarySize {
            entry_count: self.entries.len(),
            tuple_count,
            byte_estimate: tuple_count as u64 * TUPLE_BYTES,
        }
    }

    /// True iff the first-marginal projection satisfies the quantile
    /// invariant, subsummary counts align with their tuples' `g` and sum to
    /// `n`, and every subsummary satisfies the invariant under the parent's
    /// mode.
    pub fn check_invariant(&self) -> bool {
        let tuples: Vec<SummaryTuple> = self.entries.iter().map(|e| e.tuple).collect();
        if !quantile::tuples_invariant_ok(&tuples, self.n, &self.mode) {
            return false;
        }
        let mut total = 0u64;
        for e in &self.entries {
            if e.sub.mode() != self.mode || e.sub.n() != e.tuple.g || !e.sub.check_invariant() {
                return false;
            }
            total += e.sub.n();
        }
        total == self.n
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            mode: self.mode.kind(),
            epsilon: self.mode.epsilon(),
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|e| SnapshotEntry {
                    tuple: e.tuple,
                    sub: SnapshotSub {
                        n: e.sub.n(),
                        tuples: e.sub.tuples().to_vec(),
                    },
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snap: &Snapshot) -> Result<Self, Error> {
        if snap.schema_version != SNAPSHOT_SCHEMA_VERSION {
            return Err(Error::InvalidSnapshot(format!(
                "unsupported schema version {}",
                snap.schema_version
            )));
        }
        let mode = ErrorMode::new(snap.mode, snap.epsilon)?;
        let entries: Vec<CopulaEntry> = snap
            .entries
            .iter()
            .map(|e| CopulaEntry {
                tuple: e.tuple,
                sub: quantile::from_parts(e.sub.tuples.clone(), e.sub.n, mode),
            })
            .collect();
        let summary = CopulaSummary {
            entries,
            n: snap.n,
            mode,
        };
        if !summary.check_invariant() {
            return Err(Error::InvalidSnapshot(
                "summary invariant does not hold".to_string(),
            ));
        }
        Ok(summary)
    }

    pub fn to_snapshot_json(&self) -> String {
        serde_json::to_string(&self.snapshot()).expect("snapshot serializes")
    }

    pub fn from_snapshot_json(text: &str) -> Result<Self, Error> {
        let snap: Snapshot = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSnapshot(e.to_string()))?;
        Self::from_snapshot(&snap)
    }
}

/// Result of locating a first-marginal quantile: the answering entry and the
/// number of pairs at or before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixCount {
    pub entry_index: usize,
    pub count: u64,
}

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

/// Versioned serialized form of a copula summary. Tuples serialize as
/// `[value, g, delta]` triples; subsummaries inherit the parent mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema_version: u32,
    pub mode: InvariantKind,
    pub epsilon: f64,
    pub n: u64,
    pub entries: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub tuple: SummaryTuple,
    pub sub: SnapshotSub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSub {
    pub n: u64,
    pub tuples: Vec<SummaryTuple>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn biased(eps: f64) -> ErrorMode {
        ErrorMode::biased(eps).unwrap()
    }

    fn lcg_pairs(seed: u64, len: usize, correlate: bool) -> Vec<(f64, f64)> {
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..len)
            .map(|_| {
                let a = next();
                let b = next();
                if correlate {
                    (a, 0.8 * a + 0.2 * b)
                } else {
                    (a, b)
                }
            })
            .collect()
    }

    fn build(mode: ErrorMode, pairs: &[(f64, f64)]) -> CopulaSummary {
        let mut cs = CopulaSummary::new(mode);
        for &(a, b) in pairs {
            cs.update(a, b).unwrap();
        }
        cs
    }

    #[test]
    fn insert_into_empty() {
        let mut cs = CopulaSummary::new(biased(0.1));
        cs.insert(1.0, 9.0).unwrap();
        assert_eq!(cs.n(), 1);
        let e = &cs.entries()[0];
        assert_eq!(e.tuple, SummaryTuple { value: 1.0, g: 1, delta: 0 });
        assert_eq!(e.sub.n(), 1);
        assert_eq!(e.sub.tuples(), &[SummaryTuple { value: 9.0, g: 1, delta: 0 }]);
    }

    #[test]
    fn insert_places_subsummary_with_tuple() {
        let mut cs = CopulaSummary::new(biased(0.1));
        cs.insert(2.0, 20.0).unwrap();
        cs.insert(8.0, 80.0).unwrap();
        cs.insert(5.0, 3.0).unwrap();
        assert_eq!(cs.n(), 3);
        let e = &cs.entries()[1];
        assert_eq!(e.tuple.value, 5.0);
        assert_eq!(e.sub.n(), 1);
        assert_eq!(e.sub.tuples()[0].value, 3.0);
    }

    #[test]
    fn insert_rejects_non_finite_without_mutating() {
        let mut cs = CopulaSummary::new(biased(0.1));
        assert!(cs.insert(f64::NAN, 1.0).is_err());
        assert!(cs.insert(1.0, f64::INFINITY).is_err());
        assert_eq!(cs.n(), 0);
        assert_eq!(cs.entry_count(), 0);
    }

    #[test]
    fn counts_are_conserved_after_inserts() {
        let cs = build(biased(0.1), &lcg_pairs(5, 400, false));
        let total: u64 = cs.entries().iter().map(|e| e.sub.n()).sum();
        assert_eq!(total, cs.n());
        assert!(cs.check_invariant());
    }

    #[test]
    fn combine_with_three_entries_is_noop() {
        let mut cs = CopulaSummary::new(biased(0.1));
        cs.insert(1.0, 1.0).unwrap();
        cs.insert(2.0, 2.0).unwrap();
        cs.insert(3.0, 3.0).unwrap();
        let before = cs.clone();
        cs.combine();
        assert_eq!(cs, before);
    }

    #[test]
    fn combine_compacts_and_keeps_alignment() {
        let cs = build(biased(0.1), &lcg_pairs(77, 10_000, true));
        assert!(cs.entry_count() < 1000, "kept {} entries", cs.entry_count());
        assert!(cs.check_invariant());
        for e in cs.entries() {
            assert_eq!(e.sub.n(), e.tuple.g);
        }
    }

    #[test]
    fn prefix_count_on_comonotone_integers() {
        let n = 2000u64;
        let pairs: Vec<(f64, f64)> = (1..=n).map(|i| (i as f64, i as f64)).collect();
        let cs = build(biased(0.1), &pairs);
        let pc = cs.prefix_count(0.5).unwrap();
        let ratio = pc.count as f64 / n as f64;
        assert!(
            (0.45 - 1.0 / n as f64..=0.55 + 1.0 / n as f64).contains(&ratio),
            "ratio {ratio}"
        );
    }

    #[test]
    fn prefix_count_deep_tail_is_exact() {
        let n = 2000u64;
        let pairs: Vec<(f64, f64)> = (1..=n).map(|i| (i as f64, i as f64)).collect();
        let cs = build(biased(0.1), &pairs);
        // u small enough that the slack is below one rank: exact count.
        let u = 4.0 / n as f64;
        let pc = cs.prefix_count(u).unwrap();
        assert_eq!(pc.count, 4);
    }

    #[test]
    fn prefix_count_single_pair() {
        let mut cs = CopulaSummary::new(biased(0.1));
        cs.insert(3.0, 4.0).unwrap();
        for u in [0.001, 0.4, 1.0] {
            let pc = cs.prefix_count(u).unwrap();
            assert_eq!((pc.entry_index, pc.count), (0, 1));
        }
    }

    #[test]
    fn query_comonotone_diagonal_within_bound() {
        let n = 5000u64;
        let pairs: Vec<(f64, f64)> = (1..=n).map(|i| (i as f64, i as f64)).collect();
        let cs = build(biased(0.1), &pairs);
        for i in [25u64, 250, 2500] {
            let t = i as f64 / n as f64;
            let q = cs.query(t, t).unwrap();
            let exact = i as f64 / n as f64;
            assert!(
                (q.value - exact).abs() <= q.bound,
                "t={t}: {} vs {exact}, bound {}",
                q.value,
                q.bound
            );
            assert!((0.0..=1.0).contains(&q.value));
        }
    }

    #[test]
    fn query_at_u2_one_returns_prefix_ratio() {
        let cs = build(biased(0.1), &lcg_pairs(9, 3000, true));
        for u1 in [0.05, 0.4, 0.9] {
            let q = cs.query(u1, 1.0).unwrap();
            assert_eq!(q.value, q.prefix_count as f64 / cs.n() as f64);
        }
    }

    #[test]
    fn query_validates_arguments() {
        let cs = CopulaSummary::new(biased(0.1));
        assert!(matches!(cs.query(0.5, 0.5), Err(Error::EmptySummary)));
        let cs = build(biased(0.1), &lcg_pairs(1, 10, false));
        assert!(matches!(cs.query(0.0, 0.5), Err(Error::InvalidQuantile(_))));
        assert!(matches!(cs.query(0.5, 1.5), Err(Error::InvalidQuantile(_))));
    }

    #[test]
    fn size_metrics() {
        let mut cs = CopulaSummary::new(biased(0.1));
        assert_eq!(
            cs.size(),
            SummarySize { entry_count: 0, tuple_count: 0, byte_estimate: 0 }
        );
        cs.insert(1.0, 2.0).unwrap();
        assert_eq!(
            cs.size(),
            SummarySize { entry_count: 1, tuple_count: 2, byte_estimate: 2 * TUPLE_BYTES }
        );
    }

    #[test]
    fn snapshot_round_trip() {
        let cs = build(biased(0.1), &lcg_pairs(42, 2500, true));
        let json = cs.to_snapshot_json();
        let restored = CopulaSummary::from_snapshot_json(&json).unwrap();
        assert_eq!(restored, cs);
    }

    #[test]
    fn snapshot_rejects_bad_version_and_broken_invariant() {
        let cs = build(biased(0.1), &lcg_pairs(4, 100, false));
        let mut snap = cs.snapshot();
        snap.schema_version = 99;
        assert!(matches!(
            CopulaSummary::from_snapshot(&snap),
            Err(Error::InvalidSnapshot(_))
        ));
        let mut snap = cs.snapshot();
        snap.n += 1;
        assert!(matches!(
            CopulaSummary::from_snapshot(&snap),
            Err(Error::InvalidSnapshot(_))
        ));
    }

    #[test]
    fn identical_streams_give_identical_summaries() {
        let pairs = lcg_pairs(123, 4000, true);
        let a = build(biased(0.1), &pairs);
        let b = build(biased(0.1), &pairs);
        assert_eq!(a, b);
        let qa = a.query(0.02, 0.02).unwrap();
        let qb = b.query(0.02, 0.02).unwrap();
        assert_eq!(qa.value.to_bits(), qb.value.to_bits());
    }

    #[test]
    fn uniform_mode_works_end_to_end() {
        let mode = ErrorMode::uniform(0.1).unwrap();
        let cs = build(mode, &lcg_pairs(8, 3000, true));
        assert!(cs.check_invariant());
        let q = cs.query(0.5, 0.5).unwrap();
        assert!((0.0..=1.0).contains(&q.value));
        assert_eq!(q.bound, 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_alignment_and_conservation(
            raw in proptest::collection::vec((-100i32..100, -100i32..100), 1..300),
            eps in 0.05f64..0.5,
        ) {
            let pairs: Vec<(f64, f64)> = raw.iter().map(|&(a, b)| (a as f64, b as f64)).collect();
            let cs = build(ErrorMode::biased(eps).unwrap(), &pairs);
            prop_assert!(cs.check_invariant());
            prop_assert_eq!(cs.n(), pairs.len() as u64);
            let q = cs.query(0.3, 0.7).unwrap();
            prop_assert!((0.0..=1.0).contains(&q.value));
        }
    }
}
