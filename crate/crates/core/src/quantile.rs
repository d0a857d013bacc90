//! Streaming quantile summaries with uniform or relative rank error.
//!
//! A summary is an ordered list of tuples `(v, g, delta)` in the style of
//! Greenwald and Khanna's online quantile summaries. The value `v` is an
//! element seen in the stream, `g` is the rank increment over the previous
//! tuple and `delta` is the rank uncertainty, so that
//!
//! ```text
//! r_min(v_i) = g^1 + ... + g^i        r_max(v_i) = r_min(v_i) + delta^i
//! ```
//!
//! bracket the rank of `v_i` among the `n = sum g` elements inserted so far.
//! Two error modes are supported, differing in the gap permitted between
//! adjacent tuples:
//!
//! * [`ErrorMode::uniform`]: `r_max(v_{i+1}) - r_min(v_i) <= 2*eps*n`, the
//!   classic invariant giving queries a flat `eps*n` rank error;
//! * [`ErrorMode::biased`]: the gap is at most
//!   `2*eps*min(r_min(v_i), n - r_max(v_{i+1}))`, the fully-biased invariant
//!   of Cormode et al., symmetrised over both tails. Query error then scales
//!   as `eps*min(u, 1-u)*n`, so both tails are resolved with relative
//!   accuracy no matter how long the stream grows.
//!
//! In biased mode the permitted gap drops below one near the extremes, so
//! tuples there can never be combined; they are effectively frozen and the
//! minimum and maximum stay exact. The first and last tuples are never
//! removed by compression, and extreme insertions carry `delta = 0`.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which adjacent-gap invariant a summary maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    /// Flat `2*eps*n` gap; query error is `eps*n` ranks everywhere.
    Uniform,
    /// Relative `2*eps*min(r_min, n - r_max)` gap; query error is
    /// `eps*min(u, 1-u)*n` ranks, refined in both tails.
    Biased,
}

/// Error mode of a summary: an invariant kind plus its accuracy parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMode {
    kind: InvariantKind,
    epsilon: f64,
}

impl ErrorMode {
    /// Biased (relative error) mode. `epsilon` must lie in (0, 0.5].
    pub fn biased(epsilon: f64) -> Result<Self, Error> {
        Self::new(InvariantKind::Biased, epsilon)
    }

    /// Uniform error mode. `epsilon` must lie in (0, 0.5].
    pub fn uniform(epsilon: f64) -> Result<Self, Error> {
        Self::new(InvariantKind::Uniform, epsilon)
    }

    pub fn new(kind: InvariantKind, epsilon: f64) -> Result<Self, Error> {
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon > 0.5 {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(ErrorMode { kind, epsilon })
    }

    pub fn kind(&self) -> InvariantKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// How many insertions to allow between compressions: `floor(1/(2*eps))`,
    /// at least 1.
    pub fn compress_cadence(&self) -> u64 {
        ((1.0 / (2.0 * self.epsilon)).floor() as u64).max(1)
    }

    /// Largest `r_max(next) - r_min(prev)` the invariant permits for an
    /// adjacent tuple pair. `rank_before` is `r_min` of the left tuple and
    /// `room_after` is `n - r_max` of the right one.
    fn allowed_gap(&self, rank_before: u64, room_after: u64, n: u64) -> f64 {
        match self.kind {
            InvariantKind::Uniform => 2.0 * self.epsilon * n as f64,
            InvariantKind::Biased => {
                2.0 * self.epsilon * rank_before.min(room_after) as f64
            }
        }
    }

    /// Rank slack granted to a query at quantile `u`.
    fn query_slack(&self, u: f64, n: u64) -> f64 {
        let nf = n as f64;
        match self.kind {
            InvariantKind::Uniform => self.epsilon * nf,
            InvariantKind::Biased => self.epsilon * (u * nf).min((1.0 - u) * nf),
        }
    }
}

/// One `(value, g, delta)` entry of a quantile summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, u64, u64)", into = "(f64, u64, u64)")]
pub struct SummaryTuple {
    /// An element observed in the stream.
    pub value: f64,
    /// Rank increment over the previous tuple; always at least 1.
    pub g: u64,
    /// Rank uncertainty: `r_max - r_min` for this value.
    pub delta: u64,
}

impl From<(f64, u64, u64)> for SummaryTuple {
    fn from((value, g, delta): (f64, u64, u64)) -> Self {
        SummaryTuple { value, g, delta }
    }
}

impl From<SummaryTuple> for (f64, u64, u64) {
    fn from(t: SummaryTuple) -> Self {
        (t.value, t.g, t.delta)
    }
}

/// A space-efficient summary of a univariate stream supporting approximate
/// quantile queries, inverse (CDF) queries and lossless-invariant merging.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSummary {
    tuples: Vec<SummaryTuple>,
    n: u64,
    mode: ErrorMode,
}

impl QuantileSummary {
    pub fn new(mode: ErrorMode) -> Self {
        QuantileSummary {
            tuples: Vec::new(),
            n: 0,
            mode,
        }
    }

    /// Build a summary with a single exact element.
    pub fn singleton(mode: ErrorMode, x: f64) -> Result<Self, Error> {
        let mut s = Self::new(mode);
        s.insert(x)?;
        Ok(s)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mode(&self) -> ErrorMode {
        self.mode
    }

    pub fn tuples(&self) -> &[SummaryTuple] {
        &self.tuples
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples.len()
    }

    /// Insert one element. A new tuple `(x, 1, delta*)` is placed after all
    /// stored values `<= x`; `delta*` covers the same rank window as the
    /// tuple now to its right, or is 0 when `x` becomes the new minimum or
    /// maximum (extremes stay exact).
    pub fn insert(&mut self, x: f64) -> Result<(), Error> {
        if !x.is_finite() {
            return Err(Error::NonFiniteValue(x));
        }
        let (pos, delta) = insert_spot(&self.tuples, x);
        self.tuples.insert(pos, SummaryTuple { value: x, g: 1, delta });
        self.n += 1;
        Ok(())
    }

    /// Insert and compress on the standard cadence of one compression per
    /// `floor(1/(2*eps))` insertions.
    pub fn update(&mut self, x: f64) -> Result<(), Error> {
        self.insert(x)?;
        if self.n.is_multiple_of(self.mode.compress_cadence()) {
            self.compress();
        }
        Ok(())
    }

    /// Combine adjacent tuples wherever the mode's gap condition permits.
    /// Scans interior tuples left to right; for each survivor it absorbs the
    /// longest run of earlier tuples whose combined gap still satisfies the
    /// invariant. The first and last tuples are never removed. `n` and all
    /// query guarantees are unchanged.
    pub fn compress(&mut self) {
        if let Some(groups) = compress_groups(&self.tuples, self.n, &self.mode) {
            apply_groups(&mut self.tuples, &groups);
        }
    }

    /// Approximate the `u`-quantile for `u` in (0, 1]. The true rank of the
    /// returned value deviates from `ceil(u*n)` by at most the mode's rank
    /// slack plus one.
    pub fn query(&self, u: f64) -> Result<f64, Error> {
        if self.n == 0 {
            return Err(Error::EmptySummary);
        }
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::InvalidQuantile(u));
        }
        let idx = query_index(&self.tuples, self.n, &self.mode, u);
        Ok(self.tuples[idx].value)
    }

    /// Estimate the empirical CDF at `x` as `(r_min + r_max) / (2n)` of the
    /// largest stored value `<= x`, or 0 when `x` is below the minimum. In
    /// biased mode the estimate is within `3*eps*min(F(x), 1 - F(x))` of the
    /// empirical CDF.
    pub fn inverse_query(&self, x: f64) -> Result<f64, Error> {
        if self.n == 0 {
            return Err(Error::EmptySummary);
        }
        if x.is_nan() {
            return Err(Error::NonFiniteValue(x));
        }
        Ok(inverse_cdf_estimate(&self.tuples, self.n, x))
    }

    /// Merge two summaries over disjoint streams into one covering both.
    /// Inputs are not mutated. The output stores the union of values, counts
    /// `a.n + b.n` elements and satisfies the same mode invariant.
    pub fn merge(a: &QuantileSummary, b: &QuantileSummary) -> Result<QuantileSummary, Error> {
        if a.mode != b.mode {
            return Err(Error::ModeMismatch);
        }
        Ok(QuantileSummary {
            tuples: merge_tuples(&a.tuples, &b.tuples),
            n: a.n + b.n,
            mode: a.mode,
        })
    }

    /// True iff values are non-decreasing, `sum g = n`, every rank bound lies
    /// in `[1, n]` and every adjacent pair satisfies the mode's gap
    /// condition. Gaps of a single rank are always permitted: they carry no
    /// uncertainty, which is how biased summaries freeze their tails.
    pub fn check_invariant(&self) -> bool {
        tuples_invariant_ok(&self.tuples, self.n, &self.mode)
    }
}

/// Merge summaries already known to share a mode.
pub(crate) fn merge_same_mode(a: &QuantileSummary, b: &QuantileSummary) -> QuantileSummary {
    debug_assert_eq!(a.mode, b.mode);
    QuantileSummary {
        tuples: merge_tuples(&a.tuples, &b.tuples),
        n: a.n + b.n,
        mode: a.mode,
    }
}

/// Assemble a summary from raw parts; the caller vouches for the invariant.
pub(crate) fn from_parts(tuples: Vec<SummaryTuple>, n: u64, mode: ErrorMode) -> QuantileSummary {
    QuantileSummary { tuples, n, mode }
}

/// Insert position (after all values `<= x`) and the `delta*` for a new
/// tuple there.
pub(crate) fn insert_spot(tuples: &[SummaryTuple], x: f64) -> (usize, u64) {
    let pos = tuples.partition_point(|t| t.value <= x);
    let delta = if pos == 0 || pos == tuples.len() {
        0
    } else {
        tuples[pos].g + tuples[pos].delta - 1
    };
    (pos, delta)
}

/// Index of the tuple answering a quantile query: one before the first tuple
/// whose `r_max` exceeds `u*n` plus the mode's slack, clamped to the ends.
pub(crate) fn query_index(tuples: &[SummaryTuple], n: u64, mode: &ErrorMode, u: f64) -> usize {
    let target = u * n as f64 + mode.query_slack(u, n);
    let mut rmin = 0u64;
    for (idx, t) in tuples.iter().enumerate() {
        rmin += t.g;
        if (rmin + t.delta) as f64 > target {
            return idx.saturating_sub(1);
        }
    }
    tuples.len() - 1
}

pub(crate) fn inverse_cdf_estimate(tuples: &[SummaryTuple], n: u64, x: f64) -> f64 {
    let below = tuples.partition_point(|t| t.value <= x);
    if below == 0 {
        return 0.0;
    }
    let rmin: u64 = tuples[..below].iter().map(|t| t.g).sum();
    let rmax = rmin + tuples[below - 1].delta;
    (rmin + rmax) as f64 / (2.0 * n as f64)
}

/// Plan a compression pass. Returns the inclusive index ranges of tuples that
/// collapse into one surviving tuple each, or `None` when nothing can be
/// combined. Requires more than three tuples; the first and last are always
/// singleton groups.
pub(crate) fn compress_groups(
    tuples: &[SummaryTuple],
    n: u64,
    mode: &ErrorMode,
) -> Option<Vec<(usize, usize)>> {
    let len = tuples.len();
    if len <= 3 {
        return None;
    }
    let mut rmin = Vec::with_capacity(len);
    let mut acc = 0u64;
    for t in tuples {
        acc += t.g;
        rmin.push(acc);
    }
    debug_assert_eq!(acc, n);

    let mut groups: Vec<(usize, usize)> = Vec::with_capacity(len);
    groups.push((0, 0));
    let mut changed = false;
    for k in 1..len {
        let mut start = k;
        let rmax_k = rmin[k] + tuples[k].delta;
        debug_assert!(rmax_k <= n);
        if k + 1 < len {
            let room_after = n - rmax_k;
            while let Some(&(s, _)) = groups.last() {
                if s == 0 {
                    break;
                }
                let rank_before = rmin[s - 1];
                let gap = (rmax_k - rank_before) as f64;
                if gap <= mode.allowed_gap(rank_before, room_after, n) {
                    groups.pop();
                    start = s;
                    changed = true;
                } else {
                    break;
                }
            }
        }
        groups.push((start, k));
    }
    changed.then_some(groups)
}

pub(crate) fn apply_groups(tuples: &mut Vec<SummaryTuple>, groups: &[(usize, usize)]) {
    let mut out = Vec::with_capacity(groups.len());
    for &(s, e) in groups {
        let g = tuples[s..=e].iter().map(|t| t.g).sum();
        out.push(SummaryTuple {
            value: tuples[e].value,
            g,
            delta: tuples[e].delta,
        });
    }
    *tuples = out;
}

/// Merge two tuple lists, assigning each surviving value the rank bounds it
/// has in the combined stream. On equal values, elements of `a` precede
/// elements of `b`; ranks treat duplicates as distinct order statistics.
pub(crate) fn merge_tuples(a: &[SummaryTuple], b: &[SummaryTuple]) -> Vec<SummaryTuple> {
    if a.is_empty() {
        return b.to_vec();
    }
    if b.is_empty() {
        return a.to_vec();
    }

    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    // Running r_min of the last consumed tuple on each side, and the rank
    // bounds of the most recently consumed tuple (the merge's w1).
    let (mut sum_a, mut sum_b) = (0u64, 0u64);
    let mut last_a: Option<(u64, u64)> = None;
    let mut last_b: Option<(u64, u64)> = None;
    let mut prev_out_rmin = 0u64;

    while ia < a.len() || ib < b.len() {
        let from_a = match (a.get(ia), b.get(ib)) {
            (Some(ta), Some(tb)) => ta.value <= tb.value,
            (Some(_), None) => true,
            _ => false,
        };
        let (value, rmin_m, rmax_m) = if from_a {
            let t = &a[ia];
            sum_a += t.g;
            let own = (sum_a, sum_a + t.delta);
            // w1: largest b strictly below; w2: smallest b at or above.
            let rmin_m = own.0 + last_b.map_or(0, |(lo, _)| lo);
            let rmax_m = match b.get(ib) {
                Some(next) => sum_b + next.g + next.delta + own.1 - 1,
                None => last_b.map_or(0, |(_, hi)| hi) + own.1,
            };
            last_a = Some(own);
            ia += 1;
            (t.value, rmin_m, rmax_m)
        } else {
            let t = &b[ib];
            sum_b += t.g;
            let own = (sum_b, sum_b + t.delta);
            // w1: largest a at or below; w2: smallest a strictly above.
            let rmin_m = own.0 + last_a.map_or(0, |(lo, _)| lo);
            let rmax_m = match a.get(ia) {
                Some(next) => sum_a + next.g + next.delta + own.1 - 1,
                None => last_a.map_or(0, |(_, hi)| hi) + own.1,
            };
            last_b = Some(own);
            ib += 1;
            (t.value, rmin_m, rmax_m)
        };
        debug_assert!(rmin_m > prev_out_rmin);
        debug_assert!(rmax_m >= rmin_m);
        out.push(SummaryTuple {
            value,
            g: rmin_m - prev_out_rmin,
            delta: rmax_m - rmin_m,
        });
        prev_out_rmin = rmin_m;
    }
    out
}

pub(crate) fn tuples_invariant_ok(tuples: &[SummaryTuple], n: u64, mode: &ErrorMode) -> bool {
    if tuples.is_empty() {
        return n == 0;
    }
    let mut sum = 0u64;
    let mut prev_value = f64::NEG_INFINITY;
    let mut prev_rmin = 0u64;
    for (idx, t) in tuples.iter().enumerate() {
        if t.g == 0 || !t.value.is_finite() || t.value < prev_value {
            return false;
        }
        sum += t.g;
        let rmax = sum + t.delta;
        if rmax > n {
            return false;
        }
        if idx > 0 {
            let gap = (rmax - prev_rmin) as f64;
            let allowed = mode.allowed_gap(prev_rmin, n - rmax, n);
            if gap > allowed.max(1.0) {
                return false;
            }
        }
        prev_rmin = sum;
        prev_value = t.value;
    }
    sum == n
}
