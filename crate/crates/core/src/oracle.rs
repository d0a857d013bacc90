//! Exact empirical references computed from fully stored pairs.
//!
//! Everything here sorts and counts, deliberately trading memory for
//! exactness: these are the ground-truth values the streaming summaries are
//! tested against. Ranks are 1-based order-statistic indices; duplicates are
//! distinct order statistics in stable input order.

use crate::error::Error;

/// A fully stored bivariate sample, the oracle-side counterpart of the
/// streaming summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPairs {
    pairs: Vec<(f64, f64)>,
}

impl RawPairs {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self, Error> {
        for &(a, b) in &pairs {
            if !a.is_finite() {
                return Err(Error::NonFiniteValue(a));
            }
            if !b.is_finite() {
                return Err(Error::NonFiniteValue(b));
            }
        }
        Ok(RawPairs { pairs })
    }

    pub fn n(&self) -> u64 {
        self.pairs.len() as u64
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Exact empirical copula at `(u1, u2)`.
    pub fn copula(&self, u1: f64, u2: f64) -> Result<f64, Error> {
        CopulaOracle::new(&self.pairs)?.copula(u1, u2)
    }

    /// Exact empirical copula at the diagonal-by-rank point `(i1/n, i2/n)`.
    pub fn copula_at_ranks(&self, i1: u64, i2: u64) -> Result<f64, Error> {
        CopulaOracle::new(&self.pairs)?.copula_at_ranks(i1, i2)
    }

    /// Empirical lower tail dependence function at rank `i`.
    pub fn lambda_lower(&self, i: u64) -> Result<f64, Error> {
        CopulaOracle::new(&self.pairs)?.lambda_lower_at(i)
    }

    /// Empirical upper tail dependence function at rank `i`.
    pub fn lambda_upper(&self, i: u64) -> Result<f64, Error> {
        CopulaOracle::new(&self.pairs)?.lambda_upper_at(i)
    }

    /// Copula as the mean of products of indicator functions: one pass over
    /// all pairs counting those at or below both marginal thresholds.
    pub fn copula_via_indicators(&self, u1: f64, u2: f64) -> Result<f64, Error> {
        let oracle = CopulaOracle::new(&self.pairs)?;
        let n = self.pairs.len() as u64;
        let t1 = oracle.threshold_first(ceil_rank(u1, n));
        let t2 = oracle.threshold_second(ceil_rank(u2, n));
        let count = self
            .pairs
            .iter()
            .filter(|&&(a, b)| a <= t1 && b <= t2)
            .count();
        Ok(count as f64 / n as f64)
    }

    /// Copula via the restricted-set route: select the index set whose first
    /// coordinate is at or below the `u1` threshold, evaluate the second
    /// marginal's empirical CDF over that set only, and rescale by its
    /// cardinality.
    pub fn copula_via_restricted_set(&self, u1: f64, u2: f64) -> Result<f64, Error> {
        let oracle = CopulaOracle::new(&self.pairs)?;
        let n = self.pairs.len() as u64;
        let t1 = oracle.threshold_first(ceil_rank(u1, n));
        let t2 = oracle.threshold_second(ceil_rank(u2, n));
        let restricted: Vec<f64> = self
            .pairs
            .iter()
            .filter(|&&(a, _)| a <= t1)
            .map(|&(_, b)| b)
            .collect();
        let n1 = restricted.len() as u64;
        let count = restricted.iter().filter(|&&b| b <= t2).count() as u64;
        // (n1/n) * (count/n1) evaluated as one exact rational division, so the
        // result is bit-identical to the indicator form whenever the counts
        // agree. The integer products stay well inside f64's exact range.
        Ok((n1 * count) as f64 / (n * n1) as f64)
    }
}

/// Sorted marginals of a (prefix of a) pair stream, for repeated exact
/// copula and tail dependence evaluation.
pub struct CopulaOracle<'a> {
    pairs: &'a [(f64, f64)],
    sorted_first: Vec<f64>,
    sorted_second: Vec<f64>,
}

impl<'a> CopulaOracle<'a> {
    pub fn new(pairs: &'a [(f64, f64)]) -> Result<Self, Error> {
        if pairs.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut sorted_first: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut sorted_second: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        sorted_first.sort_by(f64::total_cmp);
        sorted_second.sort_by(f64::total_cmp);
        Ok(CopulaOracle {
            pairs,
            sorted_first,
            sorted_second,
        })
    }

    pub fn n(&self) -> u64 {
        self.pairs.len() as u64
    }

    /// The 1-based `rank`-th order statistic of the first marginal.
    pub fn threshold_first(&self, rank: u64) -> f64 {
        self.sorted_first[(rank - 1) as usize]
    }

    /// The 1-based `rank`-th order statistic of the second marginal.
    pub fn threshold_second(&self, rank: u64) -> f64 {
        self.sorted_second[(rank - 1) as usize]
    }

    /// Exact empirical CDF of the first marginal at `x`.
    pub fn cdf_first(&self, x: f64) -> f64 {
        let count = self.sorted_first.partition_point(|&v| v <= x);
        count as f64 / self.pairs.len() as f64
    }

    /// Exact empirical CDF of the second marginal at `x`.
    pub fn cdf_second(&self, x: f64) -> f64 {
        let count = self.sorted_second.partition_point(|&v| v <= x);
        count as f64 / self.pairs.len() as f64
    }

    /// Exact copula with the marginal thresholds taken at integer ranks,
    /// avoiding any float round trip through `u = i/n`.
    pub fn copula_at_ranks(&self, i1: u64, i2: u64) -> Result<f64, Error> {
        let n = self.n();
        if i1 < 1 || i1 > n {
            return Err(Error::TailIndexOutOfRange { index: i1, n });
        }
        if i2 < 1 || i2 > n {
            return Err(Error::TailIndexOutOfRange { index: i2, n });
        }
        let t1 = self.threshold_first(i1);
        let t2 = self.threshold_second(i2);
        let count = self
            .pairs
            .iter()
            .filter(|&&(a, b)| a <= t1 && b <= t2)
            .count();
        Ok(count as f64 / n as f64)
    }

    pub fn copula(&self, u1: f64, u2: f64) -> Result<f64, Error> {
        let n = self.n();
        check_unit(u1)?;
        check_unit(u2)?;
        self.copula_at_ranks(ceil_rank(u1, n), ceil_rank(u2, n))
    }

    /// `C(i/n, i/n) / (i/n)` for `1 <= i <= n`.
    pub fn lambda_lower_at(&self, i: u64) -> Result<f64, Error> {
        let n = self.n();
        if i < 1 || i > n {
            return Err(Error::TailIndexOutOfRange { index: i, n });
        }
        let c = self.copula_at_ranks(i, i)?;
        Ok(c / (i as f64 / n as f64))
    }

    /// `(1 - 2i/n + C(i/n, i/n)) / (1 - i/n)` for `1 <= i < n`.
    pub fn lambda_upper_at(&self, i: u64) -> Result<f64, Error> {
        let n = self.n();
        if i < 1 || i >= n {
            return Err(Error::TailIndexOutOfRange { index: i, n });
        }
        let c = self.copula_at_ranks(i, i)?;
        let r = i as f64 / n as f64;
        Ok((1.0 - 2.0 * r + c) / (1.0 - r))
    }
}

fn check_unit(u: f64) -> Result<(), Error> {
    if u > 0.0 && u <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidQuantile(u))
    }
}

/// `ceil(u * n)` as a 1-based rank. Products within 1e-6 of an integer snap
/// to it, so that `u = i/n` round-trips to rank `i` despite the float
/// division.
pub(crate) fn ceil_rank(u: f64, n: u64) -> u64 {
    let t = u * n as f64;
    let nearest = t.round();
    let r = if (t - nearest).abs() < 1e-6 { nearest } else { t.ceil() };
    (r.max(1.0) as u64).min(n.max(1))
}
