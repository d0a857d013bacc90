//! Tail dependence estimators over a copula summary, with the theoretical
//! error bounds attached.
//!
//! The lower tail dependence function at rank `i` is `C(i/n, i/n) / (i/n)`;
//! the upper one is `(1 - 2i/n + C(i/n, i/n)) / (1 - i/n)`. Substituting the
//! summary's copula estimate for the empirical copula gives estimators whose
//! error in biased mode is at most `eps * (8 + 9*eps)` regardless of stream
//! length; in uniform mode the corresponding bound grows linearly with `n`.

use serde::{Deserialize, Serialize};

use crate::copula::CopulaSummary;
use crate::error::Error;
use crate::oracle::ceil_rank;
use crate::quantile::{ErrorMode, InvariantKind};

/// Which tail a dependence estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Lower,
    Upper,
}

/// A tail dependence estimate with its theoretical bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDependenceEstimate {
    pub side: TailSide,
    /// For the lower tail, the rank `i`; for the upper tail, the offset
    /// `j = n - i` from the top.
    pub tail_index: u64,
    /// Stream length at estimation time.
    pub n: u64,
    pub lambda: f64,
    /// `eps * (8 + 9*eps)` in biased mode; `5*eps*n/i` (lower) or
    /// `5*eps*n/j` (upper) in uniform mode.
    pub bound: f64,
}

/// Theoretical bounds for a diagonal copula query at rank `i` and the tail
/// dependence estimators derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValues {
    pub copula_bound: f64,
    pub tail_bound_lower: f64,
    pub tail_bound_upper: f64,
}

/// Bound values for stream length `n` and diagonal rank `i`, `1 <= i <= n`.
pub fn bound_values(mode: &ErrorMode, i: u64, n: u64) -> BoundValues {
    let eps = mode.epsilon();
    match mode.kind() {
        InvariantKind::Biased => {
            let constant = eps * (8.0 + 9.0 * eps);
            BoundValues {
                copula_bound: eps * i.min(n - i) as f64 * (8.0 + 9.0 * eps) / n as f64,
                tail_bound_lower: constant,
                tail_bound_upper: constant,
            }
        }
        InvariantKind::Uniform => BoundValues {
            copula_bound: 5.0 * eps,
            tail_bound_lower: 5.0 * eps * n as f64 / i as f64,
            tail_bound_upper: if i < n {
                5.0 * eps * n as f64 / (n - i) as f64
            } else {
                f64::INFINITY
            },
        },
    }
}

/// Copula query bound at a general evaluation point. On the diagonal this is
/// the biased bound `eps * min(i, n-i) * (8 + 9*eps) / n`; off the diagonal
/// the same formula is applied at the wider of the two margins, which only
/// relaxes it.
pub(crate) fn copula_bound_at(mode: &ErrorMode, u1: f64, u2: f64, n: u64) -> f64 {
    let eps = mode.epsilon();
    match mode.kind() {
        InvariantKind::Uniform => 5.0 * eps,
        InvariantKind::Biased => {
            let i1 = ceil_rank(u1, n);
            let i2 = ceil_rank(u2, n);
            let m = i1.min(n - i1).max(i2.min(n - i2)) as f64;
            eps * m * (8.0 + 9.0 * eps) / n as f64
        }
    }
}

/// Estimate the lower tail dependence function at rank `i`,
/// `1 <= i <= ceil(n/2)`.
pub fn estimate_lambda_lower(cs: &CopulaSummary, i: u64) -> Result<TailDependenceEstimate, Error> {
    let n = cs.n();
    if n == 0 {
        return Err(Error::EmptySummary);
    }
    if i < 1 || i > n.div_ceil(2) {
        return Err(Error::TailIndexOutOfRange { index: i, n });
    }
    let u = i as f64 / n as f64;
    let query = cs.query(u, u)?;
    let bounds = bound_values(&cs.mode(), i, n);
    Ok(TailDependenceEstimate {
        side: TailSide::Lower,
        tail_index: i,
        n,
        lambda: query.value / u,
        bound: bounds.tail_bound_lower,
    })
}

/// Estimate the upper tail dependence function at rank `i`,
/// `ceil(n/2) < i < n`. The estimate's `tail_index` records the offset
/// `n - i` from the top.
pub fn estimate_lambda_upper(cs: &CopulaSummary, i: u64) -> Result<TailDependenceEstimate, Error> {
    let n = cs.n();
    if n == 0 {
        return Err(Error::EmptySummary);
    }
    if i <= n.div_ceil(2) || i >= n {
        return Err(Error::TailIndexOutOfRange { index: i, n });
    }
    let u = i as f64 / n as f64;
    let query = cs.query(u, u)?;
    let bounds = bound_values(&cs.mode(), i, n);
    Ok(TailDependenceEstimate {
        side: TailSide::Upper,
        tail_index: n - i,
        n,
        lambda: (1.0 - 2.0 * u + query.value) / (1.0 - u),
        bound: bounds.tail_bound_upper,
    })
}


#[cfg(test)]
mod range_contract {
    use super::*;
    use crate::experiment::{generate_stream, PairDistribution, StreamSpec};
    use crate::oracle::CopulaOracle;

    // With continuous marginals the empirical tail functions live in [0, 1]
    // up to rank discretization, and the streaming estimates stay finite.
    #[test]
    fn lambda_values_stay_in_range_on_continuous_streams() {
        for distribution in [
            PairDistribution::GaussianPair,
            PairDistribution::BetaPair,
            PairDistribution::IndependentUniform,
        ] {
            let spec = StreamSpec { distribution, rho: 0.8, length: 4000, seed: 12 };
            let data = generate_stream(&spec).unwrap();
            let oracle = CopulaOracle::new(data.pairs()).unwrap();
            let n = data.n();
            let mut cs = CopulaSummary::new(ErrorMode::biased(0.1).unwrap());
            for &(a, b) in data.pairs() {
                cs.update(a, b).unwrap();
            }
            let slack = 1.0 / 25.0;
            for i in [5u64, 25, n / 4, n / 2] {
                let exact = oracle.lambda_lower_at(i).unwrap();
                assert!((0.0..=1.0 + slack).contains(&exact), "{distribution:?} i={i}: {exact}");
                let est = estimate_lambda_lower(&cs, i).unwrap();
                assert!(est.lambda.is_finite());
            }
            for i in [n / 2 + 1, 3 * n / 4, n - 25, n - 5] {
                let exact = oracle.lambda_upper_at(i).unwrap();
                assert!((0.0..=1.0 + slack).contains(&exact), "{distribution:?} i={i}: {exact}");
                let est = estimate_lambda_upper(&cs, i).unwrap();
                assert!(est.lambda.is_finite());
            }
        }
    }
}
