//! Report line schema for `track` and its JSON/CSV writers.

use std::io::Write;

use serde::{Deserialize, Serialize};
use tailstream::{
    estimate_lambda_lower, estimate_lambda_upper, CopulaSummary, PAIR_BYTES,
};

use crate::{CliError, EvalPoint};

pub const TRACK_SCHEMA_VERSION: u32 = 1;

/// One report emitted by `track`. JSON output is one such object per line;
/// CSV output carries the same values, one row per evaluation point (or a
/// single row when no evaluation points are configured).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub schema_version: u32,
    pub n: u64,
    /// Lower tail estimate at the configured rank; absent while the rank is
    /// outside the estimator's valid range for the current `n`.
    pub lambda_lower: Option<LambdaReport>,
    /// Upper tail estimate at rank `n - offset`; absent on the same terms.
    pub lambda_upper: Option<LambdaReport>,
    pub copula: Vec<CopulaPoint>,
    pub tuples: TupleCounts,
    pub size_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub rank: u64,
    pub estimate: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaPoint {
    pub u1: f64,
    pub u2: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleCounts {
    pub entries: usize,
    pub total: usize,
}

/// Build the report for the summary's current state.
pub fn make_report(
    summary: &CopulaSummary,
    tail_lower_i: u64,
    upper_offset: u64,
    eval_points: &[EvalPoint],
) -> Result<TrackReport, CliError> {
    let n = summary.n();
    let half = n.div_ceil(2);
    let lambda_lower = if tail_lower_i >= 1 && tail_lower_i <= half {
        let est = estimate_lambda_lower(summary, tail_lower_i)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Some(LambdaReport {
            rank: tail_lower_i,
            estimate: est.lambda,
            bound: est.bound,
        })
    } else {
        None
    };
    let upper_rank = n.saturating_sub(upper_offset);
    let lambda_upper = if upper_rank > half && upper_rank < n {
        let est = estimate_lambda_upper(summary, upper_rank)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Some(LambdaReport {
            rank: upper_rank,
            estimate: est.lambda,
            bound: est.bound,
        })
    } else {
        None
    };
    let mut copula = Vec::with_capacity(eval_points.len());
    for p in eval_points {
        let q = summary
            .query(p.u1, p.u2)
            .map_err(|e| CliError::Config(e.to_string()))?;
        copula.push(CopulaPoint {
            u1: p.u1,
            u2: p.u2,
            value: q.value,
            bound: q.bound,
        });
    }
    let size = summary.size();
    Ok(TrackReport {
        schema_version: TRACK_SCHEMA_VERSION,
        n,
        lambda_lower,
        lambda_upper,
        copula,
        tuples: TupleCounts {
            entries: size.entry_count,
            total: size.tuple_count,
        },
        size_ratio: size.byte_estimate as f64 / (PAIR_BYTES * n) as f64,
    })
}

pub fn write_json_line<W: Write>(report: &TrackReport, mut out: W) -> Result<(), CliError> {
    let line = serde_json::to_string(report).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{line}").map_err(CliError::io)
}

#[derive(Serialize)]
struct TrackCsvRow {
    n: u64,
    lambda_lower: Option<f64>,
    lambda_lower_bound: Option<f64>,
    lambda_upper: Option<f64>,
    lambda_upper_bound: Option<f64>,
    u1: Option<f64>,
    u2: Option<f64>,
    copula_value: Option<f64>,
    copula_bound: Option<f64>,
    entries: usize,
    tuples: usize,
    size_ratio: f64,
}

pub fn write_csv_rows<W: Write>(
    report: &TrackReport,
    writer: &mut csv::Writer<W>,
) -> Result<(), CliError> {
    let base = TrackCsvRow {
        n: report.n,
        lambda_lower: report.lambda_lower.map(|l| l.estimate),
        lambda_lower_bound: report.lambda_lower.map(|l| l.bound),
        lambda_upper: report.lambda_upper.map(|l| l.estimate),
        lambda_upper_bound: report.lambda_upper.map(|l| l.bound),
        u1: None,
        u2: None,
        copula_value: None,
        copula_bound: None,
        entries: report.tuples.entries,
        tuples: report.tuples.total,
        size_ratio: report.size_ratio,
    };
    if report.copula.is_empty() {
        writer
            .serialize(base)
            .map_err(|e| CliError::Io(e.to_string()))?;
        return Ok(());
    }
    for point in &report.copula {
        writer
            .serialize(TrackCsvRow {
                u1: Some(point.u1),
                u2: Some(point.u2),
                copula_value: Some(point.value),
                copula_bound: Some(point.bound),
                ..base
            })
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}
