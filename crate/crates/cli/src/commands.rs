//! Implementations of the `track`, `simulate` and `bench` subcommands.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::time::Instant;

use tailstream::experiment::{write_report_csv, write_report_json};
use tailstream::{
    compare_modes, generate_stream, run_experiment, CopulaSummary, ExperimentConfig, StreamSpec,
};

use crate::report::{make_report, write_csv_rows, write_json_line};
use crate::{BenchArgs, CliError, FormatArg, SimulateArgs, TrackArgs};

fn open_input(path: &str) -> Result<Box<dyn BufRead>, CliError> {
    if path == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let file = File::open(path)
            .map_err(|e| CliError::Io(format!("cannot open input '{path}': {e}")))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn open_output(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        let file = File::create(path)
            .map_err(|e| CliError::Io(format!("cannot create output '{path}': {e}")))?;
        Ok(Box::new(BufWriter::new(file)))
    }
}

enum ReportSink {
    Json(Box<dyn Write>),
    Csv(Box<csv::Writer<Box<dyn Write>>>),
}

impl ReportSink {
    // Flushed per report so a consumer tailing a live stream sees each line
    // as soon as it exists.
    fn write(&mut self, report: &crate::report::TrackReport) -> Result<(), CliError> {
        match self {
            ReportSink::Json(out) => {
                write_json_line(report, &mut *out)?;
                out.flush().map_err(CliError::io)
            }
            ReportSink::Csv(writer) => {
                write_csv_rows(report, writer)?;
                writer.flush().map_err(CliError::io)
            }
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self {
            ReportSink::Json(mut out) => out.flush().map_err(CliError::io),
            ReportSink::Csv(mut writer) => writer.flush().map_err(CliError::io),
        }
    }
}

fn parse_pair(line: &str, number: u64, delimiter: char) -> Result<(f64, f64), CliError> {
    let mut fields = line.split(delimiter);
    let (a, b) = match (fields.next(), fields.next(), fields.next()) {
        (Some(a), Some(b), None) => (a, b),
        _ => {
            let found = line.split(delimiter).count();
            return Err(CliError::Parse {
                line: number,
                message: format!("expected 2 columns, found {found}"),
            });
        }
    };
    let parse = |field: &str| -> Result<f64, CliError> {
        let value: f64 = field.trim().parse().map_err(|_| CliError::Parse {
            line: number,
            message: format!("'{}' is not a number", field.trim()),
        })?;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(CliError::Parse {
                line: number,
                message: format!("non-finite value '{}'", field.trim()),
            })
        }
    };
    Ok((parse(a)?, parse(b)?))
}

pub fn track(args: TrackArgs) -> Result<(), CliError> {
    let mode = args.common.error_mode()?;
    if args.report_every < 1 {
        return Err(CliError::Config("report-every must be at least 1".to_string()));
    }
    let input = open_input(&args.input)?;
    let out = open_output(&args.output)?;
    // Reports stream out as they are produced; nothing is buffered across
    // the run.
    let mut sink = match args.format {
        FormatArg::Csv => ReportSink::Csv(Box::new(csv::Writer::from_writer(out))),
        FormatArg::Json => ReportSink::Json(out),
    };

    let mut summary = CopulaSummary::new(mode);
    let mut line_number = 0u64;
    for line in input.lines() {
        let line = line.map_err(CliError::io)?;
        line_number += 1;
        if line_number == 1 && args.header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (x1, x2) = parse_pair(&line, line_number, args.delimiter)?;
        summary
            .update(x1, x2)
            .map_err(|e| CliError::Parse { line: line_number, message: e.to_string() })?;
        if summary.n().is_multiple_of(args.report_every) {
            let report = make_report(
                &summary,
                args.tail_lower_i,
                args.upper_offset,
                &args.eval_points,
            )?;
            sink.write(&report)?;
        }
    }
    sink.finish()?;

    if let Some(path) = &args.checkpoint {
        let mut file = File::create(path)
            .map_err(|e| CliError::Io(format!("cannot create checkpoint '{path}': {e}")))?;
        file.write_all(summary.to_snapshot_json().as_bytes())
            .map_err(CliError::io)?;
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.n < 1 {
        return Err(CliError::Config("empty stream".to_string()));
    }
    let spec = StreamSpec {
        distribution: args.distribution.into(),
        rho: args.rho,
        length: args.n,
        seed: args.seed,
    };
    let config = ExperimentConfig {
        eval_points: args.eval_points.iter().map(|p| (p.u1, p.u2)).collect(),
        tail_indices: args.tail_indices.clone(),
        checkpoint_every: args.checkpoint_every,
    };
    let config_err = |e: tailstream::Error| CliError::Config(e.to_string());

    if args.compare_modes {
        let tail_index = *args
            .tail_indices
            .first()
            .ok_or_else(|| CliError::Config("compare-modes needs a tail index".to_string()))?;
        let comparison = compare_modes(&spec, args.common.epsilon, tail_index, args.checkpoint_every)
            .map_err(config_err)?;
        match args.format {
            FormatArg::Json => {
                let mut out = open_output(&args.output)?;
                serde_json::to_writer_pretty(&mut out, &comparison)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                out.flush().map_err(CliError::io)?;
            }
            FormatArg::Csv => {
                // One CSV file per mode, derived from the output path.
                if args.output == "-" {
                    return Err(CliError::Config(
                        "csv output with --compare-modes needs --output <path>".to_string(),
                    ));
                }
                let biased_path = format!("{}.biased.csv", args.output);
                let uniform_path = format!("{}.uniform.csv", args.output);
                write_report_csv(&comparison.biased, open_output(&biased_path)?)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                write_report_csv(&comparison.uniform, open_output(&uniform_path)?)
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
        }
        return Ok(());
    }

    let mode = args.common.error_mode()?;
    let report = run_experiment(&spec, mode, &config).map_err(config_err)?;
    let mut out = open_output(&args.output)?;
    match args.format {
        FormatArg::Json => {
            write_report_json(&report, &mut out).map_err(|e| CliError::Io(e.to_string()))?
        }
        FormatArg::Csv => {
            write_report_csv(&report, &mut out).map_err(|e| CliError::Io(e.to_string()))?
        }
    }
    out.flush().map_err(CliError::io)
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    if args.n < 1 {
        return Err(CliError::Config("empty stream".to_string()));
    }
    let mode = args.common.error_mode()?;
    let spec = StreamSpec {
        distribution: args.distribution.into(),
        rho: args.rho,
        length: args.n,
        seed: args.seed,
    };
    let data = generate_stream(&spec).map_err(|e| CliError::Config(e.to_string()))?;

    let mut summary = CopulaSummary::new(mode);
    let mut latencies_ns = Vec::with_capacity(data.pairs().len());
    let started = Instant::now();
    for &(a, b) in data.pairs() {
        let t0 = Instant::now();
        summary
            .update(a, b)
            .map_err(|e| CliError::Config(e.to_string()))?;
        latencies_ns.push(t0.elapsed().as_nanos() as u64);
    }
    let total = started.elapsed();

    latencies_ns.sort_unstable();
    let pick = |p: f64| latencies_ns[(((latencies_ns.len() as f64 * p).ceil() as usize).max(1) - 1)
        .min(latencies_ns.len() - 1)];
    let size = summary.size();
    println!("inserted {} pairs in {:.3} s", args.n, total.as_secs_f64());
    println!(
        "insert latency ns: p50={} p90={} p99={} max={}",
        pick(0.50),
        pick(0.90),
        pick(0.99),
        latencies_ns[latencies_ns.len() - 1]
    );
    println!(
        "summary size: {} entries, {} tuples, {} bytes (size ratio {:.4})",
        size.entry_count,
        size.tuple_count,
        size.byte_estimate,
        size.byte_estimate as f64 / (tailstream::PAIR_BYTES * args.n) as f64
    );
    Ok(())
}
