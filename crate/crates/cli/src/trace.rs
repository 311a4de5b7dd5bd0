//! Arrival-trace CSV ingestion and emission.
//!
//! Format: UTF-8, LF line endings, header `arrival_time_s,fee_satoshi,size_bytes`.
//! Values are written with full round-trip precision so a trace emitted by the
//! simulator replays to the identical result.

use std::io::Write;
use std::path::Path;

use backlogsim_core::engine::{SimResult, TraceArrivals, TraceRow};
use backlogsim_core::scalar::Scalar;

use crate::error::CliError;
use crate::output::atomic_write;

pub const TRACE_HEADER: &str = "arrival_time_s,fee_satoshi,size_bytes";

/// Loads and validates a trace file. Errors carry the offending data-row
/// index (first data row = row 0).
pub fn load_trace(path: &Path) -> Result<TraceArrivals<Scalar>, CliError> {
    let file = std::fs::File::open(path).map_err(CliError::io(path.display().to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let expected: Vec<&str> = TRACE_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Config(format!(
            "trace header must be `{TRACE_HEADER}`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("trace row {row}: {e}")))?;
        let parse_f64 = |idx: usize, name: &str| -> Result<f64, CliError> {
            record
                .get(idx)
                .ok_or_else(|| CliError::Config(format!("trace row {row}: missing {name}")))?
                .parse()
                .map_err(|_| {
                    CliError::Config(format!(
                        "trace row {row}: {name} `{}` is not a number",
                        record.get(idx).unwrap_or("")
                    ))
                })
        };
        let arrival_time = parse_f64(0, "arrival_time_s")?;
        let fee = parse_f64(1, "fee_satoshi")?;
        let size: u64 = record
            .get(2)
            .ok_or_else(|| CliError::Config(format!("trace row {row}: missing size_bytes")))?
            .parse()
            .map_err(|_| {
                CliError::Config(format!(
                    "trace row {row}: size_bytes `{}` is not an integer",
                    record.get(2).unwrap_or("")
                ))
            })?;
        rows.push(TraceRow {
            arrival_time,
            fee,
            size,
        });
    }

    if rows.is_empty() {
        return Err(CliError::Config("trace contains no data rows".into()));
    }
    TraceArrivals::new(rows).map_err(|e| CliError::Config(e.to_string()))
}

/// Writes the arrivals of a run in trace format (full float precision).
pub fn write_trace(path: &Path, result: &SimResult<Scalar>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    writeln!(buf, "{TRACE_HEADER}").expect("write to vec");
    for tx in &result.transactions {
        writeln!(buf, "{},{},{}", tx.arrival_time, tx.fee, tx.size).expect("write to vec");
    }
    atomic_write(path, &buf)
}
