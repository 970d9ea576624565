//! Run logs as CSV, one row per plant step.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a file
//! and writing it again reproduces it byte for byte.

use std::io::{Read, Write};

use thiserror::Error;

use crate::harness::{Faults, RunRecord};

pub const HEADER: [&str; 11] = [
    "t_s",
    "s_m",
    "y_m",
    "theta_tilde_rad",
    "e_I_exact_m",
    "e_I_measured_m",
    "delta_cmd_rad",
    "delta_actual_rad",
    "theta_d_rad",
    "segment",
    "fault",
];

#[derive(Debug, Error)]
pub enum CsvLogError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header: {0}")]
    Header(String),
    #[error("row {row}, column {column}: {message}")]
    Field {
        row: usize,
        column: &'static str,
        message: String,
    },
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<(), CsvLogError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.s.to_string(),
            r.y.to_string(),
            r.theta_tilde.to_string(),
            r.e_i_exact.to_string(),
            r.e_i_measured.to_string(),
            r.delta_cmd.to_string(),
            r.delta_actual.to_string(),
            r.theta_desired.to_string(),
            r.segment.clone(),
            r.faults.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn to_string(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>, CsvLogError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CsvLogError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let num = |col: usize| -> Result<f64, CsvLogError> {
            row[col].parse().map_err(|e: std::num::ParseFloatError| CsvLogError::Field {
                row: i + 1,
                column: HEADER[col],
                message: e.to_string(),
            })
        };
        out.push(RunRecord {
            t: num(0)?,
            s: num(1)?,
            y: num(2)?,
            theta_tilde: num(3)?,
            e_i_exact: num(4)?,
            e_i_measured: num(5)?,
            delta_cmd: num(6)?,
            delta_actual: num(7)?,
            theta_desired: num(8)?,
            segment: row[9].to_string(),
            faults: row[10].parse::<Faults>().map_err(|message| CsvLogError::Field {
                row: i + 1,
                column: HEADER[10],
                message,
            })?,
        });
    }
    Ok(out)
}
