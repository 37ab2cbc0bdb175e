//! CSV schema for simulation logs.
//!
//! Columns, in order: `t, x, y, theta, s_hat, y_err, theta_err, sigma, omega,
//! d1, d2, in_S`. Angles are radians, `in_S` is `1`/`0`, every float is
//! printed with 17 significant digits so a re-read is bit-exact.

use std::io::{Read, Write};

use thiserror::Error;

use crate::sim::SimRecord;

pub const CSV_HEADER: [&str; 12] = [
    "t", "x", "y", "theta", "s_hat", "y_err", "theta_err", "sigma", "omega", "d1", "d2", "in_S",
];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected CSV header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}, column {column}: cannot parse {value:?}")]
    Parse {
        row: usize,
        column: &'static str,
        value: String,
    },
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(records: &[SimRecord], out: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            fmt(r.t),
            fmt(r.x),
            fmt(r.y),
            fmt(r.theta),
            fmt(r.s_hat),
            fmt(r.y_err),
            fmt(r.theta_err),
            fmt(r.sigma),
            fmt(r.omega),
            fmt(r.d1),
            fmt(r.d2),
            (if r.in_s { "1" } else { "0" }).to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SimRecord>, ExportError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(ExportError::Header(header));
    }
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64, ExportError> {
            let v = rec.get(i).unwrap_or("");
            v.parse().map_err(|_| ExportError::Parse {
                row,
                column: CSV_HEADER[i],
                value: v.to_string(),
            })
        };
        let in_s = match rec.get(11) {
            Some("1") => true,
            Some("0") => false,
            other => {
                return Err(ExportError::Parse {
                    row,
                    column: "in_S",
                    value: other.unwrap_or("").to_string(),
                })
            }
        };
        out.push(SimRecord {
            t: f(0)?,
            x: f(1)?,
            y: f(2)?,
            theta: f(3)?,
            s_hat: f(4)?,
            y_err: f(5)?,
            theta_err: f(6)?,
            sigma: f(7)?,
            omega: f(8)?,
            d1: f(9)?,
            d2: f(10)?,
            in_s,
        });
    }
    Ok(out)
}
