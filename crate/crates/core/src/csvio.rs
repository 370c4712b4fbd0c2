//! Numeric CSV input: one observation per row, `.` decimal separator,
//! `#` comment lines ignored.

use std::io::Read;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Parses a numeric matrix. Diagnostics carry 1-based line numbers.
pub fn read_points<R: Read>(reader: R, has_header: bool) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut dim = None;
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {d} columns, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {}: {field:?} is not a number", col + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column {}: non-finite value {field:?}", col + 1),
                });
            }
            data.push(value);
        }
    }
    let dim = dim.ok_or(Error::Parse {
        line: 0,
        message: "no data rows".into(),
    })?;
    PointSet::new(dim, data)
}
