//! Matrix files: CSV without a header, one matrix row per line.
//!
//! Line and column numbers in errors are 1-based, as a text editor shows them.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::channel::{ChannelMatrix, GainMatrix, SIMPLEX_TOL};
use crate::error::{Error, Result};

/// Rows of a numeric CSV matrix, checked to be rectangular and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

pub fn parse_matrix(input: &[u8]) -> Result<RawMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);

    let mut data = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                col: 0,
                reason: e.to_string(),
            }
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if rows == 0 {
            cols = record.len();
        } else if record.len() != cols {
            return Err(Error::Parse {
                line,
                col: record.len().min(cols) + 1,
                reason: format!("expected {cols} fields, found {}", record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                col: j + 1,
                reason: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    col: j + 1,
                    reason: format!("'{field}' is not finite"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            reason: "no matrix rows".into(),
        });
    }
    Ok(RawMatrix { rows, cols, data })
}

/// Parses and validates a row-stochastic matrix, reporting the first
/// offending entry or row.
pub fn parse_channel(input: &[u8]) -> Result<ChannelMatrix> {
    let raw = parse_matrix(input)?;
    for (x, row) in raw.data.chunks_exact(raw.cols).enumerate() {
        if let Some(y) = row.iter().position(|&v| v < 0.0) {
            return Err(Error::Parse {
                line: x + 1,
                col: y + 1,
                reason: format!("negative probability {}", row[y]),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Parse {
                line: x + 1,
                col: 0,
                reason: format!("row sums to {sum}, expected 1"),
            });
        }
    }
    ChannelMatrix::new(raw.rows, raw.cols, raw.data)
}

/// Parses a nonnegative gain matrix.
pub fn parse_gain(input: &[u8]) -> Result<GainMatrix> {
    let raw = parse_matrix(input)?;
    if let Some(i) = raw.data.iter().position(|&v| v < 0.0) {
        return Err(Error::Parse {
            line: i / raw.cols + 1,
            col: i % raw.cols + 1,
            reason: format!("negative gain {}", raw.data[i]),
        });
    }
    GainMatrix::new(raw.rows, raw.cols, raw.data)
}

pub fn read_channel(path: &Path) -> Result<ChannelMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_channel(&bytes)
}

pub fn read_gain(path: &Path) -> Result<GainMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_gain(&bytes)
}

/// Shortest round-trip representation, so a written matrix reads back bit-exact.
pub fn write_matrix<W: Write>(out: &mut W, cols: usize, data: &[f64]) -> std::io::Result<()> {
    for row in data.chunks_exact(cols) {
        let mut first = true;
        for v in row {
            if !first {
                out.write_all(b",")?;
            }
            write!(out, "{v:?}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_matrix_file(path: &Path, cols: usize, data: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 20);
    write_matrix(&mut buf, cols, data).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_channel() {
        let w = parse_channel(b"0.9, 0.1\n0.2,0.8\n\n").unwrap();
        assert_eq!((w.rows(), w.cols()), (2, 2));
        assert_eq!(w.row(1), &[0.2, 0.8]);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let w = parse_channel(b"# binary\n1,0\n\n0,1\n").unwrap();
        assert_eq!(w.rows(), 2);
    }

    #[test]
    fn reports_bad_token_position() {
        match parse_channel(b"0.5,0.5\n0.5,abc\n") {
            Err(Error::Parse { line: 2, col: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_ragged_row() {
        match parse_matrix(b"1,2,3\n4,5\n") {
            Err(Error::Parse { line: 2, col: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_row_sum_violation() {
        match parse_channel(b"0.5,0.5\n0.6,0.6\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_negative_entry() {
        match parse_gain(b"1,2\n3,-4\n") {
            Err(Error::Parse { line: 2, col: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_channel(b"1.5,-0.5\n") {
            Err(Error::Parse { line: 1, col: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(parse_matrix(b"1,NaN\n").is_err());
        assert!(parse_matrix(b"inf,1\n").is_err());
        assert!(parse_matrix(b"").is_err());
        assert!(parse_matrix(b"\n\n").is_err());
    }

    #[test]
    fn write_then_read_is_exact() {
        let data = vec![0.1, 0.2 + 1e-17, 1.0 / 3.0, 2.0 / 3.0, 1e-300, 5e10];
        let mut buf = Vec::new();
        write_matrix(&mut buf, 2, &data).unwrap();
        let raw = parse_matrix(&buf).unwrap();
        assert_eq!(raw.data, data);
    }
}
