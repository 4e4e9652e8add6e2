//! Text formats: node signals (`node,value`), labels (`node,class`),
//! feature matrices and JSON metadata sidecars. Every reader reports the
//! 1-based line of the first bad record.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{GtfError, Result};
use crate::model_eval::fmt_float;

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).comment(Some(b'#')).from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, want: [&str; 2]) -> Result<()> {
    let h = rdr.headers()?;
    if h.len() != 2 || h.get(0) != Some(want[0]) || h.get(1) != Some(want[1]) {
        return Err(GtfError::Parse { line: 1, msg: format!("expected header `{},{}`", want[0], want[1]) });
    }
    Ok(())
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let line = line_of(rec);
    let s = rec.get(i).ok_or_else(|| GtfError::Parse { line, msg: "missing field".into() })?;
    s.parse().map_err(|_| GtfError::Parse { line, msg: format!("cannot parse `{s}`") })
}

/// `(node, value)` rows in file order.
fn read_pairs<R: Read, T: std::str::FromStr>(input: R, header: [&str; 2]) -> Result<Vec<(usize, T, usize)>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, header)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| match e.position() {
            Some(p) => GtfError::Parse { line: p.line() as usize, msg: e.to_string() },
            None => GtfError::from(e),
        })?;
        if rec.len() != 2 {
            return Err(GtfError::Parse { line: line_of(&rec), msg: format!("expected 2 fields, got {}", rec.len()) });
        }
        out.push((field(&rec, 0)?, field(&rec, 1)?, line_of(&rec)));
    }
    Ok(out)
}

/// Reads a full node signal; every node `0..n` must appear exactly once.
/// With `n = None` the size is the number of rows.
pub fn read_signal<R: Read>(input: R, n: Option<usize>) -> Result<Vec<f64>> {
    let rows: Vec<(usize, f64, usize)> = read_pairs(input, ["node", "value"])?;
    let n = n.unwrap_or(rows.len());
    let mut out = vec![f64::NAN; n];
    let mut seen = vec![false; n];
    for (node, v, line) in rows {
        if node >= n {
            return Err(GtfError::Parse { line, msg: format!("node {node} out of range for {n} nodes") });
        }
        if seen[node] {
            return Err(GtfError::Parse { line, msg: format!("node {node} repeated") });
        }
        if !v.is_finite() {
            return Err(GtfError::Parse { line, msg: format!("non-finite value at node {node}") });
        }
        seen[node] = true;
        out[node] = v;
    }
    if let Some(miss) = seen.iter().position(|s| !s) {
        return Err(GtfError::InvalidParameter(format!("signal has no value for node {miss}")));
    }
    Ok(out)
}

pub fn write_signal<W: Write>(out: W, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), fmt_float(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// `(node, class)` pairs sorted by node; nodes may be a subset of `0..n`
/// but not repeated.
pub fn read_labels<R: Read>(input: R, n: usize) -> Result<Vec<(usize, usize)>> {
    let rows: Vec<(usize, usize, usize)> = read_pairs(input, ["node", "class"])?;
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(rows.len());
    for (node, c, line) in rows {
        if node >= n {
            return Err(GtfError::Parse { line, msg: format!("node {node} out of range for {n} nodes") });
        }
        if seen[node] {
            return Err(GtfError::Parse { line, msg: format!("node {node} repeated") });
        }
        seen[node] = true;
        out.push((node, c));
    }
    out.sort_unstable();
    Ok(out)
}

pub fn write_labels<W: Write>(out: W, labels: &[(usize, usize)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "class"])?;
    for (i, c) in labels {
        w.write_record([i.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Numeric feature rows, one node per line. A first line that does not
/// parse as numbers is taken as a header.
pub fn read_features<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(input);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&rec);
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = out.first() {
                    if first.len() != row.len() {
                        return Err(GtfError::Parse { line, msg: format!("expected {} features, got {}", first.len(), row.len()) });
                    }
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(GtfError::Parse { line, msg: "non-finite feature".into() });
                }
                out.push(row);
            }
            Err(_) if k == 0 => {}
            Err(_) => return Err(GtfError::Parse { line, msg: "cannot parse feature row".into() }),
        }
    }
    if out.is_empty() {
        return Err(GtfError::Parse { line: 1, msg: "no feature rows".into() });
    }
    Ok(out)
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}
