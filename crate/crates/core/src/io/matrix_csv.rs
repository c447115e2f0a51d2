//! Matrix interchange as CSV.
//!
//! One matrix row per line, comma-separated, `.` decimal. Writers emit a
//! leading `# rows=R cols=C` line and print each value with the shortest
//! representation that round-trips exactly. Readers accept files with or
//! without that line and check it against the data when present.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matops::Matrix;

pub fn to_csv_string(m: &Matrix) -> String {
    let mut out = format!("# rows={} cols={}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols()).map(|c| format!("{:?}", m[(r, c)])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut rows = None;
    let mut cols = None;
    for part in line.trim_start_matches('#').split_whitespace() {
        if let Some(v) = part.strip_prefix("rows=") {
            rows = v.parse().ok();
        } else if let Some(v) = part.strip_prefix("cols=") {
            cols = v.parse().ok();
        }
    }
    match (rows, cols) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(Error::Format(format!("bad matrix header {line:?}"))),
    }
}

pub fn from_csv_str(text: &str) -> Result<Matrix> {
    let mut declared = None;
    let mut body = String::with_capacity(text.len());
    for line in text.lines() {
        let t = line.trim();
        if t.starts_with('#') {
            if declared.is_none() && t.contains("rows=") {
                declared = Some(parse_header(t)?);
            }
            continue;
        }
        if !t.is_empty() {
            body.push_str(t);
            body.push('\n');
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::Format(format!(
                "row {} has {} fields, expected {}",
                rows + 1,
                rec.len(),
                cols.unwrap_or(0)
            )));
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("row {}: not a number: {field:?}", rows + 1)))?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(Error::Format("matrix file holds no data".into()));
    }
    if let Some((r, c)) = declared {
        if (r, c) != (rows, cols) {
            return Err(Error::Format(format!(
                "header declares {r}x{c} but data is {rows}x{cols}"
            )));
        }
    }
    let m = Matrix::from_row_slice(rows, cols, &data);
    crate::matops::ensure_finite(&m)?;
    Ok(m)
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    from_csv_str(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(to_csv_string(m).as_bytes())?;
    Ok(())
}
