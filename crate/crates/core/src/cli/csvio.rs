//! Plain numeric CSV: comma separated, '.' decimal point, no quoting,
//! optional header row.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::CliError;

pub fn read_matrix(path: &Path, header: bool) -> Result<DMatrix<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text, header).map_err(|(line, column, message)| CliError::Parse {
        path: path.display().to_string(),
        line,
        column,
        message,
    })
}

/// Parses CSV text into a matrix. Errors carry 1-based line and column.
pub fn parse_matrix(text: &str, header: bool) -> Result<DMatrix<f64>, (u64, usize, String)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            (line, 0, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err((
                    line,
                    record.len(),
                    format!("expected {w} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| (line, c + 1, format!("'{field}' is not a number")))?;
            values.push(v);
        }
        rows += 1;
    }
    let Some(cols) = width else {
        return Err((0, 0, "no data rows".into()));
    };
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Renders a matrix with 17 significant digits per value.
pub fn format_matrix(m: &DMatrix<f64>, header: Option<&[String]>) -> String {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 24);
    if let Some(names) = header {
        out.push_str(&names.join(","));
        out.push('\n');
    }
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", m[(r, c)]));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, header: Option<&[String]>) -> Result<(), CliError> {
    fs::write(path, format_matrix(m, header)).map_err(|e| CliError::io(path, e))
}
