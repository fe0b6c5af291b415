//! Feature matrix CSV: header `head_id,<column>...`, one row per head.
//! Values use the shortest text that parses back to the same float;
//! missing values are written as `NaN`.

use std::path::Path;

use nozzlelog_core::matrix::{FeatureMatrix, Matrix};

use crate::error::{CliError, Result};

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

pub fn render_matrix(m: &FeatureMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["head_id".to_string()];
    header.extend(m.columns().iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (i, head) in m.head_ids().iter().enumerate() {
        let mut row = vec![head.clone()];
        row.extend(m.row(i).iter().map(|&v| format_f64(v)));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn parse_matrix(path: &Path, text: &str) -> Result<FeatureMatrix> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::parse(path, 1, e.to_string()))?.clone();
    if header.get(0) != Some("head_id") {
        return Err(CliError::parse(path, 1, "first column must be `head_id`"));
    }
    let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut heads = Vec::new();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            CliError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        heads.push(rec[0].to_string());
        for (j, field) in rec.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::parse(path, line, format!("column `{}`: invalid number `{field}`", columns[j]))
            })?;
            data.push(v);
        }
    }
    let values = Matrix::new(heads.len(), columns.len(), data)?;
    Ok(FeatureMatrix::new(heads, columns, values)?)
}

pub fn read_matrix(path: &Path) -> Result<FeatureMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_bits() {
        let values = Matrix::from_rows(&[vec![0.1, f64::NAN, -3.0e-300], vec![1.0 / 3.0, 0.0, 7.0]]).unwrap();
        let m = FeatureMatrix::new(
            vec!["A".into(), "B".into()],
            vec!["x".into(), "y".into(), "z".into()],
            values,
        )
        .unwrap();
        let text = render_matrix(&m);
        assert!(text.starts_with("head_id,x,y,z\nA,0.1,NaN,"));
        let back = parse_matrix(Path::new("f"), &text).unwrap();
        assert_eq!(back.head_ids(), m.head_ids());
        for (a, b) in back.values().data().iter().zip(m.values().data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn bad_cells_are_parse_errors() {
        let text = "head_id,x\nA,1.5\nB,abc\n";
        assert!(matches!(parse_matrix(Path::new("f"), text), Err(CliError::Parse { line: 3, .. })));
        assert!(parse_matrix(Path::new("f"), "id,x\n").is_err());
        assert!(parse_matrix(Path::new("f"), "head_id,x\nA,1,2\n").is_err());
    }
}
