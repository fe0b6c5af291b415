//! Label manifest: CSV with header `head_id,labels`, labels joined by `|`.

use std::path::Path;

use nozzlelog_core::LabelSet;

use crate::error::{CliError, Result};

pub fn render_manifest(rows: &[(String, LabelSet)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["head_id", "labels"]).expect("in-memory write");
    for (head, labels) in rows {
        w.write_record([head.as_str(), &labels.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn parse_manifest(path: &Path, text: &str) -> Result<Vec<(String, LabelSet)>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::parse(path, 1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["head_id", "labels"] {
        return Err(CliError::parse(path, 1, "expected header `head_id,labels`"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            CliError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let labels: LabelSet = rec[1]
            .parse()
            .map_err(|e: nozzlelog_core::Error| CliError::parse(path, line, e.to_string()))?;
        rows.push((rec[0].to_string(), labels));
    }
    Ok(rows)
}

pub fn read_manifest(path: &Path) -> Result<Vec<(String, LabelSet)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_manifest(path, &text)
}
