//! Nozzle log files: one record per line,
//! `head_id<TAB>job_id<TAB>t<TAB>RLE`, where the grid is run-length
//! encoded row-major as comma-separated `<state>:<len>` runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nozzlelog_core::nozzle::{LogRecord, NfcState, NozzleGrid, NozzleLog, CELLS};

use crate::error::{CliError, Result};

fn state_symbol(s: NfcState) -> char {
    match s {
        NfcState::Empty => 'E',
        NfcState::Nf1 => '1',
        NfcState::Nf2 => '2',
        NfcState::Nf3 => '3',
        NfcState::Nf4 => '4',
        NfcState::Nf5 => '5',
    }
}

fn symbol_state(c: char) -> Option<NfcState> {
    Some(match c {
        'E' => NfcState::Empty,
        '1' => NfcState::Nf1,
        '2' => NfcState::Nf2,
        '3' => NfcState::Nf3,
        '4' => NfcState::Nf4,
        '5' => NfcState::Nf5,
        _ => return None,
    })
}

pub fn encode_rle(grid: &NozzleGrid) -> String {
    let mut out = String::new();
    let cells = grid.cells();
    let mut i = 0;
    while i < CELLS {
        let s = cells[i];
        let len = cells[i..].iter().take_while(|&&c| c == s).count();
        if !out.is_empty() {
            out.push(',');
        }
        let _ = write!(out, "{}:{len}", state_symbol(s));
        i += len;
    }
    out
}

/// Accepts `E:509` as well as the compact `E509`.
pub fn decode_rle(text: &str) -> Result<NozzleGrid, String> {
    let mut cells = Vec::with_capacity(CELLS);
    for run in text.split(',') {
        let run = run.trim();
        let mut chars = run.chars();
        let sym = chars.next().ok_or("empty run")?;
        let state = symbol_state(sym).ok_or_else(|| format!("unknown state `{sym}`"))?;
        let rest = chars.as_str();
        let len: usize = rest
            .strip_prefix(':')
            .unwrap_or(rest)
            .parse()
            .map_err(|_| format!("invalid run `{run}`"))?;
        if len == 0 {
            return Err(format!("zero-length run `{run}`"));
        }
        if cells.len() + len > CELLS {
            return Err(format!("runs exceed {CELLS} cells"));
        }
        cells.extend(std::iter::repeat_n(state, len));
    }
    if cells.len() != CELLS {
        return Err(format!("runs cover {} of {CELLS} cells", cells.len()));
    }
    NozzleGrid::from_slice(&cells).map_err(|e| e.to_string())
}

pub fn format_record(r: &LogRecord) -> String {
    format!("{}\t{}\t{}\t{}", r.head_id, r.job_id, r.t, encode_rle(&r.grid))
}

pub fn parse_record(line: &str) -> Result<LogRecord, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
    }
    if fields[0].is_empty() {
        return Err("empty head id".into());
    }
    let job_id = fields[1]
        .parse()
        .map_err(|_| format!("invalid job id `{}`", fields[1]))?;
    let t = fields[2]
        .parse()
        .map_err(|_| format!("invalid time step `{}`", fields[2]))?;
    Ok(LogRecord {
        head_id: fields[0].to_string(),
        job_id,
        t,
        grid: decode_rle(fields[3])?,
    })
}

pub fn render_log(log: &NozzleLog) -> String {
    let mut out = String::new();
    for r in log.records() {
        out.push_str(&format_record(r));
        out.push('\n');
    }
    out
}

pub fn write_log(path: &Path, log: &NozzleLog) -> Result<()> {
    fs::write(path, render_log(log)).map_err(|e| CliError::io(path, e))
}

/// Parses log text into one log per head, in head-id order. Records are
/// put in time order; blank lines are skipped.
pub fn parse_logs(path: &Path, text: &str) -> Result<Vec<NozzleLog>> {
    let mut heads: BTreeMap<String, Vec<(usize, LogRecord)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_record(line).map_err(|m| CliError::parse(path, i + 1, m))?;
        heads.entry(rec.head_id.clone()).or_default().push((i + 1, rec));
    }
    let mut logs = Vec::with_capacity(heads.len());
    for (head, mut recs) in heads {
        recs.sort_by_key(|(_, r)| r.t);
        if let Some(w) = recs.windows(2).find(|w| w[0].1.t == w[1].1.t) {
            return Err(CliError::parse(
                path,
                w[1].0,
                format!("head {head} repeats time step {}", w[1].1.t),
            ));
        }
        logs.push(NozzleLog::new(recs.into_iter().map(|(_, r)| r).collect())?);
    }
    Ok(logs)
}

pub fn read_logs(path: &Path) -> Result<Vec<NozzleLog>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_logs(path, &text)
}
