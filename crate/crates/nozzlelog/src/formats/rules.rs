//! Rule files.
//!
//! ```text
//! # comment
//! @mode all-match
//! 10 | Pattern4 | spatial__nf4_edge_run >= 10
//! 20 | Pattern5 | ch5__step__attr_max_step <= 5 && ch5__mean in [2, 40]
//! ```
//!
//! Each rule line is `priority | label | predicate && predicate ...`, and a
//! predicate is `column <op> value` with `<`, `<=`, `>`, `>=`, or
//! `column in [low, high]` (inclusive). Lower priorities are checked first.
//! The mode directive is optional and defaults to `first-match`.

use std::fmt::Write as _;
use std::path::Path;

use nozzlelog_core::rules::{Comparator, MatchMode, Predicate, Rule, RuleSet};
use nozzlelog_core::Class;

use crate::error::{CliError, Result};

/// The rule set shipped with the tool, tuned on the synthetic archetypes.
pub const DEFAULT_RULES: &str = include_str!("../../rules/default.rules");

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("invalid number `{}`", s.trim()))?;
    if v.is_nan() {
        return Err("NaN is not a valid threshold".into());
    }
    Ok(v)
}

fn parse_predicate(text: &str) -> Result<Predicate, String> {
    let text = text.trim();
    let range = text
        .split_once(" in")
        .filter(|(_, r)| r.trim_start().starts_with('['));
    if let Some((col, range)) = range {
        let inner = range
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| format!("expected `[low, high]` in `{text}`"))?;
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| format!("expected `[low, high]` in `{text}`"))?;
        let (a, b) = (parse_number(a)?, parse_number(b)?);
        if a > b {
            return Err(format!("empty range in `{text}`"));
        }
        return Ok(Predicate {
            column: col.trim().to_string(),
            cmp: Comparator::Within(a, b),
        });
    }
    for (op, make) in [
        ("<=", Comparator::Le as fn(f64) -> Comparator),
        (">=", Comparator::Ge),
        ("<", Comparator::Lt),
        (">", Comparator::Gt),
    ] {
        if let Some((col, v)) = text.split_once(op) {
            let col = col.trim();
            if col.is_empty() || col.contains(char::is_whitespace) {
                return Err(format!("invalid column name in `{text}`"));
            }
            return Ok(Predicate {
                column: col.to_string(),
                cmp: make(parse_number(v)?),
            });
        }
    }
    Err(format!("no comparator in `{text}`"))
}

fn parse_mode(s: &str) -> Result<MatchMode, String> {
    match s.trim() {
        "first-match" => Ok(MatchMode::FirstMatch),
        "all-match" => Ok(MatchMode::AllMatch),
        other => Err(format!("unknown mode `{other}`")),
    }
}

pub fn parse_rules(path: &Path, text: &str) -> Result<RuleSet> {
    let mut mode = None;
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| CliError::parse(path, i + 1, m);
        if let Some(rest) = line.strip_prefix("@mode") {
            if mode.is_some() {
                return Err(err("mode set twice".into()));
            }
            mode = Some(parse_mode(rest).map_err(err)?);
            continue;
        }
        let parts: Vec<&str> = line.splitn(3, '|').collect();
        if parts.len() != 3 {
            return Err(err("expected `priority | label | predicates`".into()));
        }
        let priority: i64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| err(format!("invalid priority `{}`", parts[0].trim())))?;
        let label: Class = parts[1].trim().parse().map_err(|e: nozzlelog_core::Error| err(e.to_string()))?;
        let predicates = parts[2]
            .split("&&")
            .map(parse_predicate)
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        rules.push(Rule {
            priority,
            label,
            predicates,
        });
    }
    Ok(RuleSet::new(rules, mode.unwrap_or(MatchMode::FirstMatch))?)
}

pub fn read_rules(path: &Path) -> Result<RuleSet> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_rules(path, &text)
}

pub fn default_rules() -> RuleSet {
    parse_rules(Path::new("<default rules>"), DEFAULT_RULES).expect("shipped rules parse")
}

/// Canonical text of a rule set; parsing it gives the same rule set.
pub fn render_rules(rules: &RuleSet) -> String {
    let mut out = String::new();
    let mode = match rules.mode() {
        MatchMode::FirstMatch => "first-match",
        MatchMode::AllMatch => "all-match",
    };
    let _ = writeln!(out, "@mode {mode}");
    for r in rules.rules() {
        let preds: Vec<String> = r
            .predicates
            .iter()
            .map(|p| match p.cmp {
                Comparator::Within(a, b) => format!("{} in [{a:?}, {b:?}]", p.column),
                Comparator::Lt(c) => format!("{} < {c:?}", p.column),
                Comparator::Le(c) => format!("{} <= {c:?}", p.column),
                Comparator::Gt(c) => format!("{} > {c:?}", p.column),
                Comparator::Ge(c) => format!("{} >= {c:?}", p.column),
            })
            .collect();
        let _ = writeln!(out, "{} | {} | {}", r.priority, r.label, preds.join(" && "));
    }
    out
}
