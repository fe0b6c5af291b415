//! Report artifacts: markdown summaries, a lossless CSV form of
//! [`EvalReport`], the confusion-matrix SVG, and comparison, tuning and
//! importance tables.

use std::fmt::Write as _;
use std::path::Path;

use nozzlelog_core::eval::metrics::{Averaged, ClassScores, Scores};
use nozzlelog_core::eval::{Comparison, EvalReport, ImportanceTable, TuneResult};
use nozzlelog_core::Class;

use crate::error::{CliError, Result};
use crate::formats::matrix::format_f64;

pub fn render_markdown(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Evaluation report: {}\n", r.model);
    let _ = writeln!(out, "- seed: {}", r.seed);
    let _ = writeln!(out, "- heads: {}", r.n_heads);
    let _ = writeln!(out, "- folds: {}", r.folds);
    let _ = writeln!(out, "- misclassified heads: {}", r.misclassified);
    let excluded: Vec<&str> = r.excluded().iter().map(|c| c.name()).collect();
    let excluded = if excluded.is_empty() { "none".to_string() } else { excluded.join(", ") };
    let _ = writeln!(out, "- excluded from the weighted average: {excluded}");
    let _ = writeln!(out, "- catalog digest: `{}`", r.catalog_digest);
    let _ = writeln!(out, "- dataset digest: `{}`\n", r.dataset_digest);
    let _ = writeln!(out, "| class | precision | recall | f1 | support |");
    let _ = writeln!(out, "|---|---:|---:|---:|---:|");
    for c in &r.scores.per_class {
        let mark = if r.excluded().contains(&c.class) { " (excluded)" } else { "" };
        let _ = writeln!(
            out,
            "| {}{mark} | {:.4} | {:.4} | {:.4} | {} |",
            c.class, c.precision, c.recall, c.f1, c.support
        );
    }
    let w = &r.scores.weighted;
    let _ = writeln!(
        out,
        "| weighted | {:.4} | {:.4} | {:.4} | {} |\n",
        w.precision, w.recall, w.f1, w.support
    );
    let _ = writeln!(out, "## Confusion matrix\n");
    let _ = writeln!(out, "Rows are true classes, columns predicted classes.\n");
    let names: Vec<&str> = Class::ALL.iter().map(|c| c.name()).collect();
    let _ = writeln!(out, "| true \\ predicted | {} |", names.join(" | "));
    let _ = writeln!(out, "|---|{}", "---:|".repeat(Class::COUNT));
    for (t, row) in r.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "| {} | {} |", Class::ALL[t], cells.join(" | "));
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(out, "\n## Warnings\n");
        for w in &r.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}

pub fn render_csv(r: &EvalReport) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let mut put = |fields: Vec<String>| w.write_record(&fields).expect("in-memory write");
    let s = |v: &str| v.to_string();
    put(vec![s("section"), s("key"), s("values")]);
    put(vec![s("meta"), s("model"), r.model.clone()]);
    put(vec![s("meta"), s("seed"), r.seed.to_string()]);
    put(vec![s("meta"), s("catalog_digest"), r.catalog_digest.clone()]);
    put(vec![s("meta"), s("dataset_digest"), r.dataset_digest.clone()]);
    put(vec![s("meta"), s("n_heads"), r.n_heads.to_string()]);
    put(vec![s("meta"), s("folds"), r.folds.to_string()]);
    put(vec![s("meta"), s("misclassified"), r.misclassified.to_string()]);
    let excluded: Vec<&str> = r.excluded().iter().map(|c| c.name()).collect();
    put(vec![s("meta"), s("excluded"), excluded.join("|")]);
    for c in &r.scores.per_class {
        put(vec![
            s("class"),
            c.class.to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            format_f64(c.precision),
            format_f64(c.recall),
            format_f64(c.f1),
            c.support.to_string(),
        ]);
    }
    let a = &r.scores.weighted;
    put(vec![
        s("weighted"),
        s("all"),
        format_f64(a.precision),
        format_f64(a.recall),
        format_f64(a.f1),
        a.support.to_string(),
    ]);
    for (t, row) in r.confusion.iter().enumerate() {
        let mut f = vec![s("confusion"), Class::ALL[t].to_string()];
        f.extend(row.iter().map(|v| v.to_string()));
        put(f);
    }
    for warning in &r.warnings {
        put(vec![s("warning"), s("-"), warning.clone()]);
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn parse_csv(path: &Path, text: &str) -> Result<EvalReport> {
    let mut rd = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut report = EvalReport {
        model: String::new(),
        seed: 0,
        catalog_digest: String::new(),
        dataset_digest: String::new(),
        n_heads: 0,
        folds: 0,
        scores: Scores {
            per_class: Vec::new(),
            weighted: Averaged {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
                support: 0,
            },
            excluded: Vec::new(),
        },
        misclassified: 0,
        confusion: [[0; Class::COUNT]; Class::COUNT],
        warnings: Vec::new(),
    };
    let mut seen_weighted = false;
    let mut confusion_rows = 0;
    for rec in rd.records() {
        let rec = rec.map_err(|e| CliError::parse(path, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let err = |m: String| CliError::parse(path, line, m);
        let field = |i: usize| rec.get(i).ok_or_else(|| err(format!("missing field {}", i + 1)));
        fn num<T: std::str::FromStr>(v: &str, err: impl Fn(String) -> CliError) -> Result<T> {
            v.parse().map_err(|_| err(format!("invalid number `{v}`")))
        }
        match (field(0)?, field(1)?) {
            ("meta", key) => {
                let v = field(2)?;
                match key {
                    "model" => report.model = v.to_string(),
                    "seed" => report.seed = num(v, err)?,
                    "catalog_digest" => report.catalog_digest = v.to_string(),
                    "dataset_digest" => report.dataset_digest = v.to_string(),
                    "n_heads" => report.n_heads = num(v, err)?,
                    "folds" => report.folds = num(v, err)?,
                    "misclassified" => report.misclassified = num(v, err)?,
                    "excluded" => {
                        report.scores.excluded = v
                            .split('|')
                            .filter(|s| !s.is_empty())
                            .map(|s| s.parse::<Class>().map_err(|e| err(e.to_string())))
                            .collect::<Result<_>>()?
                    }
                    other => return Err(err(format!("unknown meta key `{other}`"))),
                }
            }
            ("class", name) => {
                let class: Class = name.parse().map_err(|e: nozzlelog_core::Error| err(e.to_string()))?;
                report.scores.per_class.push(ClassScores {
                    class,
                    tp: num(field(2)?, err)?,
                    fp: num(field(3)?, err)?,
                    fn_: num(field(4)?, err)?,
                    precision: num(field(5)?, err)?,
                    recall: num(field(6)?, err)?,
                    f1: num(field(7)?, err)?,
                    support: num(field(8)?, err)?,
                });
            }
            ("weighted", _) => {
                report.scores.weighted = Averaged {
                    precision: num(field(2)?, err)?,
                    recall: num(field(3)?, err)?,
                    f1: num(field(4)?, err)?,
                    support: num(field(5)?, err)?,
                };
                seen_weighted = true;
            }
            ("confusion", name) => {
                let class: Class = name.parse().map_err(|e: nozzlelog_core::Error| err(e.to_string()))?;
                for p in 0..Class::COUNT {
                    report.confusion[class.index()][p] = num(field(2 + p)?, err)?;
                }
                confusion_rows += 1;
            }
            ("warning", _) => report.warnings.push(field(2)?.to_string()),
            (other, _) => return Err(err(format!("unknown section `{other}`"))),
        }
    }
    if !seen_weighted || confusion_rows != Class::COUNT || report.scores.per_class.len() != Class::COUNT {
        return Err(CliError::parse(path, 0, "incomplete report"));
    }
    Ok(report)
}

pub fn read_csv(path: &Path) -> Result<EvalReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(path, &text)
}

/// Confusion matrix heatmap; red intensity grows with the cell count
/// relative to the largest cell.
pub fn render_confusion_svg(r: &EvalReport) -> String {
    const CELL: usize = 64;
    const LEFT: usize = 110;
    const TOP: usize = 70;
    let n = Class::COUNT;
    let width = LEFT + n * CELL + 20;
    let height = TOP + n * CELL + 40;
    let max = r.confusion.iter().flatten().copied().max().unwrap_or(0).max(1);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2,
        escape(&r.model)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">predicted</text>"#,
        LEFT + n * CELL / 2,
        TOP - 30
    );
    for (i, c) in Class::ALL.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + i * CELL + CELL / 2,
            TOP - 8,
            c.name()
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 8,
            TOP + i * CELL + CELL / 2 + 4,
            c.name()
        );
    }
    for (t, row) in r.confusion.iter().enumerate() {
        for (p, &v) in row.iter().enumerate() {
            let shade = 255 - (200 * v as usize / max as usize);
            let text = if 200 * v as usize > 100 * max as usize { "white" } else { "black" };
            let (x, y) = (LEFT + p * CELL, TOP + t * CELL);
            let _ = writeln!(
                out,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb(255,{shade},{shade})" stroke="#999"/>"##
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{text}">{v}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 4
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">true class by row; misclassified heads: {}</text>"#,
        width / 2,
        height - 12,
        r.misclassified
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_comparison(c: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Model comparison\n");
    let _ = writeln!(out, "- A: {}", c.model_a);
    let _ = writeln!(out, "- B: {}\n", c.model_b);
    let _ = writeln!(out, "| class | model | precision | recall | f1 | support | winner |");
    let _ = writeln!(out, "|---|---|---:|---:|---:|---:|:---:|");
    for row in &c.rows {
        let name = row.class.map_or("weighted".to_string(), |c| c.to_string());
        for (tag, s) in [("A", &row.a), ("B", &row.b)] {
            let winner = if tag == "A" { row.winner.to_string() } else { String::new() };
            let _ = writeln!(
                out,
                "| {name} | {tag} | {:.4} | {:.4} | {:.4} | {} | {winner} |",
                s.precision, s.recall, s.f1, s.support
            );
        }
    }
    let _ = writeln!(out, "\n| model | misclassified heads |");
    let _ = writeln!(out, "|---|---:|");
    let _ = writeln!(out, "| A | {} |", c.misclassified_a);
    let _ = writeln!(out, "| B | {} |", c.misclassified_b);
    out
}

pub fn render_importance(model: &str, tables: &[ImportanceTable]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Feature importance: {model}\n");
    for t in tables {
        let title = t.class.map_or("all classes".to_string(), |c| c.to_string());
        let _ = writeln!(out, "## {title}\n");
        let _ = writeln!(out, "| rank | feature | importance |");
        let _ = writeln!(out, "|---:|---|---:|");
        for (i, (name, w)) in t.rows.iter().enumerate() {
            let _ = writeln!(out, "| {} | {name} | {w:.6} |", i + 1);
        }
        out.push('\n');
    }
    out
}

pub fn render_tuning(r: &TuneResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Grid search\n");
    let _ = writeln!(out, "Objective: mean weighted F1 over folds, Other excluded.\n");
    let _ = writeln!(out, "| # | model | mean f1 | fold f1 |");
    let _ = writeln!(out, "|---:|---|---:|---|");
    for (i, row) in r.table.iter().enumerate() {
        let folds: Vec<String> = row.fold_f1.iter().map(|f| format!("{f:.4}")).collect();
        let best = if i == r.best { " (best)" } else { "" };
        let _ = writeln!(out, "| {i} | {}{best} | {:.4} | {} |", row.spec, row.mean_f1, folds.join(" "));
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(out, "\n## Warnings\n");
        for w in &r.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}
