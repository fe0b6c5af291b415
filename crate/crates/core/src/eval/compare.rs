use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::report::EvalReport;
use crate::error::{Error, Result};
use crate::nozzle::Class;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    A,
    B,
    Tie,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Winner::A => "A",
            Winner::B => "B",
            Winner::Tie => "=",
        })
    }
}

/// Precision, recall and F1 of one class (or the weighted average).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    /// `None` for the weighted average.
    pub class: Option<Class>,
    pub a: Prf,
    pub b: Prf,
    /// F1 of `a` minus F1 of `b`.
    pub delta: f64,
    /// Higher F1 wins.
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub model_a: String,
    pub model_b: String,
    pub misclassified_a: usize,
    pub misclassified_b: usize,
    pub rows: Vec<ComparisonRow>,
}

fn row(class: Option<Class>, a: Prf, b: Prf) -> ComparisonRow {
    let delta = a.f1 - b.f1;
    let winner = if a.f1 > b.f1 {
        Winner::A
    } else if a.f1 < b.f1 {
        Winner::B
    } else {
        Winner::Tie
    };
    ComparisonRow {
        class,
        a,
        b,
        delta,
        winner,
    }
}

/// Per-class and weighted scores side by side. Both reports must come
/// from the same dataset and the same class exclusions.
pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> Result<Comparison> {
    if a.dataset_digest != b.dataset_digest {
        return Err(Error::Eval(alloc::format!(
            "reports cover different datasets ({} vs {})",
            a.dataset_digest, b.dataset_digest
        )));
    }
    if a.excluded() != b.excluded() {
        return Err(Error::Eval("reports exclude different classes".into()));
    }
    let mut rows = Vec::new();
    for ca in &a.scores.per_class {
        if let Some(cb) = b.scores.per_class.iter().find(|c| c.class == ca.class) {
            let prf = |c: &super::metrics::ClassScores| Prf {
                precision: c.precision,
                recall: c.recall,
                f1: c.f1,
                support: c.support,
            };
            rows.push(row(Some(ca.class), prf(ca), prf(cb)));
        }
    }
    let w = |r: &EvalReport| Prf {
        precision: r.scores.weighted.precision,
        recall: r.scores.weighted.recall,
        f1: r.scores.weighted.f1,
        support: r.scores.weighted.support,
    };
    rows.push(row(None, w(a), w(b)));
    Ok(Comparison {
        model_a: a.model.clone(),
        model_b: b.model.clone(),
        misclassified_a: a.misclassified,
        misclassified_b: b.misclassified,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nozzle::LabelSet;
    use alloc::string::ToString;

    fn report(pred: &[LabelSet], truth: &[LabelSet], digest: &str) -> EvalReport {
        EvalReport::from_predictions(
            "m".into(),
            0,
            "c".into(),
            digest.into(),
            truth,
            pred,
            &[],
            0,
            Vec::new(),
        )
        .unwrap()
    }

    #[test]
    fn winners_and_digest_guard() {
        let p1 = LabelSet::single(Class::Pattern1);
        let p2 = LabelSet::single(Class::Pattern2);
        let truth = [p1, p2];
        let a = report(&[p1, p2], &truth, "d");
        let b = report(&[p1, p1], &truth, "d");
        let c = compare_reports(&a, &b).unwrap();
        let weighted = c.rows.last().unwrap();
        assert_eq!(weighted.winner, Winner::A);
        assert_eq!((c.misclassified_a, c.misclassified_b), (0, 1));
        let same = compare_reports(&a, &a).unwrap();
        assert!(same.rows.iter().all(|r| r.winner == Winner::Tie && r.delta == 0.0));
        assert_eq!(Winner::Tie.to_string(), "=");
        let other = report(&[p1, p2], &truth, "e");
        assert!(matches!(compare_reports(&a, &other), Err(Error::Eval(_))));
    }
}
