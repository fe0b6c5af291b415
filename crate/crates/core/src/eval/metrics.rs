//! Multi-label precision/recall/F1 and the multi-label confusion matrix.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nozzle::{Class, LabelSet};

pub type ConfusionMatrix = [[u32; Class::COUNT]; Class::COUNT];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub class: Class,
    pub tp: u32,
    pub fp: u32,
    pub fn_: u32,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averaged {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    /// All six classes in canonical order, excluded ones included.
    pub per_class: Vec<ClassScores>,
    /// Support-weighted average over the classes not in `excluded`.
    pub weighted: Averaged,
    pub excluded: Vec<Class>,
}

fn ratio(num: u32, den: u32) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_scores(truth: &[LabelSet], pred: &[LabelSet], class: Class) -> ClassScores {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (t, p) in truth.iter().zip(pred) {
        match (t.contains(class), p.contains(class)) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassScores {
        class,
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
        support: tp + fn_,
    }
}

pub fn multilabel_prf(truth: &[LabelSet], pred: &[LabelSet], exclude: &[Class]) -> Result<Scores> {
    if truth.len() != pred.len() {
        return Err(Error::Eval(alloc::format!(
            "{} true label sets but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let per_class: Vec<ClassScores> = Class::ALL.iter().map(|&c| class_scores(truth, pred, c)).collect();
    let kept: Vec<&ClassScores> = per_class.iter().filter(|s| !exclude.contains(&s.class)).collect();
    let support: u32 = kept.iter().map(|s| s.support).sum();
    let weigh = |f: fn(&ClassScores) -> f64| {
        if support == 0 {
            0.0
        } else {
            kept.iter().map(|s| s.support as f64 * f(s)).sum::<f64>() / support as f64
        }
    };
    let mut excluded = exclude.to_vec();
    excluded.sort();
    excluded.dedup();
    Ok(Scores {
        weighted: Averaged {
            precision: weigh(|s| s.precision),
            recall: weigh(|s| s.recall),
            f1: weigh(|s| s.f1),
            support,
        },
        per_class,
        excluded,
    })
}

/// Rows are true classes, columns predicted classes. For every true class `t`
/// of a sample: `(t, t)` is incremented when `t` was predicted; `(t, p)` is
/// incremented for every predicted `p` outside the true set; and when `t`
/// was missed, `(t, p)` is also incremented for the predicted classes that
/// are true, so a dual-labelled head predicted as one of its classes still
/// records the miss. Row sums can therefore exceed class supports.
pub fn confusion_matrix(truth: &[LabelSet], pred: &[LabelSet]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::Eval("truth and prediction lengths differ".into()));
    }
    let mut m = [[0u32; Class::COUNT]; Class::COUNT];
    for (t, p) in truth.iter().zip(pred) {
        for tc in t.iter() {
            if p.contains(tc) {
                m[tc.index()][tc.index()] += 1;
            }
            let missed = !p.contains(tc);
            for pc in p.iter().filter(|&c| c != tc && (missed || !t.contains(c))) {
                m[tc.index()][pc.index()] += 1;
            }
        }
    }
    Ok(m)
}

pub fn misclassified(truth: &[LabelSet], pred: &[LabelSet]) -> usize {
    truth.iter().zip(pred).filter(|(t, p)| t != p).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn l(s: &str) -> LabelSet {
        s.parse().unwrap()
    }

    #[test]
    fn hand_fixture() {
        let truth = vec![l("Pattern1"), l("Pattern1"), l("Pattern2")];
        let pred = vec![l("Pattern1"), l("Pattern2"), l("Pattern2")];
        let s = multilabel_prf(&truth, &pred, &[]).unwrap();
        let a = s.per_class[0];
        let b = s.per_class[1];
        assert_eq!((a.precision, a.recall), (1.0, 0.5));
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((b.precision, b.recall), (0.5, 1.0));
        assert!((s.weighted.precision - 5.0 / 6.0).abs() < 1e-15);
        assert!((s.weighted.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.weighted.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.weighted.support, 3);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let truth = vec![l("Pattern1|Pattern2"), l("Other"), l("Pattern5")];
        let s = multilabel_prf(&truth, &truth, &[]).unwrap();
        assert_eq!((s.weighted.precision, s.weighted.recall, s.weighted.f1), (1.0, 1.0, 1.0));
        // zero-support classes carry no weight
        assert_eq!(s.per_class[2].support, 0);
        let m = confusion_matrix(&truth, &truth).unwrap();
        assert_eq!(m[0][0] + m[1][1] + m[4][4] + m[5][5], 4);
        assert_eq!(m.iter().flatten().sum::<u32>(), 4);
    }

    #[test]
    fn exclusion_drops_class_from_weighting() {
        let truth = vec![l("Other"), l("Pattern1")];
        let pred = vec![l("Pattern1"), l("Pattern1")];
        let all = multilabel_prf(&truth, &pred, &[]).unwrap();
        let no_other = multilabel_prf(&truth, &pred, &[Class::Other]).unwrap();
        assert_eq!(all.weighted.support, 2);
        assert_eq!(no_other.weighted.support, 1);
        assert_eq!(no_other.weighted.recall, 1.0);
        assert_eq!(no_other.weighted.precision, 0.5);
    }

    #[test]
    fn confusion_conventions() {
        let m = confusion_matrix(&[l("Pattern5")], &[l("Pattern4")]).unwrap();
        let total: u32 = m.iter().flatten().sum();
        assert_eq!((m[4][3], total), (1, 1));

        let m = confusion_matrix(&[l("Pattern1|Pattern2")], &[l("Pattern1")]).unwrap();
        assert_eq!((m[0][0], m[1][0]), (1, 1));
        assert_eq!(m.iter().flatten().sum::<u32>(), 2);
        let m = confusion_matrix(&[l("Pattern1|Pattern2")], &[l("Pattern1|Pattern3")]).unwrap();
        assert_eq!((m[0][0], m[0][2], m[1][2]), (1, 1, 1));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(multilabel_prf(&[l("Other")], &[], &[]), Err(Error::Eval(_))));
    }
}
