//! Set-arithmetic oracle for multi-label scores and the confusion matrix.

use std::collections::BTreeSet;

use nozzlelog_core::{Class, LabelSet};
use rand::Rng;

pub struct OracleClass {
    pub tp: u32,
    pub fp: u32,
    pub fn_: u32,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn set(l: LabelSet) -> BTreeSet<Class> {
    Class::ALL.into_iter().filter(|c| l.contains(*c)).collect()
}

pub fn per_class(truth: &[LabelSet], pred: &[LabelSet], c: Class) -> OracleClass {
    let with_c = |ls: &[LabelSet]| -> BTreeSet<usize> {
        (0..ls.len()).filter(|&i| set(ls[i]).contains(&c)).collect()
    };
    let t = with_c(truth);
    let p = with_c(pred);
    let tp = t.intersection(&p).count() as u32;
    let fp = p.difference(&t).count() as u32;
    let fn_ = t.difference(&p).count() as u32;
    let div = |a: u32, b: u32| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fn_);
    // Harmonic mean written as 2TP / (2TP + FP + FN).
    let f1 = div(2 * tp, 2 * tp + fp + fn_);
    OracleClass { tp, fp, fn_, precision, recall, f1 }
}

/// Support-weighted (precision, recall, f1) over the kept classes.
pub fn weighted(truth: &[LabelSet], pred: &[LabelSet], exclude: &[Class]) -> (f64, f64, f64) {
    let mut acc = (0.0, 0.0, 0.0);
    let mut total = 0u32;
    for c in Class::ALL.into_iter().filter(|c| !exclude.contains(c)) {
        let s = per_class(truth, pred, c);
        let w = (s.tp + s.fn_) as f64;
        total += s.tp + s.fn_;
        acc.0 += w * s.precision;
        acc.1 += w * s.recall;
        acc.2 += w * s.f1;
    }
    if total == 0 {
        return (0.0, 0.0, 0.0);
    }
    let t = total as f64;
    (acc.0 / t, acc.1 / t, acc.2 / t)
}

/// For each true class `t`: a hit adds `(t, t)`; every predicted class
/// outside the true set adds `(t, p)`; a miss also adds `(t, p)` for the
/// predicted classes inside the true set.
pub fn confusion(truth: &[LabelSet], pred: &[LabelSet]) -> [[u32; 6]; 6] {
    let mut m = [[0u32; 6]; 6];
    for (t, p) in truth.iter().zip(pred) {
        let (ts, ps) = (set(*t), set(*p));
        for tc in &ts {
            if ps.contains(tc) {
                m[tc.index()][tc.index()] += 1;
            } else {
                for pc in ps.intersection(&ts) {
                    m[tc.index()][pc.index()] += 1;
                }
            }
            for pc in ps.difference(&ts) {
                m[tc.index()][pc.index()] += 1;
            }
        }
    }
    m
}

pub fn random_label<R: Rng>(rng: &mut R) -> LabelSet {
    if rng.gen_bool(0.25) {
        return LabelSet::single(Class::Other);
    }
    loop {
        let bits: u8 = rng.gen_range(1..32);
        if bits.count_ones() <= 3 {
            return LabelSet::from_bits(bits).unwrap();
        }
    }
}

pub fn random_exclusion<R: Rng>(rng: &mut R) -> Vec<Class> {
    Class::ALL.into_iter().filter(|_| rng.gen_bool(0.15)).collect()
}
