//! One-vs-rest multi-label wrapper and the single-label alternative.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::tree::argmax;
use super::{fit_forest, fit_knn, fit_tree, BaseModel, BinaryModel, ModelSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nozzle::{Class, LabelSet};
use crate::{par, rng};

pub const THRESHOLD: f64 = 0.5;

/// One binary scorer per class, in canonical class order.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel {
    pub base: BaseModel,
    pub scorers: Vec<BinaryModel>,
}

impl OvrModel {
    /// Fits one scorer per class; class `c` uses seed `derive(seed, c)`.
    ///
    /// With `lenient`, a class without positive rows gets a constant-zero
    /// scorer and a warning instead of an error.
    pub fn fit(
        base: &BaseModel,
        x: &Matrix,
        labels: &[LabelSet],
        seed: u64,
        lenient: bool,
    ) -> Result<(Self, Vec<String>)> {
        if labels.len() != x.rows() {
            return Err(Error::Fit("label count does not match rows".into()));
        }
        let mut warnings = Vec::new();
        for c in Class::ALL {
            if !labels.iter().any(|l| l.contains(c)) {
                if !lenient {
                    return Err(Error::MissingClass(c));
                }
                warnings.push(format!("class {c} absent from training rows; scoring it as 0"));
            }
        }
        let fitted = par::map_indexed(Class::COUNT, |ci| {
            let c = Class::ALL[ci];
            let y: Vec<bool> = labels.iter().map(|l| l.contains(c)).collect();
            if !y.iter().any(|&b| b) {
                Ok(BinaryModel::Constant(0.0))
            } else {
                base.fit_binary(x, &y, rng::derive(seed, ci as u64))
            }
        });
        let scorers = fitted.into_iter().collect::<Result<Vec<_>>>()?;
        Ok((OvrModel { base: *base, scorers }, warnings))
    }

    pub fn scores(&self, row: &[f64]) -> [f64; Class::COUNT] {
        let mut s = [0.0; Class::COUNT];
        for (v, m) in s.iter_mut().zip(&self.scorers) {
            *v = m.score(row);
        }
        s
    }

    pub fn predict(&self, row: &[f64]) -> LabelSet {
        combine_scores(&self.scores(row))
    }
}

/// Turns per-class scores into a label set.
///
/// Every class scoring at least 0.5 is predicted. If none does, the single
/// highest-scoring class is returned (lowest index on ties). When `Other`
/// and some patterns pass together, the side with the higher top score wins
/// and patterns win a tie.
pub fn combine_scores(scores: &[f64; Class::COUNT]) -> LabelSet {
    let other = Class::Other.index();
    let passing: Vec<usize> = (0..Class::COUNT).filter(|&c| scores[c] >= THRESHOLD).collect();
    if passing.is_empty() {
        return LabelSet::single(Class::ALL[argmax(scores)]);
    }
    let patterns: Vec<usize> = passing.iter().copied().filter(|&c| c != other).collect();
    if patterns.is_empty() {
        return LabelSet::single(Class::Other);
    }
    let best_pattern = patterns.iter().map(|&c| scores[c]).fold(f64::MIN, f64::max);
    if passing.contains(&other) && scores[other] > best_pattern {
        return LabelSet::single(Class::Other);
    }
    LabelSet::from_classes(patterns.into_iter().map(|c| Class::ALL[c])).expect("non-empty patterns")
}

/// Single-label model trained on each row's primary class.
#[derive(Debug, Clone, PartialEq)]
pub enum MulticlassModel {
    Tree(super::DecisionTree),
    Forest(super::Forest),
    Knn(super::Knn),
    /// Logistic regression is binary; its multi-class form is the argmax of
    /// one-vs-rest scores.
    Scores(OvrModel),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Ovr(OvrModel),
    Multiclass(MulticlassModel),
}

impl Classifier {
    pub fn fit(
        spec: &ModelSpec,
        x: &Matrix,
        labels: &[LabelSet],
        seed: u64,
        lenient: bool,
    ) -> Result<(Self, Vec<String>)> {
        if spec.ovr {
            let (m, w) = OvrModel::fit(&spec.base, x, labels, seed, lenient)?;
            return Ok((Classifier::Ovr(m), w));
        }
        let y: Vec<usize> = labels.iter().map(|l| l.primary().index()).collect();
        let n = Class::COUNT;
        let model = match &spec.base {
            BaseModel::DecisionTree(p) => MulticlassModel::Tree(fit_tree(x, &y, n, p, seed)?),
            BaseModel::Forest(p) => MulticlassModel::Forest(fit_forest(x, &y, n, p, seed)?),
            BaseModel::Knn { k } => MulticlassModel::Knn(fit_knn(x, &y, n, *k)?),
            BaseModel::LogReg(_) => {
                let (m, w) = OvrModel::fit(&spec.base, x, labels, seed, true)?;
                return Ok((Classifier::Multiclass(MulticlassModel::Scores(m)), w));
            }
        };
        Ok((Classifier::Multiclass(model), Vec::new()))
    }

    pub fn predict(&self, row: &[f64]) -> LabelSet {
        match self {
            Classifier::Ovr(m) => m.predict(row),
            Classifier::Multiclass(m) => {
                let c = match m {
                    MulticlassModel::Tree(t) => t.predict(row),
                    MulticlassModel::Forest(f) => f.predict(row),
                    MulticlassModel::Knn(k) => k.predict(row),
                    MulticlassModel::Scores(o) => argmax(&o.scores(row)),
                };
                LabelSet::single(Class::ALL[c])
            }
        }
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Vec<LabelSet> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    /// Forests per class (OVR) or the single forest, for importance reports.
    pub fn forests(&self) -> Vec<(Option<Class>, &super::Forest)> {
        match self {
            Classifier::Ovr(m) => m
                .scorers
                .iter()
                .enumerate()
                .filter_map(|(i, s)| match s {
                    BinaryModel::Forest(f) => Some((Some(Class::ALL[i]), f)),
                    _ => None,
                })
                .collect(),
            Classifier::Multiclass(MulticlassModel::Forest(f)) => alloc::vec![(None, f)],
            Classifier::Multiclass(_) => Vec::new(),
        }
    }
}
