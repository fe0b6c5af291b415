//! Evaluation harness: metrics, leave-one-out and stratified k-fold
//! cross-validation, importance tables and report comparison.

pub mod compare;
pub mod cv;
pub mod importance;
pub mod metrics;
pub mod report;

use alloc::string::String;
use alloc::vec::Vec;

use crate::digest;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::nozzle::LabelSet;

pub use compare::{compare_reports, Comparison, ComparisonRow, Prf, Winner};
pub use cv::{fit_fold, fit_pipeline, cross_val_models, kfold_tune, loocv, loocv_models, stratified_folds, CvOutcome, FoldFit, TuneResult, TuneRow};
pub use importance::{importance_report, ImportanceTable};
pub use metrics::{confusion_matrix, multilabel_prf, ConfusionMatrix, Scores};
pub use report::EvalReport;

/// Feature rows with their true label sets, held in canonical order
/// (ascending head id) so file order never affects results.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<LabelSet>,
}

impl Dataset {
    pub fn new(features: FeatureMatrix, labels: Vec<LabelSet>) -> Result<Self> {
        if features.n_rows() != labels.len() {
            return Err(Error::Schema("label count does not match feature rows".into()));
        }
        let (features, order) = features.sorted_by_head();
        let labels: Vec<LabelSet> = order.iter().map(|&i| labels[i]).collect();
        if features.head_ids().windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Schema("duplicate head ids".into()));
        }
        Ok(Dataset { features, labels })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[LabelSet] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> (FeatureMatrix, Vec<LabelSet>) {
        (
            self.features.select_rows(rows),
            rows.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// SHA-256 over the canonical `head_id<TAB>labels` listing.
    pub fn digest(&self) -> String {
        let lines: Vec<String> = self
            .features
            .head_ids()
            .iter()
            .zip(&self.labels)
            .map(|(h, l)| alloc::format!("{h}\t{l}"))
            .collect();
        digest::names_digest(&lines)
    }
}
