use alloc::string::String;
use alloc::vec::Vec;

use super::metrics::{confusion_matrix, misclassified, multilabel_prf, ConfusionMatrix, Scores};
use crate::error::Result;
use crate::nozzle::{Class, LabelSet};

/// Scores, confusion matrix and run metadata of one evaluated model.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Model description, e.g. `ovr-rf(n_trees=50,...)` or `baseline(rules)`.
    pub model: String,
    pub seed: u64,
    pub catalog_digest: String,
    pub dataset_digest: String,
    pub n_heads: usize,
    /// Number of fitted folds (0 for models without training).
    pub folds: usize,
    pub scores: Scores,
    /// Heads whose predicted set differs from the true set.
    pub misclassified: usize,
    pub confusion: ConfusionMatrix,
    pub warnings: Vec<String>,
}

impl EvalReport {
    #[allow(clippy::too_many_arguments)]
    pub fn from_predictions(
        model: String,
        seed: u64,
        catalog_digest: String,
        dataset_digest: String,
        truth: &[LabelSet],
        pred: &[LabelSet],
        exclude: &[Class],
        folds: usize,
        warnings: Vec<String>,
    ) -> Result<Self> {
        Ok(EvalReport {
            model,
            seed,
            catalog_digest,
            dataset_digest,
            n_heads: truth.len(),
            folds,
            scores: multilabel_prf(truth, pred, exclude)?,
            misclassified: misclassified(truth, pred),
            confusion: confusion_matrix(truth, pred)?,
            warnings,
        })
    }

    pub fn excluded(&self) -> &[Class] {
        &self.scores.excluded
    }
}
