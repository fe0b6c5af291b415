//! Preprocessing chain: mean imputation, standard scaling and L1 model-based
//! feature selection. Every statistic comes from the fitting rows only.

pub mod l1;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, Matrix};
use crate::nozzle::LabelSet;

pub use l1::{fit_l1_selector, SelectorConfig, Selection};

/// Imputation and scaling statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputeScale {
    /// Fill value per column (mean of the observed values, 0 if none).
    pub impute: Vec<f64>,
    pub mean: Vec<f64>,
    /// Population standard deviation, replaced by 1 where it is 0.
    pub scale: Vec<f64>,
}

pub fn fit_impute_scale(train: &Matrix) -> Result<ImputeScale> {
    if train.rows() < 2 {
        return Err(Error::Fit("imputation and scaling need at least two rows".into()));
    }
    let mut impute = Vec::with_capacity(train.cols());
    let mut mean = Vec::with_capacity(train.cols());
    let mut scale = Vec::with_capacity(train.cols());
    for j in 0..train.cols() {
        let col = train.column(j);
        let observed: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        let fill = if observed.is_empty() {
            0.0
        } else {
            crate::stats::mean(&observed)
        };
        let filled: Vec<f64> = col.iter().map(|v| if v.is_nan() { fill } else { *v }).collect();
        let mu = crate::stats::mean(&filled);
        let sd = crate::stats::std(&filled);
        impute.push(fill);
        mean.push(mu);
        scale.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
    }
    Ok(ImputeScale { impute, mean, scale })
}

impl ImputeScale {
    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        let v = if v.is_nan() { self.impute[j] } else { v };
        (v - self.mean[j]) / self.scale[j]
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = self.transform_value(j, *v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub selector: SelectorConfig,
    /// Skip L1 selection and keep all columns.
    pub select: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            selector: SelectorConfig::default(),
            select: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub columns: Vec<String>,
    pub stats: ImputeScale,
    pub selected: Vec<usize>,
    pub used_fallback: bool,
    pub seed: u64,
    pub catalog_digest: String,
    pub strength: f64,
}

impl FittedPipeline {
    pub fn fit(
        train: &FeatureMatrix,
        labels: &[LabelSet],
        cfg: &PipelineConfig,
        seed: u64,
    ) -> Result<Self> {
        if labels.len() != train.n_rows() {
            return Err(Error::Schema("label count does not match feature rows".into()));
        }
        let stats = fit_impute_scale(train.values())?;
        let scaled = stats.transform(train.values());
        let (selected, used_fallback) = if cfg.select {
            let sel = fit_l1_selector(&scaled, labels, &cfg.selector)?;
            (sel.selected, sel.used_fallback)
        } else {
            ((0..train.n_cols()).collect(), false)
        };
        Ok(FittedPipeline {
            columns: train.columns().to_vec(),
            stats,
            selected,
            used_fallback,
            seed,
            catalog_digest: train.header_digest(),
            strength: cfg.selector.strength,
        })
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected.iter().map(|&j| self.columns[j].clone()).collect()
    }

    /// Impute, scale and project onto the selected columns.
    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.columns() != self.columns.as_slice() {
            return Err(Error::Schema(alloc::format!(
                "feature columns do not match the fitted catalog {}",
                self.catalog_digest
            )));
        }
        FeatureMatrix::new(
            x.head_ids().to_vec(),
            self.selected_names(),
            self.transform_values(x.values()),
        )
    }

    pub fn transform_values(&self, x: &Matrix) -> Matrix {
        let mut data = Vec::with_capacity(x.rows() * self.selected.len());
        for i in 0..x.rows() {
            let row = x.row(i);
            data.extend(self.selected.iter().map(|&j| self.stats.transform_value(j, row[j])));
        }
        Matrix::new(x.rows(), self.selected.len(), data).expect("shape")
    }
}
