//! Cross-validation drivers. Every fold refits the preprocessing pipeline
//! on its own training rows. Fold `i` draws its randomness from
//! `derive(seed, i)`, so folds may run concurrently in any order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::metrics::multilabel_prf;
use super::report::EvalReport;
use super::Dataset;
use crate::classifiers::{Classifier, ModelSpec};
use crate::error::{Error, Result};
use crate::nozzle::{Class, LabelSet};
use crate::pipeline::{FittedPipeline, PipelineConfig};
use crate::{par, rng};

#[derive(Debug, Clone, PartialEq)]
pub struct FoldFit {
    pub pipeline: FittedPipeline,
    pub classifier: Classifier,
    pub warnings: Vec<String>,
}

impl FoldFit {
    pub fn predict_rows(&self, data: &Dataset, rows: &[usize]) -> Result<Vec<LabelSet>> {
        let (x, _) = data.subset(rows);
        let z = self.pipeline.transform(&x)?;
        Ok(self.classifier.predict_matrix(z.values()))
    }
}

/// Fits the pipeline on `train` rows only.
pub fn fit_pipeline(
    data: &Dataset,
    train: &[usize],
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<FittedPipeline> {
    let (x, y) = data.subset(train);
    FittedPipeline::fit(&x, &y, cfg, seed)
}

/// Pipeline plus classifier on `train` rows; classes missing from the
/// training rows degrade to constant-zero scorers with a warning.
pub fn fit_fold(
    data: &Dataset,
    train: &[usize],
    spec: &ModelSpec,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<FoldFit> {
    let pipeline = fit_pipeline(data, train, cfg, seed)?;
    let (x, y) = data.subset(train);
    let z = pipeline.transform(&x)?;
    let (classifier, warnings) = Classifier::fit(spec, z.values(), &y, rng::derive(seed, 1), true)?;
    Ok(FoldFit {
        pipeline,
        classifier,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: EvalReport,
    /// Held-out predictions in canonical head order.
    pub predictions: Vec<LabelSet>,
    pub fitted_pipelines: usize,
}

pub fn loocv(
    data: &Dataset,
    spec: &ModelSpec,
    cfg: &PipelineConfig,
    seed: u64,
    exclude: &[Class],
) -> Result<CvOutcome> {
    Ok(loocv_models(data, core::slice::from_ref(spec), cfg, seed, exclude)?
        .pop()
        .expect("one outcome per model"))
}

/// Leave-one-out for several models over the same folds; see
/// [`cross_val_models`].
pub fn loocv_models(
    data: &Dataset,
    specs: &[ModelSpec],
    cfg: &PipelineConfig,
    seed: u64,
    exclude: &[Class],
) -> Result<Vec<CvOutcome>> {
    if data.len() < 2 {
        return Err(Error::Eval("leave-one-out needs at least two heads".into()));
    }
    let assign: Vec<usize> = (0..data.len()).collect();
    cross_val_models(data, specs, &assign, cfg, seed, exclude)
}

/// Held-out predictions for every head under the fold assignment
/// `assign` (head `i` belongs to fold `assign[i]`).
///
/// Each fold's pipeline is fitted once and shared by all models, and every
/// model sees the same fold seed `derive(seed, fold)`, so each outcome
/// equals a separate single-model run.
pub fn cross_val_models(
    data: &Dataset,
    specs: &[ModelSpec],
    assign: &[usize],
    cfg: &PipelineConfig,
    seed: u64,
    exclude: &[Class],
) -> Result<Vec<CvOutcome>> {
    let n = data.len();
    if assign.len() != n {
        return Err(Error::Eval("fold assignment does not cover every head".into()));
    }
    let k = assign.iter().max().map_or(0, |m| m + 1);
    let folds = par::map_indexed(k, |f| -> Result<(Vec<usize>, Vec<Vec<LabelSet>>, Vec<Vec<String>>)> {
        let test: Vec<usize> = (0..n).filter(|&i| assign[i] == f).collect();
        if test.is_empty() {
            return Ok((test, Vec::new(), Vec::new()));
        }
        let train: Vec<usize> = (0..n).filter(|&i| assign[i] != f).collect();
        let fold_seed = rng::derive(seed, f as u64);
        let pipeline = fit_pipeline(data, &train, cfg, fold_seed)?;
        let (xtr, ytr) = data.subset(&train);
        let (xte, _) = data.subset(&test);
        let ztr = pipeline.transform(&xtr)?;
        let zte = pipeline.transform(&xte)?;
        let mut preds = Vec::with_capacity(specs.len());
        let mut warns = Vec::with_capacity(specs.len());
        for spec in specs {
            let (m, w) = Classifier::fit(spec, ztr.values(), &ytr, rng::derive(fold_seed, 1), true)?;
            preds.push(m.predict_matrix(zte.values()));
            warns.push(w.into_iter().map(|w| format!("fold {f}: {w}")).collect());
        }
        Ok((test, preds, warns))
    });
    let empty = LabelSet::single(Class::Other);
    let mut per_model: Vec<(Vec<LabelSet>, Vec<String>)> =
        specs.iter().map(|_| (alloc::vec![empty; n], Vec::new())).collect();
    for fold in folds {
        let (test, preds, warns) = fold?;
        for ((slot, p), w) in per_model.iter_mut().zip(preds).zip(warns) {
            for (&i, l) in test.iter().zip(p) {
                slot.0[i] = l;
            }
            slot.1.extend(w);
        }
    }
    specs
        .iter()
        .zip(per_model)
        .map(|(spec, (predictions, warnings))| {
            let report = EvalReport::from_predictions(
                format!("{spec}"),
                seed,
                data.features().header_digest(),
                data.digest(),
                data.labels(),
                &predictions,
                exclude,
                k,
                warnings,
            )?;
            Ok(CvOutcome {
                report,
                predictions,
                fitted_pipelines: k,
            })
        })
        .collect()
}

/// Stratified fold assignment on each row's primary label.
///
/// Members of each class are shuffled with a seeded generator and dealt
/// round-robin, continuing where the previous class stopped so fold sizes
/// stay balanced. Classes smaller than `k` produce a warning.
pub fn stratified_folds(labels: &[LabelSet], k: usize, seed: u64) -> Result<(Vec<usize>, Vec<String>)> {
    if k < 2 || k > labels.len() {
        return Err(Error::Config(format!(
            "fold count {k} must lie in 2..={}",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<Class, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.primary()).or_default().push(i);
    }
    let mut fold = alloc::vec![0usize; labels.len()];
    let mut warnings = Vec::new();
    let mut next = 0usize;
    for (c, mut members) in by_class {
        if members.len() < k {
            warnings.push(format!(
                "class {c} has {} members, fewer than {k} folds; assigning round-robin",
                members.len()
            ));
        }
        members.shuffle(&mut rng::rng_for(rng::derive(seed, c.index() as u64)));
        for m in members {
            fold[m] = next % k;
            next += 1;
        }
    }
    Ok((fold, warnings))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneRow {
    pub spec: ModelSpec,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: usize,
    pub table: Vec<TuneRow>,
    pub warnings: Vec<String>,
}

impl TuneResult {
    pub fn best_spec(&self) -> &ModelSpec {
        &self.table[self.best].spec
    }
}

/// Grid search by stratified k-fold CV. The objective is the mean
/// weighted F1 over folds with `Other` excluded; ties go to the earlier
/// grid entry.
pub fn kfold_tune(
    data: &Dataset,
    grid: &[ModelSpec],
    k: usize,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::Config("parameter grid is empty".into()));
    }
    let (assign, mut warnings) = stratified_folds(data.labels(), k, seed)?;
    let n = data.len();
    let per_fold = par::map_indexed(k, |f| -> Result<(Vec<f64>, Vec<String>)> {
        let train: Vec<usize> = (0..n).filter(|&i| assign[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| assign[i] == f).collect();
        let fold_seed = rng::derive(seed, f as u64);
        let pipeline = fit_pipeline(data, &train, cfg, fold_seed)?;
        let (xtr, ytr) = data.subset(&train);
        let (xte, yte) = data.subset(&test);
        let ztr = pipeline.transform(&xtr)?;
        let zte = pipeline.transform(&xte)?;
        let mut scores = Vec::with_capacity(grid.len());
        let mut warnings = Vec::new();
        for spec in grid {
            let (m, w) = Classifier::fit(spec, ztr.values(), &ytr, rng::derive(fold_seed, 1), true)?;
            warnings.extend(w.into_iter().map(|w| format!("fold {f}: {w}")));
            let pred = m.predict_matrix(zte.values());
            scores.push(multilabel_prf(&yte, &pred, &[Class::Other])?.weighted.f1);
        }
        Ok((scores, warnings))
    });
    let mut fold_scores = Vec::with_capacity(k);
    for r in per_fold {
        let (s, w) = r?;
        fold_scores.push(s);
        warnings.extend(w);
    }
    let table: Vec<TuneRow> = grid
        .iter()
        .enumerate()
        .map(|(g, spec)| {
            let fold_f1: Vec<f64> = fold_scores.iter().map(|s| s[g]).collect();
            TuneRow {
                spec: *spec,
                mean_f1: fold_f1.iter().sum::<f64>() / k as f64,
                fold_f1,
            }
        })
        .collect();
    let mut best = 0;
    for (g, row) in table.iter().enumerate() {
        if row.mean_f1 > table[best].mean_f1 {
            best = g;
        }
    }
    Ok(TuneResult {
        best,
        table,
        warnings,
    })
}
