//! Command implementations. Each command reads its inputs, writes its
//! artifacts, and returns the summary line printed on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use nozzlelog_core::classifiers::{BaseModel, ModelSpec};
use nozzlelog_core::digest::sha256_hex;
use nozzlelog_core::eval::{
    compare_reports, cross_val_models, fit_fold, importance_report, kfold_tune, loocv, stratified_folds,
    CvOutcome, Dataset, EvalReport,
};
use nozzlelog_core::features::extract_matrix;
use nozzlelog_core::nozzle::NozzleLog;
use nozzlelog_core::rules::RuleSet;
use nozzlelog_core::synth::generate_dataset;
use nozzlelog_core::{rng, Class, LabelSet};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{artifact, log as logfile, manifest, matrix, rules};
use crate::report;

pub const MANIFEST: &str = "manifest.csv";
pub const LOG_DIR: &str = "logs";
pub const FEATURES: &str = "features.csv";
pub const CATALOG_DIGEST: &str = "catalog.sha256";

/// Seed stream of the final fit on all heads, apart from every fold.
const FULL_FIT_STREAM: u64 = u64::MAX;
const IMPORTANCE_TOP: usize = 10;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn generate(cfg: &RunConfig) -> Result<String> {
    let seed = cfg.seed()?;
    let mut spec = cfg.dataset.clone();
    spec.seed = seed;
    let out = cfg.out_dir();
    let logs_dir = out.join(LOG_DIR);
    create_dir(&logs_dir)?;
    let data = generate_dataset(&spec)?;
    data.logs
        .par_iter()
        .try_for_each(|log| logfile::write_log(&logs_dir.join(format!("{}.tsv", log.head_id())), log))?;
    write(&out.join(MANIFEST), &manifest::render_manifest(&data.manifest))?;
    let labels: usize = data.manifest.iter().map(|(_, l)| l.len()).sum();
    Ok(format!("heads={} labels={labels}", data.manifest.len()))
}

fn read_inputs(data: &Path) -> Result<(Vec<(String, LabelSet)>, Vec<NozzleLog>)> {
    let rows = manifest::read_manifest(&data.join(MANIFEST))?;
    let logs = rows
        .par_iter()
        .map(|(head, _)| {
            let path = data.join(LOG_DIR).join(format!("{head}.tsv"));
            let mut logs = logfile::read_logs(&path)?;
            match (logs.len(), logs.first().map(|l| l.head_id() == head)) {
                (1, Some(true)) => Ok(logs.remove(0)),
                _ => Err(CliError::parse(&path, 0, format!("expected records of head {head} only"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, logs))
}

pub fn features(cfg: &RunConfig) -> Result<String> {
    let (_, logs) = read_inputs(&cfg.data)?;
    let m = extract_matrix(&logs, &cfg.catalog)?;
    let (m, _) = m.sorted_by_head();
    let out = cfg.out_dir();
    create_dir(out)?;
    write(&out.join(FEATURES), &matrix::render_matrix(&m))?;
    let digest = cfg.catalog.digest();
    write(&out.join(CATALOG_DIGEST), &format!("{digest}\n"))?;
    Ok(format!("heads={} columns={} catalog={digest}", m.n_rows(), m.n_cols()))
}

/// Feature matrix joined with the manifest labels.
pub fn load_dataset(data: &Path) -> Result<Dataset> {
    let path = data.join(FEATURES);
    let m = matrix::read_matrix(&path)?;
    let rows = manifest::read_manifest(&data.join(MANIFEST))?;
    let mut labels = Vec::with_capacity(m.n_rows());
    for head in m.head_ids() {
        let l = rows
            .iter()
            .find(|(h, _)| h == head)
            .ok_or_else(|| CliError::Usage(format!("head {head} in {} is not in the manifest", path.display())))?;
        labels.push(l.1);
    }
    if rows.len() != m.n_rows() {
        return Err(CliError::Usage(format!(
            "manifest lists {} heads but the feature matrix has {}",
            rows.len(),
            m.n_rows()
        )));
    }
    Ok(Dataset::new(m, labels)?)
}

fn write_report(out: &Path, r: &EvalReport) -> Result<()> {
    write(&out.join("report.md"), &report::render_markdown(r))?;
    write(&out.join("report.csv"), &report::render_csv(r))?;
    write(&out.join("confusion.svg"), &report::render_confusion_svg(r))
}

fn summary(r: &EvalReport) -> String {
    format!(
        "model={} weighted_f1={:.4} misclassified={}",
        r.model, r.scores.weighted.f1, r.misclassified
    )
}

/// Cross-validated evaluation of one model. Every warning is logged.
pub fn cross_validate(data: &Dataset, cfg: &RunConfig, spec: &ModelSpec) -> Result<CvOutcome> {
    let seed = cfg.seed()?;
    let outcome = if cfg.loocv {
        loocv(data, spec, &cfg.pipeline, seed, &cfg.exclude)?
    } else {
        let (assign, warnings) = stratified_folds(data.labels(), cfg.folds, seed)?;
        for w in &warnings {
            warn!("{w}");
        }
        let mut o = cross_val_models(data, std::slice::from_ref(spec), &assign, &cfg.pipeline, seed, &cfg.exclude)?
            .pop()
            .expect("one outcome");
        o.report.warnings.splice(0..0, warnings);
        o
    };
    for w in &outcome.report.warnings {
        warn!("{w}");
    }
    Ok(outcome)
}

pub fn evaluate(cfg: &RunConfig) -> Result<String> {
    let seed = cfg.seed()?;
    let data = load_dataset(&cfg.data)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    create_dir(&out)?;
    info!("evaluating {} on {} heads", cfg.model, data.len());
    let outcome = cross_validate(&data, cfg, &cfg.model)?;
    write_report(&out, &outcome.report)?;

    let all: Vec<usize> = (0..data.len()).collect();
    let fit = fit_fold(&data, &all, &cfg.model, &cfg.pipeline, rng::derive(seed, FULL_FIT_STREAM))?;
    for w in &fit.warnings {
        warn!("final fit: {w}");
    }
    write(&out.join("pipeline.txt"), &artifact::render_pipeline(&fit.pipeline))?;
    write(
        &out.join("model.txt"),
        &artifact::render_model(&cfg.model, fit.pipeline.selected.len(), &fit.classifier),
    )?;
    if cfg.model.supports_importance() {
        let tables = importance_report(
            &fit.classifier,
            &cfg.model.name(),
            &fit.pipeline.selected_names(),
            IMPORTANCE_TOP,
        )?;
        write(&out.join("importance.md"), &report::render_importance(&cfg.model.to_string(), &tables))?;
    }
    Ok(summary(&outcome.report))
}

pub fn load_rules(cfg: &RunConfig) -> Result<RuleSet> {
    match &cfg.rules {
        Some(p) => rules::read_rules(p),
        None => Ok(rules::default_rules()),
    }
}

/// Applies a rule set to every head.
pub fn baseline_report(data: &Dataset, rules_set: &RuleSet, exclude: &[Class]) -> Result<EvalReport> {
    let bound = rules_set.bind(data.features().columns())?;
    let pred: Vec<LabelSet> = (0..data.len()).map(|i| bound.evaluate(data.features().row(i))).collect();
    let text = rules::render_rules(rules_set);
    let digest = sha256_hex(text.as_bytes());
    Ok(EvalReport::from_predictions(
        format!("baseline(rules={})", &digest[..12]),
        0,
        data.features().header_digest(),
        data.digest(),
        data.labels(),
        &pred,
        exclude,
        0,
        Vec::new(),
    )?)
}

pub fn baseline(cfg: &RunConfig) -> Result<String> {
    let data = load_dataset(&cfg.data)?;
    let rules_set = load_rules(cfg)?;
    let r = baseline_report(&data, &rules_set, &cfg.exclude)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    create_dir(&out)?;
    write_report(&out, &r)?;
    write(&out.join("rules.txt"), &rules::render_rules(&rules_set))?;
    Ok(summary(&r))
}

pub fn compare(a: &Path, b: &Path, out: Option<&Path>) -> Result<String> {
    let ra = report::read_csv(a)?;
    let rb = report::read_csv(b)?;
    let cmp = compare_reports(&ra, &rb)?;
    let text = report::render_comparison(&cmp);
    if let Some(out) = out {
        create_dir(out)?;
        write(&out.join("comparison.md"), &text)?;
    }
    Ok(text.trim_end().to_string())
}

/// Parameter grid for `model`: `default`, or `;`-separated override lists
/// such as `n_trees=25,max_depth=10;n_trees=50`.
pub fn parse_grid(model: &ModelSpec, grid: &str) -> Result<Vec<ModelSpec>> {
    let sets: Vec<String> = if grid.trim() == "default" {
        let product = |a: (&str, &[&str]), b: (&str, &[&str])| -> Vec<String> {
            a.1.iter()
                .flat_map(|x| b.1.iter().map(move |y| format!("{}={x},{}={y}", a.0, b.0)))
                .collect()
        };
        match model.base {
            BaseModel::Forest(_) => product(("n_trees", &["25", "50", "100"]), ("max_depth", &["10", "20"])),
            BaseModel::DecisionTree(_) => product(("max_depth", &["5", "10", "20"]), ("min_samples_split", &["2", "5"])),
            BaseModel::Knn { .. } => ["1", "3", "5", "9", "15"].iter().map(|k| format!("k={k}")).collect(),
            BaseModel::LogReg(_) => ["0.001", "0.01", "0.1"].iter().map(|l| format!("l2={l}")).collect(),
        }
    } else {
        grid.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    };
    if sets.is_empty() {
        return Err(CliError::Usage("parameter grid is empty".into()));
    }
    sets.iter()
        .map(|set| {
            let mut spec = *model;
            for kv in set.split(',') {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("expected key=value in grid, found `{kv}`")))?;
                spec.set_param(k.trim(), v.trim())?;
            }
            Ok(spec)
        })
        .collect()
}

pub fn tune(cfg: &RunConfig) -> Result<String> {
    let seed = cfg.seed()?;
    let data = load_dataset(&cfg.data)?;
    let grid = parse_grid(&cfg.model, &cfg.grid)?;
    let result = kfold_tune(&data, &grid, cfg.folds, &cfg.pipeline, seed)?;
    for w in &result.warnings {
        warn!("{w}");
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    create_dir(&out)?;
    write(&out.join("tuning.md"), &report::render_tuning(&result))?;
    let best = result.best_spec();
    write(&out.join("best.txt"), &format!("{best}\n"))?;
    Ok(format!("best={best} mean_f1={:.4}", result.table[result.best].mean_f1))
}
