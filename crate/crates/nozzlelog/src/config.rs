//! Run configuration: an optional TOML file merged with command-line flags
//! (flags win). Relative paths are resolved against the working directory.
//!
//! ```toml
//! seed = 42
//! data = "data"
//! out = "runs/rf"
//! model = "ovr-rf"
//! folds = 10
//! loocv = true
//! exclude = ["Other"]
//!
//! [dataset.counts]
//! Pattern1 = 121
//! "Pattern1|Pattern2" = 6
//!
//! [dataset.params.Pattern5]
//! noise_rate = 0.0
//!
//! [catalog]
//! autocorrelation_lags = [1, 2, 5]
//!
//! [selector]
//! strength = 0.01
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use nozzlelog_core::classifiers::ModelSpec;
use nozzlelog_core::features::{CatalogSpec, FeatureCatalog};
use nozzlelog_core::pipeline::{PipelineConfig, SelectorConfig};
use nozzlelog_core::synth::{DatasetSpec, SpatialMode};
use nozzlelog_core::{Class, LabelSet};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: Option<String>,
    pub rules: Option<PathBuf>,
    pub folds: Option<usize>,
    pub loocv: Option<bool>,
    pub grid: Option<String>,
    pub exclude: Option<Vec<String>>,
    pub dataset: Option<DatasetSection>,
    pub catalog: Option<CatalogSection>,
    pub selector: Option<SelectorSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Label set (`Pattern1|Pattern2` style) to head count; listed sets
    /// replace the default composition, and a count of 0 drops the set.
    pub counts: Option<BTreeMap<String, usize>>,
    pub params: Option<BTreeMap<String, ParamsSection>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub n_steps: Option<(u32, u32)>,
    pub onset: Option<f64>,
    pub intensity: Option<(u32, u32)>,
    pub nfc_mix: Option<[f64; 5]>,
    pub spatial_mode: Option<String>,
    pub noise_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSection {
    pub channels: Option<Vec<usize>>,
    pub autocorrelation_lags: Option<Vec<usize>>,
    pub derivative_orders: Option<Vec<usize>>,
    pub quantiles: Option<Vec<f64>>,
    pub peak_supports: Option<Vec<usize>>,
    pub entropy_bins: Option<Vec<usize>>,
    pub r_sigmas: Option<Vec<f64>>,
    pub spatial: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorSection {
    pub strength: Option<f64>,
    pub max_epochs: Option<usize>,
    pub tol: Option<f64>,
    pub fallback_top: Option<usize>,
    pub enabled: Option<bool>,
}

/// Values given on the command line; `None` defers to the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: Option<String>,
    pub rules: Option<PathBuf>,
    pub folds: Option<usize>,
    pub loocv: bool,
    pub grid: Option<String>,
    pub exclude: Vec<String>,
}

/// Fully resolved settings of one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub data: PathBuf,
    pub out: Option<PathBuf>,
    pub model: ModelSpec,
    pub rules: Option<PathBuf>,
    pub folds: usize,
    pub loocv: bool,
    pub grid: String,
    pub exclude: Vec<Class>,
    pub dataset: DatasetSpec,
    pub catalog: FeatureCatalog,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    /// The seed, which every randomized command requires.
    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| CliError::Usage("a seed is required: pass --seed or set `seed` in the config".into()))
    }

    pub fn out_dir(&self) -> &Path {
        self.out.as_deref().unwrap_or(&self.data)
    }
}

pub fn parse_file(path: &Path, text: &str) -> Result<FileConfig> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        CliError::parse(path, line, e.message().to_string())
    })
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn dataset_spec(section: Option<&DatasetSection>, seed: u64) -> Result<DatasetSpec> {
    let mut spec = DatasetSpec::default_with_seed(seed);
    let Some(section) = section else {
        return Ok(spec);
    };
    if let Some(counts) = &section.counts {
        let mut class_counts = Vec::new();
        for (labels, &n) in counts {
            let set: LabelSet = labels.parse().map_err(|e: nozzlelog_core::Error| config_err(e.to_string()))?;
            if n > 0 {
                class_counts.push((set, n));
            }
        }
        class_counts.sort_by_key(|(l, _)| (l.len(), l.primary(), l.bits()));
        spec.class_counts = class_counts;
    }
    for (name, p) in section.params.iter().flatten() {
        let class: Class = name.parse().map_err(|e: nozzlelog_core::Error| config_err(e.to_string()))?;
        let target = spec.params.get_mut(&class).expect("defaults cover every class");
        if let Some(v) = p.n_steps {
            target.n_steps = v;
        }
        if let Some(v) = p.onset {
            target.onset = v;
        }
        if let Some(v) = p.intensity {
            target.intensity = v;
        }
        if let Some(v) = p.nfc_mix {
            target.nfc_mix = v;
        }
        if let Some(v) = &p.spatial_mode {
            target.spatial_mode = SpatialMode::parse(v)?;
        }
        if let Some(v) = p.noise_rate {
            target.noise_rate = v;
        }
    }
    Ok(spec)
}

fn catalog(section: Option<&CatalogSection>) -> Result<FeatureCatalog> {
    let mut spec = CatalogSpec::default();
    if let Some(s) = section {
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = &s.$f { spec.$f = v.clone(); })*};
        }
        take!(autocorrelation_lags, derivative_orders, quantiles, peak_supports, entropy_bins, r_sigmas);
        if let Some(ch) = &s.channels {
            // Channels are numbered 1..=5 in files, like the column prefixes.
            if ch.contains(&0) {
                return Err(config_err("catalog channels are numbered from 1"));
            }
            spec.channels = ch.iter().map(|c| c - 1).collect();
        }
        if let Some(v) = s.spatial {
            spec.spatial = v;
        }
    }
    Ok(FeatureCatalog::from_spec(&spec)?)
}

fn pipeline(section: Option<&SelectorSection>) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(s) = section {
        let d = SelectorConfig::default();
        cfg.selector = SelectorConfig {
            strength: s.strength.unwrap_or(d.strength),
            max_epochs: s.max_epochs.unwrap_or(d.max_epochs),
            tol: s.tol.unwrap_or(d.tol),
            fallback_top: s.fallback_top.unwrap_or(d.fallback_top),
        };
        cfg.select = s.enabled.unwrap_or(true);
        if !(cfg.selector.strength > 0.0) {
            return Err(config_err("selector strength must be positive"));
        }
    }
    Ok(cfg)
}

/// Merges `file` with `flags`.
pub fn resolve(file: FileConfig, flags: Overrides) -> Result<RunConfig> {
    let seed = flags.seed.or(file.seed);
    let model_text = flags.model.or(file.model).unwrap_or_else(|| "ovr-rf".into());
    let model: ModelSpec = model_text
        .parse()
        .map_err(|e: nozzlelog_core::Error| config_err(e.to_string()))?;
    let exclude_names = if flags.exclude.is_empty() {
        file.exclude.unwrap_or_default()
    } else {
        flags.exclude
    };
    let exclude = exclude_names
        .iter()
        .map(|n| n.parse::<Class>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| config_err(e.to_string()))?;
    let rules = flags.rules.or(file.rules);
    if let Some(r) = &rules {
        if !r.is_file() {
            return Err(config_err(format!("rule file {} does not exist", r.display())));
        }
    }
    let folds = flags.folds.or(file.folds).unwrap_or(10);
    if folds < 2 {
        return Err(config_err("--folds must be at least 2"));
    }
    Ok(RunConfig {
        seed,
        data: flags.data.or(file.data).unwrap_or_else(|| PathBuf::from("data")),
        out: flags.out.or(file.out),
        model,
        rules,
        folds,
        loocv: flags.loocv || file.loocv.unwrap_or(false),
        grid: flags.grid.or(file.grid).unwrap_or_else(|| "default".into()),
        exclude,
        dataset: dataset_spec(file.dataset.as_ref(), seed.unwrap_or(0))?,
        catalog: catalog(file.catalog.as_ref())?,
        pipeline: pipeline(file.selector.as_ref())?,
    })
}

/// Loads the config file (if any) and applies the flags.
pub fn load(path: Option<&Path>, flags: Overrides) -> Result<RunConfig> {
    let file = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_file(p, &text)?
        }
        None => FileConfig::default(),
    };
    resolve(file, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        resolve(parse_file(Path::new("c.toml"), text)?, Overrides::default())
    }

    #[test]
    fn defaults_without_file() {
        let c = resolve(FileConfig::default(), Overrides::default()).unwrap();
        assert!(c.seed().is_err());
        assert_eq!(c.model.name(), "ovr-rf");
        assert_eq!(c.folds, 10);
        assert_eq!(c.dataset.n_heads(), 411);
        assert_eq!(c.catalog.names().len(), 256);
    }

    #[test]
    fn file_values_and_flag_precedence() {
        let text = "seed = 3\nmodel = \"ovr-knn\"\nexclude = [\"Other\"]\n[dataset.counts]\nPattern4 = 2\nOther = 0\n\"Pattern1|Pattern2\" = 1\n[dataset.params.Pattern4]\nintensity = [12, 20]\n[catalog]\nchannels = [1, 4]\n[selector]\nstrength = 0.5\n";
        let file = parse_file(Path::new("c.toml"), text).unwrap();
        let c = resolve(
            file,
            Overrides {
                seed: Some(9),
                ..Overrides::default()
            },
        )
        .unwrap();
        assert_eq!(c.seed().unwrap(), 9);
        assert_eq!(c.dataset.seed, 9);
        assert_eq!(c.model.name(), "ovr-knn");
        assert_eq!(c.exclude, vec![Class::Other]);
        assert_eq!(c.dataset.n_heads(), 3);
        assert_eq!(c.dataset.params[&Class::Pattern4].intensity, (12, 20));
        assert!(c.catalog.names().iter().all(|n| n.starts_with("ch1") || n.starts_with("ch4") || n.starts_with("spatial")));
        assert_eq!(c.pipeline.selector.strength, 0.5);
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(matches!(parse("seed = \"x\"\n"), Err(CliError::Parse { line: 1, .. })));
        assert!(parse("unknown = 1\n").is_err());
        assert!(parse("model = \"svm\"\n").is_err());
        assert!(parse("rules = \"/nonexistent/rules\"\n").is_err());
        assert!(parse("[dataset.counts]\nPattern9 = 1\n").is_err());
        assert!(parse("[catalog]\nchannels = [0]\n").is_err());
        assert!(parse("folds = 1\n").is_err());
    }
}
