//! Classifier suite and the one-vs-rest multi-label wrapper.

pub mod forest;
pub mod knn;
pub mod logreg;
pub mod ovr;
pub mod tree;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use forest::{fit_forest, gini_importance, Forest, ForestParams};
pub use knn::{fit_knn, Knn};
pub use logreg::{fit_logreg, LogReg, LogRegParams};
pub use ovr::{Classifier, OvrModel};
pub use tree::{fit_tree, gini, DecisionTree, MaxFeatures, Splitter, TreeParams};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    ExtraTrees,
    Knn,
    LogReg,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "dt",
            ModelKind::RandomForest => "rf",
            ModelKind::ExtraTrees => "et",
            ModelKind::Knn => "knn",
            ModelKind::LogReg => "logreg",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dt" => ModelKind::DecisionTree,
            "rf" => ModelKind::RandomForest,
            "et" => ModelKind::ExtraTrees,
            "knn" => ModelKind::Knn,
            "logreg" | "lr" => ModelKind::LogReg,
            _ => return Err(Error::Config(format!("unknown model `{s}`"))),
        })
    }
}

/// A base learner with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseModel {
    DecisionTree(TreeParams),
    Forest(ForestParams),
    Knn { k: usize },
    LogReg(LogRegParams),
}

impl BaseModel {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::DecisionTree => BaseModel::DecisionTree(TreeParams::default()),
            ModelKind::RandomForest => BaseModel::Forest(ForestParams::random_forest()),
            ModelKind::ExtraTrees => BaseModel::Forest(ForestParams::extra_trees()),
            ModelKind::Knn => BaseModel::Knn { k: 5 },
            ModelKind::LogReg => BaseModel::LogReg(LogRegParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            BaseModel::DecisionTree(_) => ModelKind::DecisionTree,
            BaseModel::Forest(p) if p.bootstrap => ModelKind::RandomForest,
            BaseModel::Forest(_) => ModelKind::ExtraTrees,
            BaseModel::Knn { .. } => ModelKind::Knn,
            BaseModel::LogReg(_) => ModelKind::LogReg,
        }
    }

    /// Fits a binary scorer on 0/1 targets.
    pub fn fit_binary(&self, x: &Matrix, y: &[bool], seed: u64) -> Result<BinaryModel> {
        let yi: Vec<usize> = y.iter().map(|&b| b as usize).collect();
        Ok(match self {
            BaseModel::DecisionTree(p) => BinaryModel::Tree(fit_tree(x, &yi, 2, p, seed)?),
            BaseModel::Forest(p) => BinaryModel::Forest(fit_forest(x, &yi, 2, p, seed)?),
            BaseModel::Knn { k } => BinaryModel::Knn(fit_knn(x, &yi, 2, *k)?),
            BaseModel::LogReg(p) => BinaryModel::LogReg(fit_logreg(x, y, p)?),
        })
    }
}

/// Model choice: a base learner, optionally wrapped one-vs-rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub base: BaseModel,
    pub ovr: bool,
}

impl ModelSpec {
    pub fn new(base: BaseModel, ovr: bool) -> Self {
        ModelSpec { base, ovr }
    }

    pub fn name(&self) -> String {
        if self.ovr {
            format!("ovr-{}", self.base.kind().name())
        } else {
            String::from(self.base.kind().name())
        }
    }

    /// Parameters as `key=value` pairs in a fixed order.
    pub fn params(&self) -> Vec<(&'static str, String)> {
        let mf = |m: MaxFeatures| match m {
            MaxFeatures::All => String::from("all"),
            MaxFeatures::Sqrt => String::from("sqrt"),
            MaxFeatures::Count(k) => format!("{k}"),
        };
        match self.base {
            BaseModel::DecisionTree(p) => alloc::vec![
                ("max_depth", format!("{}", p.max_depth)),
                ("min_samples_split", format!("{}", p.min_samples_split)),
                ("max_features", mf(p.max_features)),
            ],
            BaseModel::Forest(p) => alloc::vec![
                ("n_trees", format!("{}", p.n_trees)),
                ("max_depth", format!("{}", p.max_depth)),
                ("min_samples_split", format!("{}", p.min_samples_split)),
                ("max_features", mf(p.max_features)),
            ],
            BaseModel::Knn { k } => alloc::vec![("k", format!("{k}"))],
            BaseModel::LogReg(p) => alloc::vec![
                ("l2", format!("{}", p.l2)),
                ("epochs", format!("{}", p.epochs)),
                ("lr", format!("{}", p.lr)),
            ],
        }
    }

    pub fn supports_importance(&self) -> bool {
        matches!(self.base, BaseModel::Forest(_))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name())?;
        for (i, (k, v)) in self.params().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str(")")
    }
}

impl ModelSpec {
    /// Overrides one hyperparameter by its `params()` key.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
        }
        let mf = |v: &str| -> Result<MaxFeatures> {
            Ok(match v {
                "all" => MaxFeatures::All,
                "sqrt" => MaxFeatures::Sqrt,
                _ => MaxFeatures::Count(num(key, v)?),
            })
        };
        let name = self.name();
        let unknown = || Error::Config(format!("model {name} has no parameter `{key}`"));
        match &mut self.base {
            BaseModel::DecisionTree(p) => match key {
                "max_depth" => p.max_depth = num(key, value)?,
                "min_samples_split" => p.min_samples_split = num(key, value)?,
                "max_features" => p.max_features = mf(value)?,
                _ => return Err(unknown()),
            },
            BaseModel::Forest(p) => match key {
                "n_trees" => p.n_trees = num(key, value)?,
                "max_depth" => p.max_depth = num(key, value)?,
                "min_samples_split" => p.min_samples_split = num(key, value)?,
                "max_features" => p.max_features = mf(value)?,
                _ => return Err(unknown()),
            },
            BaseModel::Knn { k } => match key {
                "k" => *k = num(key, value)?,
                _ => return Err(unknown()),
            },
            BaseModel::LogReg(p) => match key {
                "l2" => p.l2 = num(key, value)?,
                "epochs" => p.epochs = num(key, value)?,
                "lr" => p.lr = num(key, value)?,
                _ => return Err(unknown()),
            },
        }
        Ok(())
    }
}

/// `dt`, `rf`, `et`, `knn` or `logreg`, optionally prefixed with `ovr-` and
/// followed by parameter overrides in parentheses, as in
/// `ovr-rf(n_trees=100,max_depth=10)`.
impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Config(format!("unbalanced parentheses in `{s}`")))?;
                (&s[..i], Some(inner))
            }
            None => (s, None),
        };
        let (ovr, base) = match head.strip_prefix("ovr-") {
            Some(rest) => (true, rest),
            None => (false, head),
        };
        let mut spec = ModelSpec::new(BaseModel::default_for(base.parse()?), ovr);
        for kv in args.into_iter().flat_map(|a| a.split(',')).filter(|kv| !kv.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, found `{kv}`")))?;
            spec.set_param(k.trim(), v.trim())?;
        }
        Ok(spec)
    }
}

/// Fitted binary scorer returning the probability of the positive class.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryModel {
    Tree(DecisionTree),
    Forest(Forest),
    Knn(Knn),
    LogReg(LogReg),
    Constant(f64),
}

impl BinaryModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        match self {
            BinaryModel::Tree(t) => t.predict_proba(row)[1],
            BinaryModel::Forest(f) => f.predict_proba(row)[1],
            BinaryModel::Knn(k) => k.predict_proba(row)[1],
            BinaryModel::LogReg(m) => m.score(row),
            BinaryModel::Constant(c) => *c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_names_round_trip() {
        for name in ["dt", "rf", "et", "knn", "logreg", "ovr-rf", "ovr-knn"] {
            let spec: ModelSpec = name.parse().unwrap();
            assert_eq!(spec.name(), name);
        }
        assert!("ovr-svm".parse::<ModelSpec>().is_err());
        let rf: ModelSpec = "ovr-rf".parse().unwrap();
        assert_eq!(alloc::format!("{rf}"), "ovr-rf(n_trees=50,max_depth=20,min_samples_split=2,max_features=sqrt)");
        for name in ["ovr-rf", "et", "dt", "ovr-knn", "logreg"] {
            let spec: ModelSpec = name.parse().unwrap();
            assert_eq!(alloc::format!("{spec}").parse::<ModelSpec>().unwrap(), spec);
        }
        let small: ModelSpec = "rf(n_trees=5, max_features=3)".parse().unwrap();
        assert_eq!(small.params()[0].1, "5");
        assert_eq!(small.params()[3].1, "3");
        assert!("knn(n_trees=5)".parse::<ModelSpec>().is_err());
        assert!("knn(k=x)".parse::<ModelSpec>().is_err());
        assert!("knn(k=3".parse::<ModelSpec>().is_err());
    }
}
