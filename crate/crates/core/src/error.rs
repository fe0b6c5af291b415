use alloc::string::String;

use crate::nozzle::Class;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("nozzle log is empty")]
    EmptyLog,
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dataset generation failed: {0}")]
    Generation(String),
    #[error("feature selection failed: {0}")]
    Selector(String),
    #[error("model fit failed: {0}")]
    Fit(String),
    #[error("class {0} has no positive training rows")]
    MissingClass(Class),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid rule set: {0}")]
    RuleConfig(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("model `{0}` does not expose feature importances")]
    UnsupportedModel(String),
}
