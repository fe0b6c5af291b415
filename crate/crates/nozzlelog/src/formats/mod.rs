//! On-disk formats: logs, manifests, feature matrices, rules and fitted
//! artifacts.

pub mod artifact;
pub mod log;
pub mod manifest;
pub mod matrix;
pub mod rules;
