//! Failure-mechanism classification for inkjet printhead nozzle logs.
//!
//! The crate is `no_std` with `alloc`. It carries the whole numeric path:
//!
//! * [`nozzle`]: nozzle grids, log records, first-record-per-job downsampling
//!   and the five-channel count series.
//! * [`synth`]: a seeded generator of labelled nozzle logs for six failure
//!   archetypes.
//! * [`features`]: time-based and spatial feature functions and the column
//!   catalog that turns a log into a fixed-width vector.
//! * [`pipeline`]: imputation, standard scaling and L1 linear-model feature
//!   selection.
//! * [`classifiers`]: CART trees, random forests, extra trees, kNN, logistic
//!   regression and the one-vs-rest multi-label wrapper.
//! * [`rules`]: a threshold rule engine used as a comparison baseline.
//! * [`eval`]: multi-label metrics, confusion matrices, LOOCV, stratified
//!   k-fold tuning, importance tables and report comparison.
//!
//! File formats, the rule-file parser and the command-line driver live in the
//! `nozzlelog` crate. Enable the `parallel` feature to spread folds, trees and
//! heads across a rayon pool; results do not depend on the worker count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod classifiers;
pub mod digest;
pub mod error;
pub mod eval;
pub mod features;
pub mod matrix;
pub mod nozzle;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod rules;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use nozzle::{Class, LabelSet, NfcState, NozzleGrid, NozzleLog};
