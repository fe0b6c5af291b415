#![allow(dead_code)]

pub mod features;
pub mod metrics;
