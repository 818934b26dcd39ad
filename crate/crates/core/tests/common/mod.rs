#![allow(dead_code)]

pub mod augmentation;
pub mod drift_streams;
pub mod grad_check;
pub mod join_oracle;
pub mod rules_oracle;
pub mod runs;
pub mod staging_faults;
