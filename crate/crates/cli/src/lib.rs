//! Command-line front end and file formats for `learnpool-core`: CIFAR-10
//! batch loading, `key = value` configs, model bundles, pool-map export and
//! metrics files.

pub mod bundle;
pub mod cifar;
pub mod commands;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod maps;
pub mod metrics;

pub use commands::run;
