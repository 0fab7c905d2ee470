//! The `qsep` command line: lemma checks, experiments, sweeps and the
//! acceptance suite, all reporting rows with a pass flag.

pub mod acceptance;
pub mod app;
pub mod checks;
pub mod config;
pub mod report;
pub mod run;
