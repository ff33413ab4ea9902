//! File formats, seeded experiments, verification suites and the command
//! line front end for `fjopt-core`.

pub mod cli;
pub mod format;
pub mod generate;
pub mod number;
pub mod report;
pub mod suites;

pub use fjopt_core as core;
