//! Experiment harness behind the `quadenv` binary: seeded Monte-Carlo
//! sweeps, cardinality histograms, constants tables, and their CSV/JSON/SVG
//! reports.

pub mod harness;
pub mod report;
pub mod svg;
