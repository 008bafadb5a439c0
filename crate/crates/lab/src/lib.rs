//! Std companion to `lowrank-core`: pattern and value files, report
//! envelopes, rayon drivers, named experiments and the `lowrank` binary.

pub mod cli;
pub mod files;
pub mod parallel;
pub mod presets;
pub mod report;
