//! Files and command line around `ppics-core`: CSV ingestion, the parallel
//! start runner, run manifests, SVG scatter plots and the `pp` binary.

pub mod cli;
pub mod error;
pub mod io;
pub mod manifest;
pub mod runner;
pub mod svg;
