//! File formats, parallel scans and the command line for `moran-core`.

pub mod cli;
pub mod report;
pub mod scan;
pub mod specio;
pub mod treeio;
