//! Command-line harness: config parsing, file formats, and the drivers
//! behind each subcommand. The library API does the actual math; this
//! module turns JSON configs into library calls and results into files.

pub mod cli;
pub mod config;
pub mod io;
pub mod pipeline;
pub mod regress;
pub mod sweep;

/// Named column extractor, the row type of the summary tables.
pub(crate) type Column<T> = (&'static str, fn(&T) -> f64);
