//! IO companion to the `selfaffine` core: the on-disk IFS model format,
//! JSON report types for the CLI, and PGM encoding of raster output.

pub mod format;
pub mod pgm;
pub mod report;
