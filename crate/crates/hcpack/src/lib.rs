//! File formats, run manifests, report emission and the command line for
//! `hcpack-core`.

pub mod cli;
pub mod format;
pub mod manifest;
pub mod report;
pub mod reproduce;

pub use format::{ConfigFile, FamilyFile, FormatError, InstanceFile, PackingFile};
pub use manifest::RunManifest;
pub use reproduce::{reproduce, Bundle, ReproduceOptions, SummaryRow};
