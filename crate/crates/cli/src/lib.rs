//! Pipeline stages behind the `uti2speech` command.

pub mod config;
pub mod error;
pub mod stages;

pub use config::{Engine, FeatureKind, PipelineConfig};
pub use error::{CliError, CliResult};
