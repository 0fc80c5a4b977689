//! Config-driven runs, figure presets and CSV output.

mod config;
mod output;
mod presets;

pub use config::{
    apply_override, parse_config, validate_config, BlockSpec, CapacitySpec, ConfigError,
    ExperimentConfig, FileSpec, PriceSpec, ScenarioSpec, StorageSpec,
};
pub use output::{format_number, write_outputs, Manifest, Table};
pub use presets::{preset_names, run_config, run_preset, PresetOutput};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("unknown preset '{0}' (expected one of fig2..fig7)")]
    UnknownPreset(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}
