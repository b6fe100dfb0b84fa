//! Run configuration, field catalog and problem files.

mod catalog;
mod config;
mod problem;

pub use catalog::{catalog_field, is_catalog_name, CATALOG};
pub use config::{
    g_entries, load_config, parse_config, parse_entries, parse_real, resolve, ConfigErrors, ConfigIssue, FieldSource,
    GSpec, Mode, RawConfig, RunConfig, SpaceProfile, StartMode, SweepSpec, DEFAULT_SEED,
};
pub use problem::{assemble_problem, build_grid, initial_state, load_field, manufacture, read_problem, source, write_problem, Manufactured};

use std::path::Path;

use thiserror::Error;

use crate::forward::ForwardError;
use crate::inverse::InverseError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Field(String),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes `provenance.txt`: the crate version, the command and the resolved
/// configuration.
pub fn write_provenance(dir: &Path, command: &str, cfg: &RunConfig) -> Result<(), IoError> {
    std::fs::create_dir_all(dir)?;
    let text = format!("# cbf {}\n# command: {command}\n{}", env!("CARGO_PKG_VERSION"), cfg.render());
    std::fs::write(dir.join("provenance.txt"), text)?;
    Ok(())
}
