//! Command-line front end: JSON run configs, experiment drivers and file
//! outputs.

pub mod config;
pub mod output;
pub mod run;

use std::path::Path;

use crate::Error;

pub use config::{validate_text, Diagnostic, Experiment, RunConfig};
pub use run::{design, run, RunOutput, Stamp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Json(_) => EXIT_CONFIG,
        Error::SpectrumSingular { .. } | Error::Degenerate(_) => EXIT_NUMERICAL,
        Error::Io(_) => EXIT_IO,
    }
}

/// Config file as parsed, its raw text and its SHA-256.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub text: String,
    pub sha256: String,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, Error> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
    let config = RunConfig::from_json(&text)?;
    let sha256 = output::sha256_hex(text.as_bytes());
    Ok(LoadedConfig { config, text, sha256 })
}
