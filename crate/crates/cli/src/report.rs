//! Report envelope shared by every command: the effective config, a build
//! identifier, and the command's payload.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct BuildInfo {
    pub name: &'static str,
    pub version: &'static str,
    /// `git describe`-style identifier injected at build time when available.
    pub build_id: &'static str,
}

impl BuildInfo {
    pub fn current() -> Self {
        BuildInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            build_id: option_env!("TABCL_BUILD_ID").unwrap_or("unreleased"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub command: String,
    pub build: BuildInfo,
    pub seed: u64,
    pub config_fingerprint: String,
    pub config: RunConfig,
    pub result: T,
}

/// FNV-1a over the serialized effective config; embedded in reports so runs
/// can be matched to their exact settings.
pub fn config_fingerprint(config: &RunConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    format!("{h:016x}")
}

/// Serializes the envelope and writes `<out_dir>/<name>.json`.
pub fn write_report<T: Serialize>(
    config: &RunConfig,
    command: &str,
    name: &str,
    result: T,
) -> Result<PathBuf, CliError> {
    let report = Report {
        command: command.to_string(),
        build: BuildInfo::current(),
        seed: config.seed,
        config_fingerprint: config_fingerprint(config),
        config: config.clone(),
        result,
    };
    let path = config.paths.out_dir.join(format!("{name}.json"));
    write_json(&path, &report)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| {
                CliError::runtime(format!("cannot create {}: {e}", dir.display()))
            })?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::runtime(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}
