//! Layered configuration: defaults < TOML file < command-line flags.
//!
//! Each command's argument struct doubles as its config schema. Flags that
//! were not given serialize to nothing, so overlaying the flag table on the
//! file table and deserializing the result gives the merged settings. Unknown
//! keys in the file are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Bad invocation: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Path>) -> Result<T> {
    let mut table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|_| usage(format!("config file not found: {}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    let overrides = toml::Table::try_from(flags).context("serializing flags")?;
    table.extend(overrides);
    toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
        let src = file.map_or_else(|| "flags".to_string(), |p| p.display().to_string());
        usage(format!("{src}: {}", e.message()))
    })
}

/// `path` must exist; otherwise a usage error naming it.
pub fn existing(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let p = path.clone().ok_or_else(|| usage(format!("missing --{what}")))?;
    if !p.exists() {
        return Err(usage(format!("{what} path does not exist: {}", p.display())));
    }
    Ok(p)
}

pub fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone().ok_or_else(|| usage(format!("missing --{flag}")))
}

pub fn echo<T: Serialize>(cfg: &T) -> Result<String> {
    toml::to_string(cfg).context("serializing resolved config")
}
