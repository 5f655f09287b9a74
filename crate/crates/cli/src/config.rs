//! Layered option lookup: command-line flag, then config file, then default.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Keys of a JSON config file are the long flag names without dashes,
/// e.g. `{"n-min": 10, "lr": 0.001}`.
#[derive(Debug, Default)]
pub struct Layers {
    file: Map<String, Value>,
}

impl Layers {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Layers::default()) };
        let text = crate::read_input(path)?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        match value {
            Value::Object(file) => Ok(Layers { file }),
            _ => Err(CliError::Input(format!("config {} must be a JSON object", path.display()))),
        }
    }

    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| CliError::Input(format!("config key {key:?}: {e}"))),
            None => Ok(default),
        }
    }

    /// Like [`Layers::pick`] for values parsed from strings (e.g. `"2/3"`).
    pub fn pick_parsed<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(Value::String(s)) => s.parse().map_err(|e| CliError::Input(format!("config key {key:?}: {e}"))),
            Some(other) => Err(CliError::Input(format!("config key {key:?}: expected a string, found {other}"))),
            None => Ok(default),
        }
    }

    pub fn flag(&self, flag: bool, key: &str, default: bool) -> Result<bool, CliError> {
        self.pick(flag.then_some(true), key, default)
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Write(path.display().to_string(), e))
}
