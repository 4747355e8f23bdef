use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Exit code 2: invalid input. Exit code 3: valid input outside the supported scope.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<randmeas::Error> for CliError {
    fn from(e: randmeas::Error) -> Self {
        Self { code: if e.is_unsupported() { 3 } else { 2 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Optional TOML configuration. Top-level keys apply to every command; a table
/// named after the command overrides them. Command-line flags override both.
#[derive(Debug, Default)]
pub struct FileConfig {
    table: toml::Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
        let table = text.parse::<toml::Table>().map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
        Ok(Self { table })
    }

    fn lookup(&self, section: &str, key: &str) -> Option<&toml::Value> {
        self.table.get(section).and_then(|s| s.as_table()).and_then(|s| s.get(key)).or_else(|| self.table.get(key))
    }

    pub fn get<T: DeserializeOwned>(&self, section: &str, key: &str) -> CliResult<Option<T>> {
        self.lookup(section, key)
            .map(|v| v.clone().try_into().map_err(|e| CliError::validation(format!("config key '{key}': {e}"))))
            .transpose()
    }
}

/// Resolves parameters for one command and records them for the report header.
pub struct Ctx {
    file: FileConfig,
    section: String,
    pub echo: Map<String, Value>,
}

impl Ctx {
    pub fn new(file: FileConfig, section: &str) -> Self {
        Self { file, section: section.to_string(), echo: Map::new() }
    }

    pub fn opt<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file.get(&self.section, key)?,
        };
        if let Some(v) = &v {
            self.echo.insert(key.to_string(), serde_json::to_value(v).map_err(|e| CliError::validation(e.to_string()))?);
        }
        Ok(v)
    }

    pub fn req<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> CliResult<T> {
        self.opt(key, flag)?.ok_or_else(|| CliError::validation(format!("missing required parameter --{key}")))
    }

    pub fn or<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.echo.insert(key.to_string(), serde_json::to_value(&default).map_err(|e| CliError::validation(e.to_string()))?);
                Ok(default)
            }
        }
    }

    /// Seeds are mandatory for stochastic runs.
    pub fn seed(&mut self, flag: Option<u64>) -> CliResult<u64> {
        self.opt("seed", flag)?.ok_or_else(|| CliError::validation("--seed is required for stochastic runs"))
    }
}
