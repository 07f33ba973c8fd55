//! Plain `key = value` configuration files mirroring the command-line
//! flags; flags always override file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::errors::{CliError, CliResult};

pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn empty() -> Self {
        Self {
            values: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Data(format!(
                    "config {} line {}: expected 'key = value'",
                    path.display(),
                    lineno + 1
                )));
            };
            values.insert(
                key.trim().replace('-', "_").to_ascii_lowercase(),
                value.trim().to_string(),
            );
        }
        Ok(Self { values })
    }

    /// Flag value if given, else the config entry.
    pub fn merge_str(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.values.get(key).cloned())
    }

    /// Parsed flag value if given, else the parsed config entry.
    pub fn merge<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Usage(format!("config key '{key}': cannot parse '{raw}'"))
            }),
        }
    }

    /// True when the flag was set or the config entry is a truthy word.
    pub fn merge_flag(&self, flag: bool, key: &str) -> bool {
        flag || matches!(
            self.values.get(key).map(String::as_str),
            Some("true") | Some("yes") | Some("1") | Some("on")
        )
    }
}
