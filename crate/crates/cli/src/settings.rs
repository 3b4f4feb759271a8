//! Layered settings: command-line flag, then `FRICTIONBENCH_<KEY>` from the
//! environment, then the `--config` file, then the built-in default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const ENV_PREFIX: &str = "FRICTIONBENCH_";

#[derive(Debug, Default, Clone)]
pub struct Settings {
    file: BTreeMap<String, String>,
}

fn env_key(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_ascii_uppercase().replace('-', "_"))
}

impl Settings {
    /// Reads a flat `key = value` TOML file. Nested tables are rejected.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let table: toml::Table = text.parse().with_context(|| format!("parsing config {}", path.display()))?;
        let mut file = BTreeMap::new();
        for (k, v) in table {
            let v = match v {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                other => bail!("config key {k}: expected a scalar, got {}", other.type_str()),
            };
            file.insert(k.replace('_', "-"), v);
        }
        Ok(Self { file })
    }

    pub fn raw(&self, key: &str) -> Option<String> {
        std::env::var(env_key(key))
            .ok()
            .or_else(|| self.file.get(key).cloned())
    }

    /// `flag` wins, then environment, then file.
    pub fn get<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("setting {key}={v:?}: {e}")),
        }
    }

    pub fn or<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }

    pub fn require<T>(&self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key, flag)?
            .ok_or_else(|| anyhow!("missing --{key} (or {} / config key {key})", env_key(key)))
    }
}
