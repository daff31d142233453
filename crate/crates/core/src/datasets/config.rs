use std::collections::BTreeMap;

use thiserror::Error;

/// Seed plus named size controls for a generator.
///
/// The text form is TOML with top-level integer keys: an optional `seed`
/// and any of the generator's control names. Omitted controls keep their
/// defaults.
///
/// ```text
/// seed = 7
/// nManagers = 40
/// nTasks = 300
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub size_controls: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("unknown size control `{0}`")]
    UnknownControl(String),
    #[error("`{0}` must be a non-negative integer")]
    BadValue(String),
}

impl GenConfig {
    pub fn new(seed: u64, size_controls: BTreeMap<String, usize>) -> Self {
        GenConfig { seed, size_controls }
    }

    pub fn control(&self, name: &str) -> usize {
        self.size_controls.get(name).copied().unwrap_or(0)
    }

    pub fn set(&mut self, name: &str, value: usize) -> &mut Self {
        self.size_controls.insert(name.to_string(), value);
        self
    }

    /// Overlays `text` on `self`. Only control names already present are
    /// accepted.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        for (key, value) in table {
            let n = value
                .as_integer()
                .filter(|n| *n >= 0)
                .ok_or_else(|| ConfigError::BadValue(key.clone()))?;
            if key == "seed" {
                self.seed = n as u64;
            } else if let Some(slot) = self.size_controls.get_mut(&key) {
                *slot = usize::try_from(n).map_err(|_| ConfigError::BadValue(key.clone()))?;
            } else {
                return Err(ConfigError::UnknownControl(key));
            }
        }
        Ok(())
    }

    /// All controls scaled by `factor`, seed unchanged.
    pub fn scaled(&self, names: &[&str], factor: usize) -> Self {
        let mut out = self.clone();
        for n in names {
            if let Some(v) = out.size_controls.get_mut(*n) {
                *v *= factor;
            }
        }
        out
    }

    pub fn zeroed(&self) -> Self {
        let mut out = self.clone();
        out.size_controls.values_mut().for_each(|v| *v = 0);
        out
    }

    /// TOML text accepted by [`GenConfig::apply_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = format!("seed = {}\n", self.seed);
        for (k, v) in &self.size_controls {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
