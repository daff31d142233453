//! Bundled datasets and the size-controlled generators for the two large
//! case studies.
//!
//! Each generator reads its fixed rule set and its attribute
//! distributions from files under `data/`; see `workforce.toml` and
//! `edocument.toml` for the documented constants.

mod config;
pub mod edocument;
mod model;
pub mod workforce;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;

pub use config::{ConfigError, GenConfig};
pub use edocument::generate_edocument;
pub use workforce::generate_workforce;

use crate::policy::{parse_policy, parse_rules, Entity, ParseError, Policy};

#[derive(Deserialize)]
struct ModelFile<T> {
    defaults: toml::Table,
    model: T,
}

fn defaults_from(text: &str) -> GenConfig {
    let file: ModelFile<toml::Table> = toml::from_str(text).expect("embedded model file");
    let mut cfg = GenConfig::new(0, Default::default());
    for (k, v) in file.defaults {
        let n = v.as_integer().expect("integer default");
        if k == "seed" {
            cfg.seed = n as u64;
        } else {
            cfg.set(&k, n as usize);
        }
    }
    cfg
}

fn model_from<T: DeserializeOwned>(text: &str) -> T {
    let file: ModelFile<T> = toml::from_str(text).expect("embedded model file");
    file.model
}

fn assemble(name: &str, users: Vec<Entity>, resources: Vec<Entity>, rules: &str) -> Policy {
    let mut b = Policy::builder(name);
    for e in users.into_iter().chain(resources) {
        b.add_entity(e).expect("generated entity");
    }
    let rules = parse_rules(rules, b.schema()).expect("embedded rules");
    for r in rules {
        b.add_rule(r).expect("embedded rule");
    }
    b.build().expect("generated policy")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Workforce,
    Edocument,
}

impl Generator {
    pub const ALL: [Generator; 2] = [Generator::Workforce, Generator::Edocument];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Workforce => "workforce",
            Generator::Edocument => "e-document",
        }
    }

    pub fn default_config(self) -> GenConfig {
        match self {
            Generator::Workforce => workforce::default_config(),
            Generator::Edocument => edocument::default_config(),
        }
    }

    pub fn generate(self, cfg: &GenConfig) -> Policy {
        match self {
            Generator::Workforce => generate_workforce(cfg),
            Generator::Edocument => generate_edocument(cfg),
        }
    }

    pub fn user_controls(self) -> &'static [&'static str] {
        match self {
            Generator::Workforce => &workforce::USER_CONTROLS,
            Generator::Edocument => &edocument::USER_CONTROLS,
        }
    }

    pub fn resource_controls(self) -> &'static [&'static str] {
        match self {
            Generator::Workforce => &workforce::RESOURCE_CONTROLS,
            Generator::Edocument => &edocument::RESOURCE_CONTROLS,
        }
    }

    pub fn rules_text(self) -> &'static str {
        match self {
            Generator::Workforce => workforce::rules_text(),
            Generator::Edocument => edocument::rules_text(),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown generator `{0}` (expected workforce or edocument)")]
pub struct UnknownGenerator(pub String);

impl FromStr for Generator {
    type Err = UnknownGenerator;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "workforce" => Ok(Generator::Workforce),
            "edocument" | "e-document" => Ok(Generator::Edocument),
            _ => Err(UnknownGenerator(s.to_string())),
        }
    }
}

/// Bundled policy sources, in display order.
pub const BUNDLED: [(&str, &str); 5] = [
    ("healthcare", include_str!("../../data/healthcare.abac")),
    ("project-mgmt", include_str!("../../data/project-mgmt.abac")),
    ("university", include_str!("../../data/university.abac")),
    ("workforce", include_str!("../../data/workforce.abac")),
    ("e-document", include_str!("../../data/e-document.abac")),
];

pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn bundled_datasets() -> Vec<(String, Policy)> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let p = parse_policy(text, name).expect("bundled dataset parses");
            (name.to_string(), p)
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
}

/// Every `*.abac` file in `dir`, named by file stem, sorted by name.
pub fn load_dir(dir: &Path) -> Result<Vec<(String, Policy)>, LoadError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| LoadError::Io { path, source }
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "abac") && p.is_file())
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let p = parse_policy(&text, &name).map_err(|source| LoadError::Parse {
            path: path.clone(),
            source,
        })?;
        out.push((name, p));
    }
    Ok(out)
}
