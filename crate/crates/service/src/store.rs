use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use abaclab::analytics::{statistics, PolicyStats};
use abaclab::datasets::{bundled_datasets, load_dir, LoadError};
use abaclab::{serialize_policy, Policy};
use serde::Serialize;

/// A stored policy with its statistics computed once at insert time.
#[derive(Debug)]
pub struct Entry {
    pub id: String,
    pub policy: Arc<Policy>,
    pub stats: PolicyStats,
    pub bundled: bool,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub id: String,
    pub name: String,
    pub bundled: bool,
    pub stats: PolicyStats,
}

impl Entry {
    fn new(id: String, policy: Policy, bundled: bool) -> Self {
        let stats = statistics(&policy);
        Entry {
            id,
            policy: Arc::new(policy),
            stats,
            bundled,
        }
    }

    pub fn summary(&self) -> Summary {
        Summary {
            id: self.id.clone(),
            name: self.policy.name().to_string(),
            bundled: self.bundled,
            stats: self.stats,
        }
    }
}

/// Policies keyed by id. Entries are immutable; inserts never replace.
#[derive(Debug, Default)]
pub struct PolicyStore {
    entries: RwLock<BTreeMap<String, Arc<Entry>>>,
    persist_dir: Option<PathBuf>,
}

/// Restricts an id to `[A-Za-z0-9_.-]`, mapping everything else to `-`.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '-'
            }
        })
        .collect();
    let s = s.trim_matches(|c| c == '-' || c == '.');
    if s.is_empty() {
        "policy".to_string()
    } else {
        s.to_string()
    }
}

impl PolicyStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_bundled() -> Self {
        let store = Self::new();
        for (id, p) in bundled_datasets() {
            store.insert_entry(Entry::new(id, p, true));
        }
        store
    }

    /// Loads every `.abac` file in `dir` and persists later uploads there.
    /// Files shadow bundled datasets of the same id.
    pub fn persist_to(mut self, dir: &Path) -> Result<Self, LoadError> {
        if !dir.exists() {
            std::fs::create_dir_all(dir).map_err(|source| LoadError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        let loaded = load_dir(dir)?;
        {
            let mut map = self.entries.write().expect("store lock");
            for (name, p) in loaded {
                let id = slug(&name);
                map.insert(id.clone(), Arc::new(Entry::new(id, p, false)));
            }
        }
        self.persist_dir = Some(dir.to_path_buf());
        Ok(self)
    }

    /// Adds or replaces a read-only dataset under `id`.
    pub fn insert_bundled(&self, id: &str, policy: Policy) {
        self.insert_entry(Entry::new(id.to_string(), policy, true));
    }

    fn insert_entry(&self, entry: Entry) {
        let mut map = self.entries.write().expect("store lock");
        map.insert(entry.id.clone(), Arc::new(entry));
    }

    pub fn get(&self, id: &str) -> Option<Arc<Entry>> {
        self.entries.read().expect("store lock").get(id).cloned()
    }

    pub fn list(&self) -> Vec<Summary> {
        self.entries
            .read()
            .expect("store lock")
            .values()
            .map(|e| e.summary())
            .collect()
    }

    /// Stores `policy` under a fresh id derived from `name`, suffixing `-2`,
    /// `-3`, ... on collision.
    pub fn insert(&self, name: &str, policy: Policy) -> io::Result<Arc<Entry>> {
        let base = slug(name);
        let mut entry = Entry::new(String::new(), policy, false);
        let mut map = self.entries.write().expect("store lock");
        let mut id = base.clone();
        let mut n = 1;
        while map.contains_key(&id) {
            n += 1;
            id = format!("{base}-{n}");
        }
        if let Some(dir) = &self.persist_dir {
            std::fs::write(dir.join(format!("{id}.abac")), serialize_policy(&entry.policy))?;
        }
        entry.id = id.clone();
        let entry = Arc::new(entry);
        map.insert(id, entry.clone());
        Ok(entry)
    }

    pub fn remove(&self, id: &str) -> io::Result<bool> {
        let mut map = self.entries.write().expect("store lock");
        let Some(entry) = map.remove(id) else {
            return Ok(false);
        };
        if let (Some(dir), false) = (&self.persist_dir, entry.bundled) {
            match std::fs::remove_file(dir.join(format!("{id}.abac"))) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
                _ => {}
            }
        }
        Ok(true)
    }
}
