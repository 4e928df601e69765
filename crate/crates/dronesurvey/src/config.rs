//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment line, blank lines are ignored.
//! Nested settings use dotted keys (`world.true_density = 30`).

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug)]
pub struct KvConfig {
    source: String,
    entries: BTreeMap<String, (usize, String)>,
    used: RefCell<BTreeSet<String>>,
}

impl KvConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut problems = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                problems.push(format!("{source} line {}: expected key = value", i + 1));
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                problems.push(format!("{source} line {}: empty key", i + 1));
            } else if let Some((first, _)) = entries.insert(k.to_string(), (i + 1, v.to_string())) {
                problems.push(format!(
                    "{source} line {}: key '{k}' already set on line {first}",
                    i + 1
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Rows(problems));
        }
        Ok(Self {
            source: source.to_string(),
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| {
            self.used.borrow_mut().insert(key.to_string());
            v.as_str()
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some(v) = self.str(key) else {
            return Ok(None);
        };
        let line = self.entries[key].0;
        v.parse().map(Some).map_err(|_| {
            Error::format(format!(
                "{} line {line}: cannot parse {key} = '{v}'",
                self.source
            ))
        })
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::format(format!("{}: missing required key '{key}'", self.source)))
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        let Some(v) = self.str(key) else {
            return Ok(None);
        };
        match v.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(Some(true)),
            "false" | "no" | "0" => Ok(Some(false)),
            _ => Err(Error::format(format!(
                "{}: {key} must be true or false, got '{v}'",
                self.source
            ))),
        }
    }

    pub fn require_bool(&self, key: &str) -> Result<bool> {
        self.bool(key)?
            .ok_or_else(|| Error::format(format!("{}: missing required key '{key}'", self.source)))
    }

    /// Fails on keys that no accessor has read, catching misspellings.
    pub fn reject_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, (line, _))| format!("{} line {line}: unknown key '{k}'", self.source))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Rows(unknown))
        }
    }
}
