use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use super::SimilarityBackend;
use crate::error::{Error, Result};

/// Exact-lookup backend for tests and golden traces. Pairs missing from the
/// table score `default`.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    table: HashMap<(String, String), f64>,
    default: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    #[serde(default)]
    default: f64,
    entries: Vec<ScriptEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptEntry {
    reference: String,
    candidate: String,
    score: f64,
}

fn check_range(score: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&score) {
        Ok(score)
    } else {
        Err(Error::invalid(format!("scripted score {score} outside [0, 1]")))
    }
}

impl ScriptedBackend {
    pub fn new(default: f64) -> Result<Self> {
        Ok(Self {
            table: HashMap::new(),
            default: check_range(default)?,
        })
    }

    pub fn from_entries<R, C>(
        default: f64,
        entries: impl IntoIterator<Item = (R, C, f64)>,
    ) -> Result<Self>
    where
        R: Into<String>,
        C: Into<String>,
    {
        let mut b = Self::new(default)?;
        for (r, c, s) in entries {
            b.insert(r, c, s)?;
        }
        Ok(b)
    }

    pub fn insert(
        &mut self,
        reference: impl Into<String>,
        candidate: impl Into<String>,
        score: f64,
    ) -> Result<()> {
        self.table
            .insert((reference.into(), candidate.into()), check_range(score)?);
        Ok(())
    }

    /// Parses `{"default": f, "entries": [{"reference", "candidate", "score"}]}`.
    pub fn from_json(json: &str) -> Result<Self> {
        let file: ScriptFile =
            serde_json::from_str(json).map_err(|e| Error::invalid(e.to_string()))?;
        Self::from_entries(
            file.default,
            file.entries
                .into_iter()
                .map(|e| (e.reference, e.candidate, e.score)),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn lookup(&self, reference: &str, candidate: &str) -> f64 {
        self.table
            .get(&(reference.to_owned(), candidate.to_owned()))
            .copied()
            .unwrap_or(self.default)
    }
}

impl SimilarityBackend for ScriptedBackend {
    fn identity(&self) -> String {
        format!("scripted({} entries)", self.table.len())
    }

    fn score(&self, reference: &str, candidate: &str) -> Result<f64> {
        Ok(self.lookup(reference, candidate))
    }
}
