//! Disk persistence for learned attention.
//!
//! Layout under the store root:
//!
//! ```text
//! <root>/index.json                      summary of every entry
//! <root>/<category>__<model>.json        latest version
//! <root>/history/<category>__<model>/v<N>.json
//! ```
//!
//! Saving never overwrites history: each save writes the next `v<N>.json`,
//! refreshes the latest file, and rewrites the index. Loading a pair that
//! was never saved is a typed error, so callers can tell "not learned yet"
//! apart from disk trouble.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::Category;

use super::{Attention, MutationError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredAttention {
    pub version: u32,
    pub saved_at: String,
    pub attention_id: String,
    #[serde(flatten)]
    pub attention: Attention,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexEntry {
    pub category: String,
    pub model: String,
    pub latest_version: u32,
    pub updated_at: String,
    pub attention_id: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Index {
    entries: BTreeMap<String, IndexEntry>,
}

pub struct AttentionStore {
    root: PathBuf,
}

fn sanitize(part: &str) -> String {
    part.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '-' })
        .collect()
}

fn io_err(path: &Path, source: std::io::Error) -> MutationError {
    MutationError::StoreIo { path: path.display().to_string(), source }
}

fn parse_err(path: &Path, source: serde_json::Error) -> MutationError {
    MutationError::StoreParse { path: path.display().to_string(), source }
}

impl AttentionStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, MutationError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(AttentionStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn stem(category: &Category, model_tag: &str) -> String {
        format!("{}__{}", sanitize(category.as_str()), sanitize(model_tag))
    }

    fn latest_path(&self, category: &Category, model_tag: &str) -> PathBuf {
        self.root.join(format!("{}.json", Self::stem(category, model_tag)))
    }

    fn history_dir(&self, category: &Category, model_tag: &str) -> PathBuf {
        self.root.join("history").join(Self::stem(category, model_tag))
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    fn read_index(&self) -> Result<Index, MutationError> {
        let path = self.index_path();
        if !path.exists() {
            return Ok(Index::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        serde_json::from_str(&text).map_err(|e| parse_err(&path, e))
    }

    fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<(), MutationError> {
        let text = serde_json::to_string_pretty(value).expect("serializable store value");
        fs::write(path, text).map_err(|e| io_err(path, e))
    }

    /// Persists a new version and returns its number (starting at 1).
    pub fn save(&self, attention: &Attention) -> Result<u32, MutationError> {
        let mut index = self.read_index()?;
        let key = Self::stem(&attention.category, &attention.model_tag);
        let version = index.entries.get(&key).map_or(1, |e| e.latest_version + 1);
        let saved_at = chrono::Utc::now().to_rfc3339();
        let stored = StoredAttention {
            version,
            saved_at: saved_at.clone(),
            attention_id: attention.id(),
            attention: attention.clone(),
        };

        let history = self.history_dir(&attention.category, &attention.model_tag);
        fs::create_dir_all(&history).map_err(|e| io_err(&history, e))?;
        self.write_json(&history.join(format!("v{version}.json")), &stored)?;
        self.write_json(&self.latest_path(&attention.category, &attention.model_tag), &stored)?;

        index.entries.insert(
            key,
            IndexEntry {
                category: attention.category.to_string(),
                model: attention.model_tag.clone(),
                latest_version: version,
                updated_at: saved_at,
                attention_id: attention.id(),
            },
        );
        self.write_json(&self.index_path(), &index)?;
        Ok(version)
    }

    fn load_stored(&self, path: &Path, category: &Category, model_tag: &str) -> Result<StoredAttention, MutationError> {
        if !path.exists() {
            return Err(MutationError::AttentionMissing {
                category: category.to_string(),
                model: model_tag.to_string(),
            });
        }
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| parse_err(path, e))
    }

    /// Loads the latest version for a (category, model) pair.
    pub fn load(&self, category: &Category, model_tag: &str) -> Result<Attention, MutationError> {
        self.load_stored(&self.latest_path(category, model_tag), category, model_tag)
            .map(|s| s.attention)
    }

    pub fn load_version(
        &self,
        category: &Category,
        model_tag: &str,
        version: u32,
    ) -> Result<StoredAttention, MutationError> {
        let path = self.history_dir(category, model_tag).join(format!("v{version}.json"));
        self.load_stored(&path, category, model_tag)
    }

    /// Version numbers on record for a pair, ascending. Empty when the pair
    /// was never saved.
    pub fn versions(&self, category: &Category, model_tag: &str) -> Vec<u32> {
        self.read_index()
            .ok()
            .and_then(|ix| ix.entries.get(&Self::stem(category, model_tag)).map(|e| e.latest_version))
            .map_or_else(Vec::new, |latest| (1..=latest).collect())
    }

    pub fn entries(&self) -> Result<Vec<IndexEntry>, MutationError> {
        Ok(self.read_index()?.entries.into_values().collect())
    }
}
