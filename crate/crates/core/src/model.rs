//! Record and dataset vocabulary shared by every pipeline stage, plus the
//! line-delimited JSON interchange format.
//!
//! One line on disk is one prompt record:
//!
//! ```json
//! {"id":"email-001","category":"email","target_model":"mock-a",
//!  "prompt":"optional ground truth","examples":[{"input":"...","output":"..."}]}
//! ```
//!
//! `prompt` is present only when the hidden prompt is known (bought from a
//! marketplace, or synthesized by the mock suite); attacks against live
//! services omit it.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Marketplace categories the tooling was designed around. Records may use
/// other categories; validation flags them without rejecting.
pub const KNOWN_CATEGORIES: [&str; 18] = [
    "ads", "business", "code", "data", "email", "fashion", "food", "game", "health", "idea",
    "language", "music", "seo", "sport", "study", "translation", "travel", "writing",
];

/// A prompt category, stored lowercase so that grouping and attention lookup
/// are case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Category(String);

impl Category {
    pub fn new(name: &str) -> Result<Self, ModelError> {
        let folded = name.trim().to_lowercase();
        if folded.is_empty() {
            return Err(ModelError::EmptyCategory);
        }
        Ok(Category(folded))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether this is one of the categories the toolkit ships support for.
    pub fn is_known(&self) -> bool {
        KNOWN_CATEGORIES.contains(&self.0.as_str())
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One exposed input/output example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoPair {
    pub input: String,
    pub output: String,
}

/// One target service: its category, the model behind it, the examples it
/// exposes, and (when known) the hidden prompt itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptRecord {
    pub id: String,
    pub category: Category,
    #[serde(rename = "target_model")]
    pub target_model_tag: String,
    #[serde(rename = "prompt", default, skip_serializing_if = "Option::is_none")]
    pub prompt_text: Option<String>,
    pub examples: Vec<IoPair>,
}

/// Outcome of validating a single record. `violations` make the record
/// unusable; `warnings` are advisory (for example an unknown category).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks one record against the interchange contract.
pub fn validate_record(record: &PromptRecord) -> ValidationReport {
    let mut report = ValidationReport::default();
    if record.id.trim().is_empty() {
        report.violations.push("id must be non-empty".into());
    }
    if record.target_model_tag.trim().is_empty() {
        report.violations.push("target_model must be non-empty".into());
    }
    if record.examples.is_empty() {
        report.violations.push("examples must contain at least one pair".into());
    }
    for (i, pair) in record.examples.iter().enumerate() {
        if pair.output.is_empty() {
            report.violations.push(format!("examples[{i}].output must be non-empty"));
        }
    }
    if let Some(p) = &record.prompt_text {
        if p.trim().is_empty() {
            report.violations.push("prompt, when present, must be non-empty".into());
        }
    }
    if !record.category.is_known() {
        report
            .warnings
            .push(format!("category '{}' is not a known category", record.category));
    }
    report
}

/// Identifies the on-disk line format. Kept explicit so future formats can
/// coexist with old files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaTag {
    PromptRecordsV1,
}

impl SchemaTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaTag::PromptRecordsV1 => "prompt-records/v1",
        }
    }
}

/// An ordered collection of records with a category index. Record order is
/// exactly file order; the index maps each category to record positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    records: Vec<PromptRecord>,
    by_category: BTreeMap<Category, Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset, rejecting duplicate ids and invalid records.
    pub fn from_records(records: Vec<PromptRecord>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            let report = validate_record(r);
            if !report.is_valid() {
                return Err(ModelError::InvalidRecord {
                    id: r.id.clone(),
                    line: i + 1,
                    violations: report.violations.join("; "),
                });
            }
            if !seen.insert(r.id.clone()) {
                return Err(ModelError::DuplicateId { id: r.id.clone(), line: i + 1 });
            }
        }
        let mut by_category: BTreeMap<Category, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_category.entry(r.category.clone()).or_default().push(i);
        }
        Ok(Dataset { records, by_category })
    }

    pub fn records(&self) -> &[PromptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.by_category.keys()
    }

    /// Records of one category, in file order.
    pub fn records_for(&self, category: &Category) -> Vec<&PromptRecord> {
        self.by_category
            .get(category)
            .map(|idx| idx.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    pub fn get(&self, id: &str) -> Option<&PromptRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Distinct (category, target model) pairs present, in sorted order.
    pub fn category_model_pairs(&self) -> Vec<(Category, String)> {
        let mut pairs: Vec<(Category, String)> = self
            .records
            .iter()
            .map(|r| (r.category.clone(), r.target_model_tag.clone()))
            .collect();
        pairs.sort();
        pairs.dedup();
        pairs
    }
}

/// Loads a line-delimited record file. Blank lines are skipped; any parse or
/// validation failure reports its 1-based line number.
pub fn load_dataset(path: &Path, expected_schema: SchemaTag) -> Result<Dataset, ModelError> {
    let SchemaTag::PromptRecordsV1 = expected_schema;
    let file = fs::File::open(path).map_err(|e| ModelError::Io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ModelError::Io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PromptRecord = serde_json::from_str(&line)
            .map_err(|e| ModelError::Parse { line: lineno + 1, message: e.to_string() })?;
        records.push(record);
        lines.push(lineno + 1);
    }
    // Re-run the duplicate/validity checks with real line numbers.
    let mut seen = HashSet::new();
    for (record, &lineno) in records.iter().zip(&lines) {
        let report = validate_record(record);
        if !report.is_valid() {
            return Err(ModelError::InvalidRecord {
                id: record.id.clone(),
                line: lineno,
                violations: report.violations.join("; "),
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(ModelError::DuplicateId { id: record.id.clone(), line: lineno });
        }
    }
    Dataset::from_records(records)
}

/// Writes a dataset back out, one JSON record per line.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), ModelError> {
    let mut out = fs::File::create(path).map_err(|e| ModelError::Io(path.display().to_string(), e))?;
    for record in dataset.records() {
        let line = serde_json::to_string(record)
            .map_err(|e| ModelError::Parse { line: 0, message: e.to_string() })?;
        writeln!(out, "{line}").map_err(|e| ModelError::Io(path.display().to_string(), e))?;
    }
    Ok(())
}

/// A surrogate prompt as produced by generation and (optionally) pruning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogatePrompt {
    /// Prompt text after any masking.
    pub text: String,
    /// Words removed by masking, in masking order.
    pub masked_words: Vec<String>,
    /// Occurrences of the placeholder in `text`.
    pub placeholder_count: usize,
    /// Id of the attention that guided generation, when one was used.
    pub attention_id: Option<String>,
    /// Record the surrogate was generated for.
    pub source_record_id: String,
}

impl SurrogatePrompt {
    /// Checks the structural invariants against the pre-mask text:
    /// `placeholder_count` matches the text, and every masked word actually
    /// occurred before masking.
    pub fn check(&self, pre_mask_text: &str, placeholder: &str) -> Result<(), String> {
        let count = self.text.matches(placeholder).count();
        if count != self.placeholder_count {
            return Err(format!(
                "placeholder_count is {} but text contains {} occurrences",
                self.placeholder_count, count
            ));
        }
        for word in &self.masked_words {
            if !pre_mask_text.contains(word.as_str()) {
                return Err(format!("masked word '{word}' absent from pre-mask text"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("category must be non-empty")]
    EmptyCategory,
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate record id '{id}'")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: record '{id}' invalid: {violations}")]
    InvalidRecord { id: String, line: usize, violations: String },
}
