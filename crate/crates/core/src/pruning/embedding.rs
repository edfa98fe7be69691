//! Word-vector storage for input-relatedness scoring.
//!
//! Vectors come from a word2vec-style file (text or binary), or from the
//! deterministic hashed generator used by the offline mock pipeline: each
//! word gets a unit vector seeded by a stable hash of its folded form, so
//! identical words are identical (cosine 1) and unrelated words are nearly
//! orthogonal with overwhelming probability.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::text::fnv1a;

#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    dimension: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingIndex {
    /// Loads the text format: one `word v1 v2 … vD` line per word, with an
    /// optional `count dimension` header line.
    pub fn load_text(path: &Path) -> Result<Self, EmbeddingError> {
        let content = fs::read_to_string(path)
            .map_err(|e| EmbeddingError::Io(path.display().to_string(), e))?;
        let mut dimension = 0usize;
        let mut vectors = HashMap::new();
        for (lineno, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if lineno == 0 && fields.len() == 2 {
                if let (Ok(_), Ok(_)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    continue; // header
                }
            }
            if fields.len() < 2 {
                return Err(EmbeddingError::Parse { line: lineno + 1, message: "need a word and at least one component".into() });
            }
            let word = fields[0].to_string();
            let values: Result<Vec<f32>, _> = fields[1..].iter().map(|f| f.parse::<f32>()).collect();
            let values = values.map_err(|e| EmbeddingError::Parse { line: lineno + 1, message: e.to_string() })?;
            if dimension == 0 {
                dimension = values.len();
            } else if values.len() != dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    line: lineno + 1,
                    expected: dimension,
                    got: values.len(),
                });
            }
            vectors.insert(word, values);
        }
        if vectors.is_empty() {
            return Err(EmbeddingError::Empty(path.display().to_string()));
        }
        Ok(EmbeddingIndex { dimension, vectors })
    }

    /// Loads the word2vec binary format: an ASCII `count dimension\n` header,
    /// then for each word its bytes, a space, and `dimension` little-endian
    /// f32 values.
    pub fn load_binary(path: &Path) -> Result<Self, EmbeddingError> {
        let data = fs::read(path).map_err(|e| EmbeddingError::Io(path.display().to_string(), e))?;
        let header_end = data
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| EmbeddingError::Parse { line: 1, message: "missing header".into() })?;
        let header = std::str::from_utf8(&data[..header_end])
            .map_err(|_| EmbeddingError::Parse { line: 1, message: "non-utf8 header".into() })?;
        let mut parts = header.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| EmbeddingError::Parse { line: 1, message: "bad word count".into() })?;
        let dimension: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| EmbeddingError::Parse { line: 1, message: "bad dimension".into() })?;
        let mut vectors = HashMap::new();
        let mut pos = header_end + 1;
        for _ in 0..count {
            let word_end = data[pos..]
                .iter()
                .position(|&b| b == b' ')
                .ok_or_else(|| EmbeddingError::Parse { line: 0, message: "truncated word".into() })?;
            let word = String::from_utf8_lossy(&data[pos..pos + word_end])
                .trim_start_matches('\n')
                .to_string();
            pos += word_end + 1;
            if pos + 4 * dimension > data.len() {
                return Err(EmbeddingError::Parse { line: 0, message: "truncated vector".into() });
            }
            let mut values = Vec::with_capacity(dimension);
            for i in 0..dimension {
                let b = &data[pos + 4 * i..pos + 4 * i + 4];
                values.push(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
            }
            pos += 4 * dimension;
            vectors.insert(word, values);
        }
        if vectors.is_empty() {
            return Err(EmbeddingError::Empty(path.display().to_string()));
        }
        Ok(EmbeddingIndex { dimension, vectors })
    }

    /// Builds an index from an explicit table. Used in tests and by custom
    /// pipelines.
    pub fn from_table(entries: Vec<(String, Vec<f32>)>) -> Result<Self, EmbeddingError> {
        let mut dimension = 0usize;
        let mut vectors = HashMap::new();
        for (i, (word, values)) in entries.into_iter().enumerate() {
            if dimension == 0 {
                dimension = values.len();
            } else if values.len() != dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    line: i + 1,
                    expected: dimension,
                    got: values.len(),
                });
            }
            vectors.insert(word, values);
        }
        if vectors.is_empty() {
            return Err(EmbeddingError::Empty("table".into()));
        }
        Ok(EmbeddingIndex { dimension, vectors })
    }

    /// Deterministic hashed index over a fixed vocabulary. Each word's unit
    /// vector depends only on its folded form, so indexes built over
    /// different vocabularies agree wherever they overlap.
    pub fn hashed<'a>(vocabulary: impl IntoIterator<Item = &'a str>, dimension: usize) -> Self {
        let mut vectors = HashMap::new();
        for word in vocabulary {
            let folded = word.to_lowercase();
            vectors.entry(folded.clone()).or_insert_with(|| hashed_unit_vector(&folded, dimension));
        }
        EmbeddingIndex { dimension, vectors }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Case-folded lookup with an exact-case fallback.
    pub fn lookup(&self, word: &str) -> Option<&[f32]> {
        let folded = word.to_lowercase();
        self.vectors
            .get(&folded)
            .or_else(|| self.vectors.get(word))
            .map(Vec::as_slice)
    }

    /// Cosine similarity between two in-vocabulary words; `None` when either
    /// word is out of vocabulary.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(cosine(self.lookup(a)?, self.lookup(b)?))
    }
}

/// Cosine of two equal-length vectors; zero vectors score 0.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        dot += f64::from(x) * f64::from(y);
        na += f64::from(x) * f64::from(x);
        nb += f64::from(y) * f64::from(y);
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

fn hashed_unit_vector(folded_word: &str, dimension: usize) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(folded_word.as_bytes()));
    // Gaussian components via Box-Muller give a direction-uniform vector.
    let mut values = Vec::with_capacity(dimension);
    while values.len() < dimension {
        let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        values.push(r * (2.0 * std::f64::consts::PI * u2).cos());
        if values.len() < dimension {
            values.push(r * (2.0 * std::f64::consts::PI * u2).sin());
        }
    }
    let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    values.into_iter().map(|v| (v / norm) as f32).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: vector has {got} components, expected {expected}")]
    DimensionMismatch { line: usize, expected: usize, got: usize },
    #[error("{0}: no vectors")]
    Empty(String),
}
