//! Pruning input-related words out of a surrogate prompt.
//!
//! Surrogate prompts generated from one example tend to absorb that
//! example's input words, which hurts on every other input. This module
//! finds the prompt words most similar to the example inputs' nouns, then
//! searches over how many of them to replace with a placeholder: candidate
//! mask sets are prefixes of the relevance ranking, each evaluated by
//! re-running the masked prompt and comparing outputs against the examples.
//! The best-scoring prefix wins; ties go to the shortest prefix, so nothing
//! is masked without evidence.
//!
//! The placeholder is pure punctuation. The tokenizer ignores punctuation,
//! so masking is idempotent and the placeholder is invisible to the scoring
//! metrics.

pub mod embedding;
pub mod tagger;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::Backend;
use crate::metrics::bleu;
use crate::model::IoPair;
use crate::text::{token_spans, tokens};

use embedding::{cosine, EmbeddingIndex};
use tagger::{PosTag, PosTagger};

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("invalid pruning configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    /// Minimum cosine similarity to an input noun for a prompt word to be
    /// considered input-related.
    pub similarity_threshold: f64,
    /// Fraction of the related words eligible for masking.
    pub mask_ratio: f64,
    /// How many scored prefixes are kept in the running.
    pub beam_width: usize,
    /// Rough number of prefixes to evaluate; sets the stride through the
    /// candidate ranking.
    pub eval_frequency: usize,
    pub placeholder: String,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            similarity_threshold: 0.4,
            mask_ratio: 0.6,
            beam_width: 2,
            eval_frequency: 5,
            placeholder: "{}".to_string(),
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<(), PruneError> {
        if !(-1.0..=1.0).contains(&self.similarity_threshold) {
            return Err(PruneError::InvalidConfig(format!(
                "similarity_threshold {} outside [-1, 1]",
                self.similarity_threshold
            )));
        }
        if !(self.mask_ratio > 0.0 && self.mask_ratio <= 1.0) {
            return Err(PruneError::InvalidConfig(format!(
                "mask_ratio {} outside (0, 1]",
                self.mask_ratio
            )));
        }
        if self.beam_width == 0 || self.eval_frequency == 0 {
            return Err(PruneError::InvalidConfig(
                "beam_width and eval_frequency must be at least 1".into(),
            ));
        }
        if self.placeholder.is_empty() || self.placeholder.chars().any(char::is_alphanumeric) {
            return Err(PruneError::InvalidConfig(
                "placeholder must be non-empty punctuation so masking stays idempotent".into(),
            ));
        }
        Ok(())
    }
}

/// Unique nouns of a text, folded, in first-occurrence order.
pub fn extract_nouns(text: &str, tagger: &dyn PosTagger) -> Vec<String> {
    let toks = tokens(text);
    let tags = tagger.tag_tokens(&toks);
    let mut seen = std::collections::BTreeSet::new();
    let mut nouns = Vec::new();
    for (tok, tag) in toks.iter().zip(tags) {
        if tag == PosTag::Noun {
            let folded = tok.to_lowercase();
            if seen.insert(folded.clone()) {
                nouns.push(folded);
            }
        }
    }
    nouns
}

/// A prompt word suspected of being input-related.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    /// Folded form used for masking.
    pub word: String,
    /// Token index of the word's first occurrence in the prompt.
    pub position: usize,
    /// Largest cosine similarity to any input noun.
    pub similarity: f64,
}

/// Ranks the prompt's content words by similarity to the inputs' nouns,
/// most similar first (ties by prompt position). Function words, numbers,
/// and words without an embedding are never candidates.
pub fn candidate_related_words(
    prompt_text: &str,
    inputs: &[&str],
    index: &EmbeddingIndex,
    tagger: &dyn PosTagger,
    config: &PruneConfig,
) -> Vec<Candidate> {
    let mut noun_vectors: Vec<Vec<f32>> = Vec::new();
    for input in inputs {
        for noun in extract_nouns(input, tagger) {
            if let Some(v) = index.lookup(&noun) {
                noun_vectors.push(v.to_vec());
            }
        }
    }
    if noun_vectors.is_empty() {
        return Vec::new();
    }
    let toks = tokens(prompt_text);
    let tags = tagger.tag_tokens(&toks);
    let mut seen = std::collections::BTreeSet::new();
    let mut candidates = Vec::new();
    for (position, (tok, tag)) in toks.iter().zip(tags).enumerate() {
        if matches!(tag, PosTag::Det | PosTag::Pron | PosTag::Prep | PosTag::Conj | PosTag::Num) {
            continue;
        }
        let folded = tok.to_lowercase();
        if folded == config.placeholder || !seen.insert(folded.clone()) {
            continue;
        }
        let Some(vector) = index.lookup(&folded) else { continue };
        let similarity = noun_vectors
            .iter()
            .map(|n| cosine(vector, n))
            .fold(f64::NEG_INFINITY, f64::max);
        if similarity >= config.similarity_threshold {
            candidates.push(Candidate { word: folded, position, similarity });
        }
    }
    candidates.sort_by(|a, b| {
        b.similarity
            .partial_cmp(&a.similarity)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.position.cmp(&b.position))
    });
    candidates
}

/// A prompt after masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedPrompt {
    pub text: String,
    /// Words that actually matched at least one token, folded, in prompt
    /// order.
    pub masked_words: Vec<String>,
    /// Placeholder occurrences in the final text.
    pub placeholder_count: usize,
}

/// Replaces every whole-word, case-insensitive occurrence of `words` with
/// the placeholder. Masking an already-masked prompt changes nothing.
pub fn mask_prompt(text: &str, words: &[String], placeholder: &str) -> MaskedPrompt {
    let mut result = String::with_capacity(text.len());
    let mut cursor = 0;
    let mut masked_words: Vec<String> = Vec::new();
    for (start, end) in token_spans(text) {
        let token = &text[start..end];
        let folded = token.to_lowercase();
        if words.contains(&folded) {
            result.push_str(&text[cursor..start]);
            result.push_str(placeholder);
            cursor = end;
            if !masked_words.contains(&folded) {
                masked_words.push(folded);
            }
        }
    }
    result.push_str(&text[cursor..]);
    let placeholder_count = result.matches(placeholder).count();
    MaskedPrompt { text: result, masked_words, placeholder_count }
}

/// One evaluated mask prefix.
#[derive(Debug, Clone, Serialize)]
pub struct BeamTrial {
    pub prefix_len: usize,
    pub words: Vec<String>,
    pub masked_text: String,
    /// Mean functional-consistency score; negative infinity when the
    /// evaluator failed.
    pub score: f64,
    pub error: Option<String>,
}

/// Outcome of the mask search.
#[derive(Debug, Clone, Serialize)]
pub struct MaskSelection {
    /// Words chosen for masking (a prefix of the candidate ranking; empty
    /// when nothing could be evaluated or no candidates existed).
    pub selected: Vec<String>,
    pub masked: MaskedPrompt,
    pub trials: Vec<BeamTrial>,
    /// Indices into `trials`, best first, at most `beam_width` long.
    pub beam: Vec<usize>,
}

/// Searches over prefix lengths of the candidate ranking for the masking
/// that best preserves functional consistency.
///
/// With `n` candidates, up to `ceil(mask_ratio * n)` words are eligible;
/// prefix lengths are sampled from 1 upward with a stride that yields about
/// `eval_frequency` evaluations. The evaluator receives the masked prompt
/// text and returns a score where higher is better. Equal scores favor the
/// shorter prefix. A failing evaluation is recorded at negative infinity;
/// if every evaluation fails, nothing is masked.
pub fn select_mask_words<F>(
    prompt_text: &str,
    candidates: &[Candidate],
    config: &PruneConfig,
    mut evaluate: F,
) -> Result<MaskSelection, PruneError>
where
    F: FnMut(&str) -> Result<f64, String>,
{
    config.validate()?;
    if candidates.is_empty() {
        return Ok(MaskSelection {
            selected: Vec::new(),
            masked: mask_prompt(prompt_text, &[], &config.placeholder),
            trials: Vec::new(),
            beam: Vec::new(),
        });
    }
    let n = candidates.len();
    let eligible = ((config.mask_ratio * n as f64).ceil() as usize).clamp(1, n);
    let stride = (eligible / config.eval_frequency).max(1);

    let mut trials = Vec::new();
    let mut len = 1;
    while len <= eligible {
        let words: Vec<String> = candidates[..len].iter().map(|c| c.word.clone()).collect();
        let masked = mask_prompt(prompt_text, &words, &config.placeholder);
        let (score, error) = match evaluate(&masked.text) {
            Ok(s) => (s, None),
            Err(e) => (f64::NEG_INFINITY, Some(e)),
        };
        trials.push(BeamTrial {
            prefix_len: len,
            words,
            masked_text: masked.text.clone(),
            score,
            error,
        });
        len += stride;
    }

    // Stable sort: equal scores keep evaluation order, i.e. shorter prefix
    // first.
    let mut beam: Vec<usize> = (0..trials.len()).collect();
    beam.sort_by(|&a, &b| {
        trials[b].score.partial_cmp(&trials[a].score).unwrap_or(std::cmp::Ordering::Equal)
    });
    beam.truncate(config.beam_width);

    let best = beam.first().copied().filter(|&i| trials[i].score > f64::NEG_INFINITY);
    let selected = match best {
        Some(i) => trials[i].words.clone(),
        None => Vec::new(),
    };
    let masked = mask_prompt(prompt_text, &selected, &config.placeholder);
    Ok(MaskSelection { selected, masked, trials, beam })
}

/// The standard beam evaluator: run the masked prompt over every example
/// input on `target` and average the n-gram overlap of what comes back
/// against the example outputs.
pub fn beam_evaluator_for<'a>(
    target: &'a Backend,
    examples: &'a [IoPair],
) -> impl FnMut(&str) -> Result<f64, String> + 'a {
    move |masked_text: &str| {
        if examples.is_empty() {
            return Err("no example pairs to evaluate against".to_string());
        }
        let mut total = 0.0;
        for pair in examples {
            let output = target
                .complete(masked_text, &pair.input)
                .map_err(|e| format!("completion failed: {e}"))?;
            let score =
                bleu(&output, &[pair.output.as_str()]).map_err(|e| format!("scoring failed: {e}"))?;
            total += score;
        }
        Ok(total / examples.len() as f64)
    }
}
