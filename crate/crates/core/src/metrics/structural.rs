//! Structural similarity: reciprocal Jensen-Shannon divergence between
//! unigram token distributions.
//!
//! Both texts are case-folded and tokenized; their token frequency
//! distributions are compared with base-2 JS divergence (bounded in [0, 1]),
//! and similarity is `1 / (JS + ε)`. Identical distributions therefore score
//! `1/ε`; the consistency normalization downstream turns that into a clean
//! ratio instead of an infinity.

use std::collections::HashMap;

use super::MetricsError;
use crate::text::folded_tokens;

/// Divergence floor that keeps the reciprocal finite.
pub const STRUCTURAL_EPSILON: f64 = 1e-6;

fn distribution(text: &str) -> Option<HashMap<String, f64>> {
    let toks = folded_tokens(text);
    if toks.is_empty() {
        return None;
    }
    let n = toks.len() as f64;
    let mut counts: HashMap<String, f64> = HashMap::new();
    for t in toks {
        *counts.entry(t).or_insert(0.0) += 1.0;
    }
    for v in counts.values_mut() {
        *v /= n;
    }
    Some(counts)
}

/// Base-2 Jensen-Shannon divergence between the token distributions of two
/// texts. Errors if either text has no tokens.
pub fn js_divergence(a: &str, b: &str) -> Result<f64, MetricsError> {
    let p = distribution(a).ok_or(MetricsError::EmptyText)?;
    let q = distribution(b).ok_or(MetricsError::EmptyText)?;
    let mut vocab: Vec<&String> = p.keys().chain(q.keys()).collect();
    vocab.sort();
    vocab.dedup();
    let mut js = 0.0;
    for w in vocab {
        let pw = p.get(w).copied().unwrap_or(0.0);
        let qw = q.get(w).copied().unwrap_or(0.0);
        let m = 0.5 * (pw + qw);
        if pw > 0.0 {
            js += 0.5 * pw * (pw / m).log2();
        }
        if qw > 0.0 {
            js += 0.5 * qw * (qw / m).log2();
        }
    }
    // Guard against float drift outside the theoretical [0, 1] band.
    Ok(js.clamp(0.0, 1.0))
}

/// `1 / (JS + ε)`: large when distributions agree, near `1/(1+ε)` when they
/// share no tokens at all.
pub fn structural_similarity(a: &str, b: &str) -> Result<f64, MetricsError> {
    Ok(1.0 / (js_divergence(a, b)? + STRUCTURAL_EPSILON))
}
