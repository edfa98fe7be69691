//! BLEU with brevity penalty and add-one smoothing.
//!
//! N-gram orders 1..=4 (capped by candidate length) with uniform weights.
//! Orders above 1 get add-one smoothing so that short texts, which dominate
//! LLM output comparisons, do not collapse to zero the moment a 4-gram
//! misses. Unigram precision stays unsmoothed: a candidate sharing no words
//! with any reference scores exactly 0.

use std::collections::HashMap;

use super::MetricsError;
use crate::text::tokens;

const MAX_ORDER: usize = 4;

fn ngram_counts<'a>(toks: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    if toks.len() >= n {
        for window in toks.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU of `candidate` against one or more references. Tokenization is
/// case-preserving word segmentation; an empty candidate scores 0; an empty
/// reference list is an error.
pub fn bleu(candidate: &str, references: &[&str]) -> Result<f64, MetricsError> {
    if references.is_empty() {
        return Err(MetricsError::EmptyReferences);
    }
    let cand = tokens(candidate);
    if cand.is_empty() {
        return Ok(0.0);
    }
    let refs: Vec<Vec<&str>> = references.iter().map(|r| tokens(r)).collect();

    let max_order = MAX_ORDER.min(cand.len());
    let mut log_precision_sum = 0.0;
    for n in 1..=max_order {
        let cand_counts = ngram_counts(&cand, n);
        // Clip each candidate n-gram count by the most generous reference.
        let mut ref_max: HashMap<&[&str], usize> = HashMap::new();
        for r in &refs {
            for (gram, count) in ngram_counts(r, n) {
                let entry = ref_max.entry(gram).or_insert(0);
                *entry = (*entry).max(count);
            }
        }
        let total: usize = cand_counts.values().sum();
        let matched: usize = cand_counts
            .iter()
            .map(|(gram, count)| (*count).min(ref_max.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            if matched == 0 {
                return Ok(0.0);
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        log_precision_sum += precision.ln();
    }
    let geo_mean = (log_precision_sum / max_order as f64).exp();

    // Effective reference length: the reference closest to the candidate
    // length, shorter winning ties.
    let c = cand.len() as f64;
    let r = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| ((len as i64 - cand.len() as i64).abs(), len))
        .unwrap_or(0) as f64;
    let brevity = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(brevity * geo_mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent transliteration used to pin the main implementation:
    /// counts n-grams by scanning string-joined windows, no shared helpers.
    fn bleu_oracle(candidate: &str, reference: &str) -> f64 {
        let c: Vec<String> = crate::text::tokens(candidate).iter().map(|s| s.to_string()).collect();
        let r: Vec<String> = crate::text::tokens(reference).iter().map(|s| s.to_string()).collect();
        if c.is_empty() {
            return 0.0;
        }
        let grams = |toks: &[String], n: usize| -> Vec<String> {
            if toks.len() < n {
                return Vec::new();
            }
            (0..=toks.len() - n).map(|i| toks[i..i + n].join("\u{1}")).collect()
        };
        let max_order = 4.min(c.len());
        let mut sum = 0.0;
        for n in 1..=max_order {
            let cg = grams(&c, n);
            let rg = grams(&r, n);
            let mut matched = 0usize;
            let mut pool = rg.clone();
            for g in &cg {
                if let Some(pos) = pool.iter().position(|x| x == g) {
                    pool.remove(pos);
                    matched += 1;
                }
            }
            let p = if n == 1 {
                if matched == 0 {
                    return 0.0;
                }
                matched as f64 / cg.len() as f64
            } else {
                (matched as f64 + 1.0) / (cg.len() as f64 + 1.0)
            };
            sum += p.ln();
        }
        let bp = if c.len() >= r.len() {
            1.0
        } else {
            (1.0 - r.len() as f64 / c.len() as f64).exp()
        };
        bp * (sum / max_order as f64).exp()
    }

    #[test]
    fn identity_is_exactly_one() {
        let text = "The quick brown fox jumps over the lazy dog. It was a bright morning and the fox was pleased.";
        assert_eq!(bleu(text, &[text]).unwrap(), 1.0);
    }

    #[test]
    fn zero_unigram_overlap_is_exactly_zero() {
        assert_eq!(bleu("alpha beta gamma", &["delta epsilon zeta"]).unwrap(), 0.0);
    }

    #[test]
    fn empty_candidate_scores_zero() {
        assert_eq!(bleu("", &["anything at all"]).unwrap(), 0.0);
        assert_eq!(bleu("   ", &["anything"]).unwrap(), 0.0);
    }

    #[test]
    fn empty_reference_list_is_error() {
        assert!(matches!(bleu("a b", &[]), Err(MetricsError::EmptyReferences)));
    }

    #[test]
    fn golden_pair_matches_oracle() {
        let cand = "the cat sat on the mat";
        let rf = "the cat is on the mat";
        let got = bleu(cand, &[rf]).unwrap();
        let want = bleu_oracle(cand, rf);
        assert!((got - want).abs() < 1e-9, "impl {got} vs oracle {want}");
        // Frozen value: precisions 5/6, 4/6, 2/5, 1/4 with unit brevity.
        let frozen = (5.0f64 / 6.0 * 4.0 / 6.0 * 2.0 / 5.0 * 1.0 / 4.0).powf(0.25);
        assert!((got - frozen).abs() < 1e-12);
    }

    #[test]
    fn oracle_agreement_on_random_pairs() {
        // Deterministic pseudo-random token streams over a tiny vocabulary.
        let vocab = ["sun", "moon", "star", "sky", "sea", "wind"];
        let mut state = 0x243f_6a88u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as usize
        };
        for _ in 0..200 {
            let len_a = 1 + next() % 9;
            let len_b = 1 + next() % 9;
            let a: Vec<&str> = (0..len_a).map(|_| vocab[next() % vocab.len()]).collect();
            let b: Vec<&str> = (0..len_b).map(|_| vocab[next() % vocab.len()]).collect();
            let (a, b) = (a.join(" "), b.join(" "));
            let got = bleu(&a, &[b.as_str()]).unwrap();
            let want = bleu_oracle(&a, &b);
            assert!((got - want).abs() < 1e-9, "{a:?} vs {b:?}: impl {got}, oracle {want}");
        }
    }

    #[test]
    fn brevity_penalizes_short_candidates() {
        let long = "one two three four five six seven eight";
        let short = "one two three four";
        let full = bleu(long, &[long]).unwrap();
        let cut = bleu(short, &[long]).unwrap();
        assert!(cut < full);
        assert!(cut > 0.0);
    }

    #[test]
    fn multiple_references_clip_generously() {
        let one_ref = bleu("the cat", &["the dog"]).unwrap();
        let two_refs = bleu("the cat", &["the dog", "a cat"]).unwrap();
        assert!(two_refs > one_ref);
    }

    #[test]
    fn score_stays_in_unit_interval() {
        let cases = [
            ("a", "a"),
            ("a b c", "c b a"),
            ("x", "a b c d e f g"),
            ("a a a a", "a"),
        ];
        for (c, r) in cases {
            let s = bleu(c, &[r]).unwrap();
            assert!((0.0..=1.0).contains(&s), "bleu({c:?},{r:?}) = {s}");
        }
    }
}
