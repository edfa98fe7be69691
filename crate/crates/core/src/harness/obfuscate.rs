//! Output-obfuscation defense.
//!
//! A service can redact part of every example output it publishes. The
//! attacker then learns from corrupted outputs while the live service still
//! answers normally, so the surrogate drifts away from the real prompt.
//! Redaction replaces whole non-whitespace spans with a single block glyph;
//! for a fixed seed the spans masked at a lower ratio are a subset of those
//! masked at any higher ratio, which makes sweeps comparable point to
//! point.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::Dataset;
use crate::text::{fnv1a, whitespace_spans};

use super::{run_campaign, Ablation, CampaignConfig, CampaignRoles, HarnessError};
use super::suite::EvalInputs;

pub const MASK_GLYPH: &str = "\u{2588}";

/// Replaces the first `floor(ratio * spans)` spans of a seeded random
/// permutation with [`MASK_GLYPH`]. Whitespace is preserved exactly.
pub fn obfuscate_output(text: &str, ratio: f64, seed: u64) -> String {
    let ratio = ratio.clamp(0.0, 1.0);
    let spans = whitespace_spans(text);
    let masked_count = (ratio * spans.len() as f64).floor() as usize;
    if masked_count == 0 {
        return text.to_string();
    }
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut hide = vec![false; spans.len()];
    for &i in &order[..masked_count] {
        hide[i] = true;
    }
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for (i, &(start, end)) in spans.iter().enumerate() {
        out.push_str(&text[cursor..start]);
        if hide[i] {
            out.push_str(MASK_GLYPH);
        } else {
            out.push_str(&text[start..end]);
        }
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Per-record redaction seed, so the same words are not masked across every
/// record.
pub fn record_seed(record_id: &str, global_seed: u64) -> u64 {
    fnv1a(record_id.as_bytes()) ^ global_seed
}

/// Applies the defense to every example output in the dataset. Inputs and
/// hidden prompts are untouched: the defense only changes what the service
/// publishes, not how it answers.
pub fn obfuscate_dataset(
    dataset: &Dataset,
    ratio: f64,
    global_seed: u64,
) -> Result<Dataset, HarnessError> {
    let mut records = dataset.records().to_vec();
    for record in &mut records {
        let seed = record_seed(&record.id, global_seed);
        for pair in &mut record.examples {
            pair.output = obfuscate_output(&pair.output, ratio, seed);
        }
    }
    Ok(Dataset::from_records(records)?)
}

/// One defended campaign run.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub asr: Option<f64>,
    pub mean_semantic: Option<f64>,
    pub mean_syntactic: Option<f64>,
    pub mean_structural: Option<f64>,
    pub failure_rate: f64,
}

/// Runs the strongest attack variant against the dataset at each redaction
/// ratio and reports how its scores degrade.
pub fn defense_sweep(
    dataset: &Dataset,
    eval_inputs: &EvalInputs,
    roles: &CampaignRoles,
    config: &CampaignConfig,
    ratios: &[f64],
    global_seed: u64,
) -> Result<Vec<SweepPoint>, HarnessError> {
    if ratios.is_empty() {
        return Err(HarnessError::Config("defense sweep needs at least one ratio".into()));
    }
    for &r in ratios {
        if !(0.0..=1.0).contains(&r) {
            return Err(HarnessError::Config(format!("redaction ratio {r} is outside [0, 1]")));
        }
    }
    let mut run = config.clone();
    run.ablations = vec![Ablation::Full];
    let mut points = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let defended = obfuscate_dataset(dataset, ratio, global_seed)?;
        let report = run_campaign(&defended, eval_inputs, roles, &run)?;
        let summary = &report.ablations[0];
        points.push(SweepPoint {
            ratio,
            asr: summary.asr,
            mean_semantic: summary.mean_semantic,
            mean_syntactic: summary.mean_syntactic,
            mean_structural: summary.mean_structural,
            failure_rate: report.failure_rate,
        });
    }
    Ok(points)
}
