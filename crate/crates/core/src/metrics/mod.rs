//! Functional-consistency scoring between surrogate and target outputs.
//!
//! Three base metrics (semantic BLEU, syntactic tree-kernel similarity,
//! structural reciprocal-JS) are each normalized by how consistent the target
//! is with itself: for every test input, the mean surrogate-to-target
//! similarity over all sample pairs is divided by the mean target-to-target
//! similarity over distinct sample pairs, and the per-input ratios are
//! averaged. An attack succeeds when all three normalized scores clear their
//! thresholds; thresholds can be recalibrated from labeled data by grid
//! search.

pub mod bleu;
pub mod structural;
pub mod syntax;

use serde::{Deserialize, Serialize};

pub use bleu::bleu;
pub use structural::{js_divergence, structural_similarity, STRUCTURAL_EPSILON};
pub use syntax::{syntactic_similarity, syntactic_similarity_with, ShallowParser, SyntaxProvider};

/// Lower clamp for normalized scores. Keeps every reported component inside
/// (0, 1] even when the raw ratio is zero.
pub const MIN_SCORE: f64 = 1e-12;

/// Which base similarity to feed through the consistency normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMetric {
    Semantic,
    Syntactic,
    Structural,
}

impl BaseMetric {
    /// Pairwise similarity under this metric.
    pub fn pair(&self, a: &str, b: &str) -> Result<f64, MetricsError> {
        match self {
            BaseMetric::Semantic => bleu(a, &[b]),
            BaseMetric::Syntactic => Ok(syntactic_similarity(a, b)),
            BaseMetric::Structural => structural_similarity(a, b),
        }
    }
}

/// A normalized score plus the raw (pre-clamp) ratio. Ratios above 1 happen
/// when surrogate-to-target agreement beats the target's self-agreement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreOutcome {
    pub value: f64,
    pub raw: f64,
}

impl ScoreOutcome {
    fn from_raw(raw: f64) -> ScoreOutcome {
        ScoreOutcome { value: raw.min(1.0).max(MIN_SCORE), raw }
    }
}

/// The three normalized scores for one attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTriple {
    pub semantic: f64,
    pub syntactic: f64,
    pub structural: f64,
    /// Raw ratios before clamping, same order as the named fields.
    pub raw: [f64; 3],
}

impl SimilarityTriple {
    pub fn new(semantic: ScoreOutcome, syntactic: ScoreOutcome, structural: ScoreOutcome) -> Self {
        SimilarityTriple {
            semantic: semantic.value,
            syntactic: syntactic.value,
            structural: structural.value,
            raw: [semantic.raw, syntactic.raw, structural.raw],
        }
    }
}

/// Success thresholds for the three axes. The defaults are the operating
/// point used throughout the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub semantic: f64,
    pub syntactic: f64,
    pub structural: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { semantic: 0.6, syntactic: 0.75, structural: 0.9 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), MetricsError> {
        for v in [self.semantic, self.syntactic, self.structural] {
            if !(0.0..=1.0).contains(&v) {
                return Err(MetricsError::BadThreshold(v));
            }
        }
        Ok(())
    }
}

/// Evaluation protocol: how many test inputs and how many samples per input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Number of test inputs (n).
    pub inputs: usize,
    /// Samples per input from each side (m); must be at least 2 so the
    /// target's self-consistency is defined.
    pub samples_per_input: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { inputs: 2, samples_per_input: 3 }
    }
}

/// Consistency-normalized score over output grids.
///
/// `surrogate` and `target` are n rows (inputs) of m samples each. For input
/// i the numerator averages metric(surrogate_ij, target_ik) over all m×m
/// pairs; the denominator averages metric(target_ij, target_ik) over all
/// m(m-1) ordered pairs, so sample order never matters even when the base
/// metric is asymmetric; the score is the mean ratio across inputs.
pub fn output_score(
    surrogate: &[Vec<String>],
    target: &[Vec<String>],
    metric: BaseMetric,
) -> Result<ScoreOutcome, MetricsError> {
    if surrogate.is_empty() || surrogate.len() != target.len() {
        return Err(MetricsError::GridShape(format!(
            "need matching non-empty grids, got {} vs {} inputs",
            surrogate.len(),
            target.len()
        )));
    }
    let m = target[0].len();
    if m < 2 {
        return Err(MetricsError::TooFewSamples(m));
    }
    if surrogate.iter().any(|r| r.len() != m) || target.iter().any(|r| r.len() != m) {
        return Err(MetricsError::GridShape("ragged sample rows".to_string()));
    }
    let mut ratio_sum = 0.0;
    for (s_row, t_row) in surrogate.iter().zip(target) {
        let mut num = 0.0;
        for s in s_row {
            for t in t_row {
                num += metric.pair(s, t)?;
            }
        }
        num /= (m * m) as f64;
        let mut den = 0.0;
        for j in 0..m {
            for k in 0..m {
                if j != k {
                    den += metric.pair(&t_row[j], &t_row[k])?;
                }
            }
        }
        den /= (m * (m - 1)) as f64;
        if den == 0.0 {
            return Err(MetricsError::DegenerateTarget);
        }
        ratio_sum += num / den;
    }
    Ok(ScoreOutcome::from_raw(ratio_sum / surrogate.len() as f64))
}

/// All three normalized scores for one pair of output grids.
pub fn similarity_triple(
    surrogate: &[Vec<String>],
    target: &[Vec<String>],
) -> Result<SimilarityTriple, MetricsError> {
    Ok(SimilarityTriple::new(
        output_score(surrogate, target, BaseMetric::Semantic)?,
        output_score(surrogate, target, BaseMetric::Syntactic)?,
        output_score(surrogate, target, BaseMetric::Structural)?,
    ))
}

/// Success rule: every component must meet or exceed its threshold.
pub fn attack_success(triple: &SimilarityTriple, thresholds: &Thresholds) -> bool {
    triple.semantic >= thresholds.semantic
        && triple.syntactic >= thresholds.syntactic
        && triple.structural >= thresholds.structural
}

/// Attack success rate over a batch of success flags.
pub fn asr(successes: &[bool]) -> Result<f64, MetricsError> {
    if successes.is_empty() {
        return Err(MetricsError::EmptyResults);
    }
    let wins = successes.iter().filter(|&&s| s).count();
    Ok(wins as f64 / successes.len() as f64)
}

/// One labeled evaluation: the scores an attack produced and whether a human
/// (or construction) judged it successful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledTriple {
    pub semantic: f64,
    pub syntactic: f64,
    pub structural: f64,
    pub label: bool,
}

/// Output of threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub thresholds: Thresholds,
    pub accuracy: f64,
}

/// Exhaustive grid search for the thresholds that best reproduce the labels.
///
/// The grid is {0, step, 2·step, …, 1} on each axis. Accuracy ties prefer the
/// higher semantic threshold, then syntactic, then structural, so the result
/// is deterministic. Requires both labels to occur in the sample.
pub fn calibrate_thresholds(
    samples: &[LabeledTriple],
    grid_step: f64,
) -> Result<Calibration, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(MetricsError::BadGridStep(grid_step));
    }
    let positives = samples.iter().filter(|s| s.label).count();
    if positives == 0 || positives == samples.len() {
        return Err(MetricsError::SingleLabel);
    }
    let steps = (1.0 / grid_step).round() as usize;
    let value = |k: usize| k as f64 / steps as f64;

    use rayon::prelude::*;
    // Each semantic slice finds its own best; slices merge with the same
    // tie-break (higher indices win), so the result is order-independent.
    let best = (0..=steps)
        .into_par_iter()
        .map(|si| {
            let mut local: (usize, usize, usize, usize) = (0, 0, 0, 0); // correct, si, yi, ti
            for yi in 0..=steps {
                for ti in 0..=steps {
                    let (gs, gy, gt) = (value(si), value(yi), value(ti));
                    let correct = samples
                        .iter()
                        .filter(|s| {
                            let predicted =
                                s.semantic >= gs && s.syntactic >= gy && s.structural >= gt;
                            predicted == s.label
                        })
                        .count();
                    let candidate = (correct, si, yi, ti);
                    if candidate > local {
                        local = candidate;
                    }
                }
            }
            local
        })
        .reduce(|| (0, 0, 0, 0), std::cmp::max);

    let (correct, si, yi, ti) = best;
    Ok(Calibration {
        thresholds: Thresholds {
            semantic: value(si),
            syntactic: value(yi),
            structural: value(ti),
        },
        accuracy: correct as f64 / samples.len() as f64,
    })
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("reference list must be non-empty")]
    EmptyReferences,
    #[error("empty text has no token distribution")]
    EmptyText,
    #[error("bad output grid: {0}")]
    GridShape(String),
    #[error("need at least 2 samples per input, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate target outputs: self-similarity is zero")]
    DegenerateTarget,
    #[error("threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("no results to aggregate")]
    EmptyResults,
    #[error("no samples to calibrate on")]
    EmptySamples,
    #[error("calibration needs both labels present")]
    SingleLabel,
    #[error("grid step {0} outside (0, 1]")]
    BadGridStep(f64),
}
