//! End-to-end attack driver and evaluation harness.
//!
//! One attack runs the full pipeline against one service record: resolve
//! guidance (learned, manual, or none, depending on the ablation), generate
//! a surrogate prompt from example pairs, prune input-related words out of
//! it, then score functional consistency on held-out inputs and decide
//! success against the three-axis thresholds.
//!
//! A campaign learns attention once per (category, model), fans attacks out
//! over every record × ablation in parallel, and aggregates success rates
//! with per-stage call accounting. Individual failures are recorded and do
//! not stop the rest of the run.

pub mod inject;
pub mod obfuscate;
pub mod suite;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::template::RoleTemplate;
use crate::gateway::{Backend, BackendConfig, GatewayError};
use crate::metrics::{
    asr, attack_success, similarity_triple, EvalConfig, MetricsError, SimilarityTriple, Thresholds,
};
use crate::model::{Category, Dataset, IoPair, ModelError, PromptRecord, SurrogatePrompt};
use crate::mutation::{
    learn_attention, Attention, AttentionFactor, LearnContext, LearnStats, MutationConfig,
    MutationError,
};
use crate::pruning::tagger::RuleTagger;
use crate::pruning::{
    candidate_related_words, embedding::EmbeddingIndex, select_mask_words, MaskedPrompt,
    PruneConfig, PruneError,
};
use crate::text::folded_tokens;

use suite::EvalInputs;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("harness configuration: {0}")]
    Config(String),
    #[error("surrogate invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Pipeline variants compared in every campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    /// Learned attention plus pruning.
    Full,
    /// Pruning only; the generator receives no guidance.
    NoMutation,
    /// Learned attention only; the surrogate keeps every word.
    NoPruning,
    /// A fixed, hand-written list of generic factors instead of learning.
    ManualAttention,
    /// Plain one-shot surrogate generation.
    Naive,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Full,
        Ablation::NoMutation,
        Ablation::NoPruning,
        Ablation::ManualAttention,
        Ablation::Naive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoMutation => "no-mutation",
            Ablation::NoPruning => "no-pruning",
            Ablation::ManualAttention => "manual-attention",
            Ablation::Naive => "naive",
        }
    }

    pub fn parse(s: &str) -> Option<Ablation> {
        Ablation::ALL.into_iter().find(|a| a.as_str() == s)
    }

    fn uses_learned_attention(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoPruning)
    }

    fn uses_pruning(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoMutation | Ablation::ManualAttention)
    }
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The generic writing aspects a human would guess without looking at any
/// outputs. Used by the manual-attention ablation.
pub const DEFAULT_MANUAL_FACTORS: [(&str, &str); 10] = [
    ("theme", "the main subject matter"),
    ("argument", "the case the text makes"),
    ("structure", "how the text is arranged"),
    ("style", "the writing style"),
    ("tone", "the voice and register"),
    ("vocabulary", "the word choices"),
    ("sentence patterns", "how sentences are formed"),
    ("purpose", "what the text is for"),
    ("audience", "who the text is written for"),
    ("background", "the assumed context"),
];

pub fn manual_attention(category: &Category, model_tag: &str) -> Attention {
    let mut attention = Attention::empty(category.clone(), model_tag);
    for (name, description) in DEFAULT_MANUAL_FACTORS {
        attention.insert(AttentionFactor::new(name, description, 1.0));
    }
    attention
}

/// Where real target outputs come from: a known hidden prompt executed on a
/// family backend, or a live service that already has its prompt embedded.
pub enum TargetHandle<'a> {
    KnownPrompt { backend: &'a Backend, prompt: &'a str },
    Service { backend: &'a Backend },
}

impl<'a> TargetHandle<'a> {
    pub fn output(&self, input: &str) -> Result<String, GatewayError> {
        match self {
            TargetHandle::KnownPrompt { backend, prompt } => backend.complete(prompt, input),
            TargetHandle::Service { backend } => backend.complete_raw(input),
        }
    }

    pub fn backend(&self) -> &'a Backend {
        match self {
            TargetHandle::KnownPrompt { backend, .. } => backend,
            TargetHandle::Service { backend } => backend,
        }
    }

    pub fn hidden_prompt(&self) -> Option<&str> {
        match self {
            TargetHandle::KnownPrompt { prompt, .. } => Some(prompt),
            TargetHandle::Service { .. } => None,
        }
    }
}

/// Backends an attack needs: the target service plus a completion model of
/// the same family for executing candidate prompts, and the generator role.
pub struct AttackEnv<'a> {
    pub target: TargetHandle<'a>,
    pub family: &'a Backend,
    pub generator: &'a Backend,
    pub generator_template: &'a RoleTemplate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub ablation: Ablation,
    pub thresholds: Thresholds,
    pub eval: EvalConfig,
    pub prune: PruneConfig,
    /// Example pairs folded into the generation payload.
    pub generation_pairs: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            ablation: Ablation::Full,
            thresholds: Thresholds::default(),
            eval: EvalConfig::default(),
            prune: PruneConfig::default(),
            generation_pairs: 1,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.thresholds.validate()?;
        self.prune.validate()?;
        if self.generation_pairs == 0 {
            return Err(HarnessError::Config("generation_pairs must be at least 1".into()));
        }
        if self.eval.samples_per_input < 2 {
            return Err(HarnessError::Config(
                "samples_per_input must be at least 2 for self-consistency".into(),
            ));
        }
        if self.eval.inputs == 0 {
            return Err(HarnessError::Config("eval.inputs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Model calls spent per stage, counted where they are issued.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCosts {
    pub generation: u64,
    pub pruning: u64,
    pub evaluation: u64,
}

impl StageCosts {
    pub fn total(&self) -> u64 {
        self.generation + self.pruning + self.evaluation
    }
}

/// Everything one attack produced.
#[derive(Debug, Clone, Serialize)]
pub struct AttackOutcome {
    pub record_id: String,
    pub category: String,
    pub ablation: Ablation,
    pub surrogate: SurrogatePrompt,
    /// Generated prompt before masking.
    pub pre_mask_text: String,
    /// Exact payload handed to the generator.
    pub generation_input: String,
    pub generation_output: String,
    pub eval_inputs: Vec<String>,
    pub triple: SimilarityTriple,
    pub success: bool,
    pub costs: StageCosts,
}

/// Joins example pairs into one generation payload. A single pair passes
/// through verbatim; multiple pairs are numbered line by line so input k
/// lines up with output k.
pub fn generation_payload(pairs: &[IoPair], count: usize) -> (String, String) {
    let count = count.clamp(1, pairs.len());
    if count == 1 {
        return (pairs[0].input.clone(), pairs[0].output.clone());
    }
    let number = |parts: Vec<&str>| {
        parts
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{}) {}", i + 1, p))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let inputs = number(pairs[..count].iter().map(|p| p.input.as_str()).collect());
    let outputs = number(pairs[..count].iter().map(|p| p.output.as_str()).collect());
    (inputs, outputs)
}

/// Runs one attack end to end. `attention` is the learned guidance for the
/// record's category, if any; ablations decide whether it is used.
pub fn run_attack(
    record: &PromptRecord,
    eval_inputs: &[String],
    attention: Option<&Attention>,
    env: &AttackEnv,
    config: &AttackConfig,
) -> Result<AttackOutcome, HarnessError> {
    config.validate()?;
    if record.examples.is_empty() {
        return Err(HarnessError::Config(format!("record {} has no examples", record.id)));
    }
    let manual;
    let guidance: Option<&Attention> = match config.ablation {
        Ablation::Full | Ablation::NoPruning => attention,
        Ablation::ManualAttention => {
            manual = manual_attention(&record.category, env.family.model_tag());
            Some(&manual)
        }
        Ablation::NoMutation | Ablation::Naive => None,
    };

    let mut costs = StageCosts::default();

    // Stage 1: surrogate generation.
    let (generation_input, generation_output) =
        generation_payload(&record.examples, config.generation_pairs);
    let pre_mask_text = env.generator.generate_surrogate(
        env.generator_template,
        &generation_input,
        &generation_output,
        guidance,
    )?;
    costs.generation += 1;

    // Stage 2: pruning.
    let masked: MaskedPrompt = if config.ablation.uses_pruning() {
        let inputs: Vec<&str> = record.examples.iter().map(|p| p.input.as_str()).collect();
        let mut vocabulary = folded_tokens(&pre_mask_text);
        for input in &inputs {
            vocabulary.extend(folded_tokens(input));
        }
        let index = EmbeddingIndex::hashed(vocabulary.iter().map(String::as_str), 64);
        let candidates =
            candidate_related_words(&pre_mask_text, &inputs, &index, &RuleTagger, &config.prune);
        let prune_calls = &mut costs.pruning;
        let selection = select_mask_words(&pre_mask_text, &candidates, &config.prune, |text| {
            let mut total = 0.0;
            for pair in &record.examples {
                *prune_calls += 1;
                let output =
                    env.family.complete(text, &pair.input).map_err(|e| e.to_string())?;
                total += crate::metrics::bleu(&output, &[pair.output.as_str()])
                    .map_err(|e| e.to_string())?;
            }
            Ok(total / record.examples.len() as f64)
        })?;
        selection.masked
    } else {
        MaskedPrompt {
            text: pre_mask_text.clone(),
            masked_words: Vec::new(),
            placeholder_count: pre_mask_text.matches(&config.prune.placeholder).count(),
        }
    };

    let surrogate = SurrogatePrompt {
        text: masked.text.clone(),
        masked_words: masked.masked_words.clone(),
        placeholder_count: masked.placeholder_count,
        attention_id: guidance.map(|a| a.id()),
        source_record_id: record.id.clone(),
    };
    surrogate.check(&pre_mask_text, &config.prune.placeholder).map_err(HarnessError::Invariant)?;

    // Stage 3: functional-consistency evaluation on held-out inputs.
    let chosen: Vec<String> = if eval_inputs.is_empty() {
        record.examples.iter().take(config.eval.inputs).map(|p| p.input.clone()).collect()
    } else {
        eval_inputs.iter().take(config.eval.inputs).cloned().collect()
    };
    let m = config.eval.samples_per_input;
    let mut surrogate_grid = Vec::with_capacity(chosen.len());
    let mut target_grid = Vec::with_capacity(chosen.len());
    for input in &chosen {
        let mut surrogate_row = Vec::with_capacity(m);
        let mut target_row = Vec::with_capacity(m);
        for _ in 0..m {
            surrogate_row.push(env.family.complete(&surrogate.text, input)?);
            costs.evaluation += 1;
            target_row.push(env.target.output(input)?);
            costs.evaluation += 1;
        }
        surrogate_grid.push(surrogate_row);
        target_grid.push(target_row);
    }
    let triple = similarity_triple(&surrogate_grid, &target_grid)?;
    let success = attack_success(&triple, &config.thresholds);

    Ok(AttackOutcome {
        record_id: record.id.clone(),
        category: record.category.to_string(),
        ablation: config.ablation,
        surrogate,
        pre_mask_text,
        generation_input,
        generation_output,
        eval_inputs: chosen,
        triple,
        success,
        costs,
    })
}

/// The shared backends and templates a campaign runs on. Generator and
/// difference analyzer default to deterministic settings.
pub struct CampaignRoles {
    pub family: Backend,
    pub generator: Backend,
    pub differ: Backend,
    pub generator_template: RoleTemplate,
    pub differ_template: RoleTemplate,
}

impl CampaignRoles {
    /// All three roles on one backend configuration; generator and differ
    /// run at temperature zero.
    pub fn from_config(config: &BackendConfig) -> Result<Self, GatewayError> {
        Ok(CampaignRoles {
            family: Backend::new(config)?,
            generator: Backend::new(&config.clone().with_temperature(0.0))?,
            differ: Backend::new(&config.clone().with_temperature(0.0))?,
            generator_template: RoleTemplate::default_generator(),
            differ_template: RoleTemplate::default_differ(),
        })
    }

    pub fn learn_context(&self) -> LearnContext<'_> {
        LearnContext {
            target: &self.family,
            generator: &self.generator,
            differ: &self.differ,
            generator_template: &self.generator_template,
            differ_template: &self.differ_template,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub ablations: Vec<Ablation>,
    pub thresholds: Thresholds,
    pub eval: EvalConfig,
    pub prune: PruneConfig,
    pub mutation: MutationConfig,
    pub generation_pairs: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            ablations: Ablation::ALL.to_vec(),
            thresholds: Thresholds::default(),
            eval: EvalConfig::default(),
            prune: PruneConfig::default(),
            mutation: MutationConfig::default(),
            generation_pairs: 1,
        }
    }
}

impl CampaignConfig {
    fn attack_config(&self, ablation: Ablation) -> AttackConfig {
        AttackConfig {
            ablation,
            thresholds: self.thresholds,
            eval: self.eval,
            prune: self.prune.clone(),
            generation_pairs: self.generation_pairs,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.ablations.is_empty() {
            return Err(HarnessError::Config("at least one ablation is required".into()));
        }
        self.mutation.validate()?;
        self.attack_config(self.ablations[0]).validate()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LearningSummary {
    pub category: String,
    pub model: String,
    pub factor_count: usize,
    pub attention_id: String,
    pub stats: LearnStats,
}

/// One attack's result inside a campaign report; failed attacks carry the
/// error and no scores.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeRow {
    pub record_id: String,
    pub category: String,
    pub ablation: Ablation,
    pub surrogate_text: Option<String>,
    pub masked_words: Vec<String>,
    pub attention_id: Option<String>,
    pub triple: Option<SimilarityTriple>,
    pub success: Option<bool>,
    pub error: Option<String>,
    pub costs: StageCosts,
}

impl OutcomeRow {
    fn from_outcome(outcome: AttackOutcome) -> Self {
        OutcomeRow {
            record_id: outcome.record_id,
            category: outcome.category,
            ablation: outcome.ablation,
            surrogate_text: Some(outcome.surrogate.text),
            masked_words: outcome.surrogate.masked_words,
            attention_id: outcome.surrogate.attention_id,
            triple: Some(outcome.triple),
            success: Some(outcome.success),
            error: None,
            costs: outcome.costs,
        }
    }

    fn failed(record: &PromptRecord, ablation: Ablation, error: &str) -> Self {
        OutcomeRow {
            record_id: record.id.clone(),
            category: record.category.to_string(),
            ablation,
            surrogate_text: None,
            masked_words: Vec::new(),
            attention_id: None,
            triple: None,
            success: None,
            error: Some(error.to_string()),
            costs: StageCosts::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryBreakdown {
    pub category: String,
    pub evaluated: usize,
    pub wins: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationSummary {
    pub ablation: Ablation,
    pub attempts: usize,
    pub evaluated: usize,
    pub wins: usize,
    pub asr: Option<f64>,
    pub mean_semantic: Option<f64>,
    pub mean_syntactic: Option<f64>,
    pub mean_structural: Option<f64>,
    pub categories: Vec<CategoryBreakdown>,
}

/// Total calls each backend issued over the whole campaign, retries
/// included.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BackendCalls {
    pub family: u64,
    pub generator: u64,
    pub differ: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub created_at: String,
    pub model: String,
    pub thresholds: Thresholds,
    pub record_count: usize,
    pub learning: Vec<LearningSummary>,
    pub ablations: Vec<AblationSummary>,
    pub outcomes: Vec<OutcomeRow>,
    pub backend_calls: BackendCalls,
    /// Fraction of attacks that errored instead of being evaluated.
    pub failure_rate: f64,
}

fn summarize(ablation: Ablation, rows: &[OutcomeRow]) -> AblationSummary {
    let mine: Vec<&OutcomeRow> = rows.iter().filter(|r| r.ablation == ablation).collect();
    let evaluated: Vec<&OutcomeRow> = mine.iter().filter(|r| r.error.is_none()).copied().collect();
    let flags: Vec<bool> = evaluated.iter().map(|r| r.success == Some(true)).collect();
    let wins = flags.iter().filter(|&&f| f).count();
    let mean_of = |pick: &dyn Fn(&SimilarityTriple) -> f64| -> Option<f64> {
        if evaluated.is_empty() {
            return None;
        }
        let sum: f64 = evaluated.iter().filter_map(|r| r.triple.as_ref()).map(pick).sum();
        Some(sum / evaluated.len() as f64)
    };
    let mut categories: Vec<CategoryBreakdown> = Vec::new();
    for row in &evaluated {
        match categories.iter_mut().find(|c| c.category == row.category) {
            Some(entry) => {
                entry.evaluated += 1;
                entry.wins += usize::from(row.success == Some(true));
            }
            None => categories.push(CategoryBreakdown {
                category: row.category.clone(),
                evaluated: 1,
                wins: usize::from(row.success == Some(true)),
            }),
        }
    }
    AblationSummary {
        ablation,
        attempts: mine.len(),
        evaluated: evaluated.len(),
        wins,
        asr: asr(&flags).ok(),
        mean_semantic: mean_of(&|t| t.semantic),
        mean_syntactic: mean_of(&|t| t.syntactic),
        mean_structural: mean_of(&|t| t.structural),
        categories,
    }
}

/// Runs every configured ablation over every record. Records must carry
/// their hidden prompts so real target outputs can be produced.
pub fn run_campaign(
    dataset: &Dataset,
    eval_inputs: &EvalInputs,
    roles: &CampaignRoles,
    config: &CampaignConfig,
) -> Result<CampaignReport, HarnessError> {
    config.validate()?;
    if dataset.records().is_empty() {
        return Err(HarnessError::Config("dataset has no records".into()));
    }

    // Learn attention once per (category, model) when any ablation wants it.
    let mut attention_map: BTreeMap<Category, Attention> = BTreeMap::new();
    let mut learning = Vec::new();
    if config.ablations.iter().any(|a| a.uses_learned_attention()) {
        for (category, model) in dataset.category_model_pairs() {
            if model != roles.family.model_tag() {
                continue;
            }
            let records: Vec<PromptRecord> = dataset
                .records_for(&category)
                .into_iter()
                .filter(|r| r.target_model_tag == model)
                .cloned()
                .collect();
            let outcome = learn_attention(&records, &roles.learn_context(), &config.mutation)?;
            learning.push(LearningSummary {
                category: category.to_string(),
                model: model.clone(),
                factor_count: outcome.attention.len(),
                attention_id: outcome.attention.id(),
                stats: outcome.stats,
            });
            attention_map.insert(category, outcome.attention);
        }
    }

    let jobs: Vec<(Ablation, &PromptRecord)> = config
        .ablations
        .iter()
        .flat_map(|a| dataset.records().iter().map(move |r| (*a, r)))
        .collect();

    let outcomes: Vec<OutcomeRow> = jobs
        .par_iter()
        .map(|&(ablation, record)| {
            if record.target_model_tag != roles.family.model_tag() {
                return OutcomeRow::failed(
                    record,
                    ablation,
                    &format!(
                        "record targets model {:?} but the campaign backend is {:?}",
                        record.target_model_tag,
                        roles.family.model_tag()
                    ),
                );
            }
            let Some(prompt) = record.prompt_text.as_deref() else {
                return OutcomeRow::failed(
                    record,
                    ablation,
                    "record carries no hidden prompt to produce target outputs from",
                );
            };
            let env = AttackEnv {
                target: TargetHandle::KnownPrompt { backend: &roles.family, prompt },
                family: &roles.family,
                generator: &roles.generator,
                generator_template: &roles.generator_template,
            };
            let held_out = eval_inputs.inputs.get(&record.id).cloned().unwrap_or_default();
            match run_attack(
                record,
                &held_out,
                attention_map.get(&record.category),
                &env,
                &config.attack_config(ablation),
            ) {
                Ok(outcome) => OutcomeRow::from_outcome(outcome),
                Err(e) => OutcomeRow::failed(record, ablation, &e.to_string()),
            }
        })
        .collect();

    let ablations: Vec<AblationSummary> =
        config.ablations.iter().map(|&a| summarize(a, &outcomes)).collect();
    let failed = outcomes.iter().filter(|r| r.error.is_some()).count();
    Ok(CampaignReport {
        created_at: chrono::Utc::now().to_rfc3339(),
        model: roles.family.model_tag().to_string(),
        thresholds: config.thresholds,
        record_count: dataset.records().len(),
        learning,
        ablations,
        outcomes,
        backend_calls: BackendCalls {
            family: roles.family.call_count(),
            generator: roles.generator.call_count(),
            differ: roles.differ.call_count(),
        },
        failure_rate: failed as f64 / jobs.len().max(1) as f64,
    })
}

/// Human-readable campaign summary.
pub fn render_text_summary(report: &CampaignReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "campaign against {} — {} records, thresholds sem {} / syn {} / str {}\n",
        report.model,
        report.record_count,
        report.thresholds.semantic,
        report.thresholds.syntactic,
        report.thresholds.structural
    ));
    for l in &report.learning {
        out.push_str(&format!(
            "learned {:>2} factors for {} ({} rounds, {} model calls)\n",
            l.factor_count,
            l.category,
            l.stats.rounds_run,
            l.stats.generator_calls + l.stats.target_calls + l.stats.differ_calls
        ));
    }
    for s in &report.ablations {
        let asr_text = s
            .asr
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "n/a".to_string());
        out.push_str(&format!(
            "{:<17} asr {} ({:>2}/{:<2})",
            s.ablation.to_string(),
            asr_text,
            s.wins,
            s.evaluated
        ));
        if let (Some(sem), Some(syn), Some(st)) =
            (s.mean_semantic, s.mean_syntactic, s.mean_structural)
        {
            out.push_str(&format!("  sem {sem:.3} syn {syn:.3} str {st:.3}"));
        }
        out.push('\n');
    }
    if report.failure_rate > 0.0 {
        out.push_str(&format!("failures: {:.0}% of attacks errored\n", report.failure_rate * 100.0));
    }
    out.push_str(&format!(
        "model calls: family {} generator {} differ {}\n",
        report.backend_calls.family, report.backend_calls.generator, report.backend_calls.differ
    ));
    out
}
