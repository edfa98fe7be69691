//! Learning what a hidden prompt pays attention to.
//!
//! The attacker cannot see the hidden prompt, but can compare outputs: run a
//! candidate surrogate prompt over an example input, diff the result against
//! the example output, and collect the named factors on which they differ.
//! Factors whose loss clears a retention threshold accumulate into an
//! [`Attention`] — a per-(category, model) summary like "tone/formal: output
//! voice is formal" — which is fed back to the surrogate generator on the
//! next round. Iterating drives the diff toward empty.
//!
//! Attention is a set keyed by normalized factor name. Merging keeps the
//! maximum loss and the longer description, so updates commute and repeating
//! a report changes nothing; learning runs are insensitive to report order.
//! [`store::AttentionStore`] persists learned attention per (category,
//! model) pair with a versioned history.

pub mod store;

pub use store::AttentionStore;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Backend, DifferenceReport, GatewayError};
use crate::gateway::template::RoleTemplate;
use crate::model::{Category, PromptRecord};
use crate::text::fnv1a;

#[derive(Debug, Error)]
pub enum MutationError {
    #[error("no stored attention for category {category:?} and model {model:?}")]
    AttentionMissing { category: String, model: String },
    #[error("attention store i/o at {path}: {source}")]
    StoreIo { path: String, #[source] source: std::io::Error },
    #[error("attention store parse at {path}: {source}")]
    StoreParse { path: String, #[source] source: serde_json::Error },
    #[error("invalid mutation configuration: {0}")]
    InvalidConfig(String),
    #[error("learning needs at least one record with examples")]
    NoRecords,
    #[error("record {id} has category {found:?}, expected {expected:?}")]
    MixedCategories { id: String, found: String, expected: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// One learned aspect the hidden prompt controls, with the largest loss ever
/// observed for it. Names are normalized to lowercase collapsed whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionFactor {
    pub name: String,
    pub description: String,
    pub loss: f64,
}

impl AttentionFactor {
    pub fn new(name: &str, description: &str, loss: f64) -> Self {
        AttentionFactor {
            name: crate::text::normalize_ws(name),
            description: description.trim().to_string(),
            loss,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawAttention {
    category: Category,
    #[serde(rename = "model")]
    model_tag: String,
    factors: Vec<AttentionFactor>,
}

/// The learned attention for one (category, model) pair. Factors are kept
/// sorted by name, so two attentions built from the same facts in any order
/// compare equal and serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawAttention")]
pub struct Attention {
    pub category: Category,
    #[serde(rename = "model")]
    pub model_tag: String,
    factors: Vec<AttentionFactor>,
}

impl From<RawAttention> for Attention {
    fn from(raw: RawAttention) -> Self {
        let mut att = Attention::empty(raw.category, &raw.model_tag);
        for f in raw.factors {
            att.insert(f);
        }
        att
    }
}

impl Attention {
    pub fn empty(category: Category, model_tag: &str) -> Self {
        Attention { category, model_tag: model_tag.to_string(), factors: Vec::new() }
    }

    pub fn factors(&self) -> &[AttentionFactor] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    /// Merges one factor in. Keeps the maximum loss and the longer
    /// description (ties broken lexicographically), so insertion order never
    /// matters. Returns true when anything changed.
    pub fn insert(&mut self, factor: AttentionFactor) -> bool {
        if factor.name.is_empty() {
            return false;
        }
        match self.factors.binary_search_by(|f| f.name.as_str().cmp(&factor.name)) {
            Ok(i) => {
                let existing = &mut self.factors[i];
                let mut changed = false;
                if factor.loss > existing.loss {
                    existing.loss = factor.loss;
                    changed = true;
                }
                let better = factor.description.len() > existing.description.len()
                    || (factor.description.len() == existing.description.len()
                        && factor.description > existing.description);
                if better {
                    existing.description = factor.description;
                    changed = true;
                }
                changed
            }
            Err(i) => {
                self.factors.insert(i, factor);
                true
            }
        }
    }

    /// Folds a difference report in, keeping only factors whose loss clears
    /// `threshold`. Returns the number of factors that changed the set.
    pub fn absorb(&mut self, report: &DifferenceReport, threshold: f64) -> usize {
        report
            .factors()
            .iter()
            .filter(|f| f.loss >= threshold)
            .map(|f| AttentionFactor::new(&f.name, &f.description, f.loss))
            .filter(|f| self.insert(f.clone()))
            .count()
    }

    /// Text block handed to the surrogate generator: one line per factor.
    pub fn focus_text(&self) -> String {
        self.factors
            .iter()
            .map(|f| format!("focus on: {} - {}", f.name, f.description))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Content-derived identifier, stable across runs and factor insertion
    /// order.
    pub fn id(&self) -> String {
        let mut canon = format!("{}\u{1}{}", self.category, self.model_tag);
        for f in &self.factors {
            canon.push('\u{2}');
            canon.push_str(&f.name);
            canon.push('\u{3}');
            canon.push_str(&f.description);
            canon.push('\u{3}');
            canon.push_str(&format!("{:016x}", f.loss.to_bits()));
        }
        format!("att-{:016x}", fnv1a(canon.as_bytes()))
    }
}

/// How the learning loop walks the examples: refine one record to a fixed
/// point before moving on, or sweep all records once per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopMode {
    PerRecord,
    Global,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationConfig {
    /// Refinement rounds per example pair (or per sweep in `Global` mode).
    pub iterations: u32,
    /// Minimum loss a difference factor needs to be retained.
    pub retention_threshold: f64,
    /// Maximum example pairs consumed per category.
    pub samples_per_category: usize,
    pub loop_mode: LoopMode,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            iterations: 3,
            retention_threshold: 0.3,
            samples_per_category: 12,
            loop_mode: LoopMode::PerRecord,
        }
    }
}

impl MutationConfig {
    pub fn validate(&self) -> Result<(), MutationError> {
        if !(0.0..=1.0).contains(&self.retention_threshold) {
            return Err(MutationError::InvalidConfig(format!(
                "retention_threshold {} outside [0, 1]",
                self.retention_threshold
            )));
        }
        if self.samples_per_category == 0 {
            return Err(MutationError::InvalidConfig(
                "samples_per_category must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The three model roles learning needs: a completion model of the target's
/// family to execute candidate prompts, a generator, and a difference
/// analyzer.
pub struct LearnContext<'a> {
    pub target: &'a Backend,
    pub generator: &'a Backend,
    pub differ: &'a Backend,
    pub generator_template: &'a RoleTemplate,
    pub differ_template: &'a RoleTemplate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LearnStats {
    pub pairs_used: usize,
    pub rounds_run: u64,
    pub generator_calls: u64,
    pub target_calls: u64,
    pub differ_calls: u64,
}

#[derive(Debug)]
pub struct LearnOutcome {
    pub attention: Attention,
    pub stats: LearnStats,
}

/// Runs the output-difference learning loop over one category's records (in
/// the order given) and returns the accumulated attention.
///
/// Each round: generate a surrogate prompt for an example pair (guided by
/// the attention gathered so far — the very first round starts unguided),
/// execute it, diff the result against the example output, and absorb the
/// factors that clear the retention threshold. A pair stops early once a
/// round leaves the attention unchanged, since the next surrogate would be
/// built from identical guidance.
pub fn learn_attention(
    records: &[PromptRecord],
    ctx: &LearnContext,
    config: &MutationConfig,
) -> Result<LearnOutcome, MutationError> {
    config.validate()?;
    let first = records.first().ok_or(MutationError::NoRecords)?;
    let category = first.category.clone();
    for r in records {
        if r.category != category {
            return Err(MutationError::MixedCategories {
                id: r.id.clone(),
                found: r.category.to_string(),
                expected: category.to_string(),
            });
        }
    }
    let mut attention = Attention::empty(category, ctx.target.model_tag());
    let mut stats = LearnStats::default();

    let mut pairs: Vec<(&str, &str)> = Vec::new();
    'collect: for record in records {
        for pair in &record.examples {
            if pairs.len() >= config.samples_per_category {
                break 'collect;
            }
            pairs.push((pair.input.as_str(), pair.output.as_str()));
        }
    }
    stats.pairs_used = pairs.len();

    let round = |attention: &mut Attention, stats: &mut LearnStats, input: &str, output: &str| -> Result<usize, MutationError> {
        let guidance = if attention.is_empty() { None } else { Some(&*attention) };
        let surrogate =
            ctx.generator.generate_surrogate(ctx.generator_template, input, output, guidance)?;
        stats.generator_calls += 1;
        let surrogate_output = ctx.target.complete(&surrogate, input)?;
        stats.target_calls += 1;
        let report =
            ctx.differ.analyze_difference(ctx.differ_template, &surrogate_output, output)?;
        stats.differ_calls += 1;
        stats.rounds_run += 1;
        Ok(attention.absorb(&report, config.retention_threshold))
    };

    match config.loop_mode {
        LoopMode::PerRecord => {
            for (input, output) in &pairs {
                for _ in 0..config.iterations {
                    if round(&mut attention, &mut stats, input, output)? == 0 {
                        break;
                    }
                }
            }
        }
        LoopMode::Global => {
            for _ in 0..config.iterations {
                let mut changed = 0;
                for (input, output) in &pairs {
                    changed += round(&mut attention, &mut stats, input, output)?;
                }
                if changed == 0 {
                    break;
                }
            }
        }
    }
    Ok(LearnOutcome { attention, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{BackendConfig, DifferenceFactor};
    use crate::model::IoPair;

    fn factor(name: &str, desc: &str, loss: f64) -> DifferenceFactor {
        DifferenceFactor::new(name, desc, loss)
    }

    fn mock_record(id: &str, category: &str, hidden: &str, inputs: &[&str]) -> PromptRecord {
        let llm = crate::gateway::mock::MockLlm::new("mock-a", 7, true);
        PromptRecord {
            id: id.to_string(),
            category: Category::new(category).unwrap(),
            target_model_tag: "mock-a".to_string(),
            prompt_text: Some(hidden.to_string()),
            examples: inputs
                .iter()
                .map(|i| IoPair { input: i.to_string(), output: llm.complete(hidden, i) })
                .collect(),
        }
    }

    struct MockRoles {
        target: Backend,
        generator: Backend,
        differ: Backend,
        gen_tpl: RoleTemplate,
        diff_tpl: RoleTemplate,
    }

    impl MockRoles {
        fn new() -> Self {
            MockRoles {
                target: Backend::new(&BackendConfig::default()).unwrap(),
                generator: Backend::new(&BackendConfig::default().with_temperature(0.0)).unwrap(),
                differ: Backend::new(&BackendConfig::default().with_temperature(0.0)).unwrap(),
                gen_tpl: RoleTemplate::default_generator(),
                diff_tpl: RoleTemplate::default_differ(),
            }
        }

        fn ctx(&self) -> LearnContext<'_> {
            LearnContext {
                target: &self.target,
                generator: &self.generator,
                differ: &self.differ,
                generator_template: &self.gen_tpl,
                differ_template: &self.diff_tpl,
            }
        }
    }

    #[test]
    fn factor_names_are_normalized() {
        let f = AttentionFactor::new("  Tone/Formal \t extra ", " stiff ", 0.5);
        assert_eq!(f.name, "tone/formal extra");
        assert_eq!(f.description, "stiff");
    }

    #[test]
    fn insert_keeps_max_loss_and_longer_description() {
        let cat = Category::new("ads").unwrap();
        let mut a = Attention::empty(cat.clone(), "m");
        assert!(a.insert(AttentionFactor::new("tone", "short", 0.8)));
        assert!(a.insert(AttentionFactor::new("TONE", "a much longer description", 0.2)));
        assert_eq!(a.len(), 1);
        assert_eq!(a.factors()[0].loss, 0.8);
        assert_eq!(a.factors()[0].description, "a much longer description");
        // Re-inserting the merged state is a no-op.
        assert!(!a.insert(AttentionFactor::new("tone", "a much longer description", 0.8)));

        // The same facts in the opposite order give the same attention.
        let mut b = Attention::empty(cat, "m");
        b.insert(AttentionFactor::new("TONE", "a much longer description", 0.2));
        b.insert(AttentionFactor::new("tone", "short", 0.8));
        assert_eq!(a, b);
        assert_eq!(a.id(), b.id());
    }

    #[test]
    fn absorb_respects_threshold_inclusively() {
        let mut a = Attention::empty(Category::new("ads").unwrap(), "m");
        let report = DifferenceReport::new(vec![
            factor("kept", "at the line", 0.3),
            factor("dropped", "just under", 0.2999),
            factor("strong", "well over", 0.9),
        ]);
        let changed = a.absorb(&report, 0.3);
        assert_eq!(changed, 2);
        let names: Vec<&str> = a.factors().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, vec!["kept", "strong"]);
        assert!(a.factors().iter().all(|f| f.loss >= 0.3));
    }

    #[test]
    fn absorbing_reports_is_permutation_invariant() {
        let reports = vec![
            DifferenceReport::new(vec![factor("theme", "subject", 0.7), factor("tone", "t", 0.4)]),
            DifferenceReport::new(vec![factor("tone", "a longer tone note", 0.35)]),
            DifferenceReport::new(vec![factor("style", "emoji use", 1.0)]),
            DifferenceReport::new(vec![factor("theme", "the broad subject area", 0.5)]),
        ];
        let build = |order: &[usize]| {
            let mut a = Attention::empty(Category::new("ads").unwrap(), "m");
            for &i in order {
                a.absorb(&reports[i], 0.3);
            }
            a
        };
        let reference = build(&[0, 1, 2, 3]);
        // All 24 permutations of four reports.
        let mut orders = Vec::new();
        for i in 0..4usize {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let o = [i, j, k, l];
                        let mut s = o;
                        s.sort();
                        if s == [0, 1, 2, 3] {
                            orders.push(o);
                        }
                    }
                }
            }
        }
        assert_eq!(orders.len(), 24);
        for o in orders {
            let a = build(&o);
            assert_eq!(a, reference, "order {o:?} diverged");
            assert_eq!(a.id(), reference.id());
        }
        // Absorbing everything twice is idempotent.
        let mut twice = reference.clone();
        for r in &reports {
            twice.absorb(r, 0.3);
        }
        assert_eq!(twice, reference);
    }

    #[test]
    fn focus_text_lists_factors_by_name() {
        let mut a = Attention::empty(Category::new("ads").unwrap(), "m");
        a.insert(AttentionFactor::new("tone/formal", "voice is formal", 0.9));
        a.insert(AttentionFactor::new("structure/title", "opens with a title", 1.0));
        let text = a.focus_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            vec![
                "focus on: structure/title - opens with a title",
                "focus on: tone/formal - voice is formal",
            ]
        );
        assert_eq!(Attention::empty(Category::new("x").unwrap(), "m").focus_text(), "");
    }

    #[test]
    fn attention_roundtrips_through_json() {
        let mut a = Attention::empty(Category::new("ads").unwrap(), "mock-a");
        a.insert(AttentionFactor::new("style/emoji", "emoji decoration", 1.0));
        a.insert(AttentionFactor::new("tone/formal", "formal voice", 0.5));
        let text = serde_json::to_string(&a).unwrap();
        let back: Attention = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        // Unsorted or duplicated input normalizes on load.
        let messy = r#"{"category":"ads","model":"mock-a","factors":[
            {"name":"z","description":"zz","loss":0.5},
            {"name":"a","description":"aa","loss":0.4},
            {"name":"z","description":"longer zz","loss":0.2}]}"#;
        let parsed: Attention = serde_json::from_str(messy).unwrap();
        let names: Vec<&str> = parsed.factors().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, vec!["a", "z"]);
        assert_eq!(parsed.factors()[1].loss, 0.5);
        assert_eq!(parsed.factors()[1].description, "longer zz");
    }

    #[test]
    fn learning_surfaces_planted_directives_in_one_iteration() {
        let roles = MockRoles::new();
        let record = mock_record(
            "ads-1",
            "ads",
            "Generate a product copywriting for the given item. Use emoji icons. Generate relevant tags.",
            &["mobile phone", "wireless earbuds"],
        );
        let config = MutationConfig { iterations: 1, ..MutationConfig::default() };
        let outcome = learn_attention(std::slice::from_ref(&record), &roles.ctx(), &config).unwrap();
        let names: Vec<&str> = outcome.attention.factors().iter().map(|f| f.name.as_str()).collect();
        assert!(names.contains(&"style/emoji"), "{names:?}");
        assert!(names.contains(&"style/tags"), "{names:?}");
        assert!(outcome.attention.factors().iter().all(|f| f.loss >= 0.3));
    }

    #[test]
    fn learned_attention_reaches_a_fixed_point() {
        let roles = MockRoles::new();
        let record = mock_record(
            "ads-1",
            "ads",
            "Generate a product copywriting. Use emoji icons. Keep the tone colloquial.",
            &["mobile phone"],
        );
        let config = MutationConfig::default();
        let outcome = learn_attention(std::slice::from_ref(&record), &roles.ctx(), &config).unwrap();
        // With the learned attention, the guided surrogate reproduces the
        // example output exactly, so a further diff is all-zero.
        let pair = &record.examples[0];
        let surrogate = roles
            .generator
            .generate_surrogate(&roles.gen_tpl, &pair.input, &pair.output, Some(&outcome.attention))
            .unwrap();
        let out = roles.target.complete(&surrogate, &pair.input).unwrap();
        assert_eq!(out, pair.output);
        // Stats line up: one target and one differ call per generator call.
        assert_eq!(outcome.stats.generator_calls, outcome.stats.target_calls);
        assert_eq!(outcome.stats.generator_calls, outcome.stats.differ_calls);
        assert_eq!(outcome.stats.rounds_run, outcome.stats.generator_calls);
    }

    #[test]
    fn attention_threads_across_records() {
        let roles = MockRoles::new();
        let records = vec![
            mock_record("ads-1", "ads", "Write an ad for the item. Use emoji icons.", &["tea"]),
            mock_record("ads-2", "ads", "Write an ad for the item. Generate relevant tags.", &["coffee"]),
        ];
        let outcome = learn_attention(&records, &roles.ctx(), &MutationConfig::default()).unwrap();
        let names: Vec<&str> = outcome.attention.factors().iter().map(|f| f.name.as_str()).collect();
        assert!(names.contains(&"style/emoji"), "{names:?}");
        assert!(names.contains(&"style/tags"), "{names:?}");
    }

    #[test]
    fn zero_iterations_learn_nothing_and_call_nothing() {
        let roles = MockRoles::new();
        let record = mock_record("ads-1", "ads", "Write an ad. Use emoji icons.", &["tea"]);
        let config = MutationConfig { iterations: 0, ..MutationConfig::default() };
        let outcome = learn_attention(std::slice::from_ref(&record), &roles.ctx(), &config).unwrap();
        assert!(outcome.attention.is_empty());
        assert_eq!(outcome.stats.rounds_run, 0);
        assert_eq!(roles.target.call_count(), 0);
        assert_eq!(roles.generator.call_count(), 0);
    }

    #[test]
    fn sample_cap_limits_pairs_consumed() {
        let roles = MockRoles::new();
        let records = vec![
            mock_record("a1", "ads", "Write an ad. Use emoji icons.", &["tea", "coffee"]),
            mock_record("a2", "ads", "Write an ad. Generate relevant tags.", &["milk", "sugar"]),
        ];
        let config = MutationConfig { samples_per_category: 3, ..MutationConfig::default() };
        let outcome = learn_attention(&records, &roles.ctx(), &config).unwrap();
        assert_eq!(outcome.stats.pairs_used, 3);
    }

    #[test]
    fn global_mode_reaches_the_same_attention() {
        let records = vec![
            mock_record("a1", "ads", "Write an ad. Use emoji icons.", &["tea"]),
            mock_record("a2", "ads", "Write an ad. Keep the tone formal. Generate relevant tags.", &["coffee"]),
        ];
        let per_record = {
            let roles = MockRoles::new();
            learn_attention(&records, &roles.ctx(), &MutationConfig::default()).unwrap()
        };
        let global = {
            let roles = MockRoles::new();
            let config = MutationConfig { loop_mode: LoopMode::Global, ..MutationConfig::default() };
            learn_attention(&records, &roles.ctx(), &config).unwrap()
        };
        assert_eq!(per_record.attention, global.attention);
    }

    #[test]
    fn mixed_categories_and_empty_input_are_rejected() {
        let roles = MockRoles::new();
        let err = learn_attention(&[], &roles.ctx(), &MutationConfig::default()).unwrap_err();
        assert!(matches!(err, MutationError::NoRecords));
        let records = vec![
            mock_record("a1", "ads", "Write an ad.", &["tea"]),
            mock_record("e1", "email", "Write an email.", &["meeting"]),
        ];
        let err = learn_attention(&records, &roles.ctx(), &MutationConfig::default()).unwrap_err();
        assert!(matches!(err, MutationError::MixedCategories { .. }));
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let bad = MutationConfig { retention_threshold: 1.5, ..MutationConfig::default() };
        assert!(bad.validate().is_err());
        let bad = MutationConfig { samples_per_category: 0, ..MutationConfig::default() };
        assert!(bad.validate().is_err());
        MutationConfig::default().validate().unwrap();
    }
}
