//! Command-line front end for the attack toolkit.
//!
//! Subcommands cover the whole workflow: `mock` materializes the bundled
//! deterministic service suite, `mutate` learns per-category prompt
//! attention, `attack` runs one end-to-end prompt recovery, `campaign`
//! sweeps every ablation over a record file, `calibrate` fits success
//! thresholds to labeled scores, `defend` measures the output-redaction
//! defense, and `inject` tries verbatim extraction probes. Settings come
//! from an optional TOML file; sections mirror the library's configuration
//! structs and omitted fields keep their defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;

use promptlift::gateway::BackendConfig;
use promptlift::harness::inject::{default_probes, injection_baseline};
use promptlift::harness::obfuscate::defense_sweep;
use promptlift::harness::suite::{mock_suite, EvalInputs};
use promptlift::harness::{
    render_text_summary, run_attack, run_campaign, Ablation, AttackConfig, AttackEnv,
    CampaignConfig, CampaignRoles, TargetHandle,
};
use promptlift::metrics::{calibrate_thresholds, EvalConfig, LabeledTriple, Thresholds};
use promptlift::model::{load_dataset, save_dataset, Dataset, PromptRecord, SchemaTag};
use promptlift::mutation::{learn_attention, AttentionStore, MutationConfig};
use promptlift::pruning::PruneConfig;

#[derive(Parser)]
#[command(name = "promptlift", version, about = "Prompt-stealing attack toolkit")]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the bundled mock service suite (records plus held-out inputs).
    Mock {
        /// Directory for records.jsonl and eval_inputs.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn prompt attention for one category and store a new version.
    Mutate {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        category: String,
        /// Attention store directory (created if missing).
        #[arg(long)]
        store: PathBuf,
        /// Target model tag; only needed when the category spans several.
        #[arg(long)]
        model: Option<String>,
    },
    /// Attack one record end to end and report the scores.
    Attack {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        id: String,
        /// Attention store; required for ablations that use learned
        /// attention.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value = "full")]
        ablation: String,
        /// JSON file of held-out inputs per record id.
        #[arg(long)]
        eval_inputs: Option<PathBuf>,
        /// Write the full outcome as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run ablations over every record and aggregate success rates.
    Campaign {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        eval_inputs: Option<PathBuf>,
        /// Comma-separated ablations (default: all five).
        #[arg(long, value_delimiter = ',')]
        ablations: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit success thresholds to labeled attack scores.
    Calibrate {
        /// JSONL file: {"semantic":..,"syntactic":..,"structural":..,"label":..} per line.
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
    },
    /// Measure how redacting example outputs degrades the attack.
    Defend {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        eval_inputs: Option<PathBuf>,
        /// Comma-separated redaction ratios in [0, 1].
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Try verbatim extraction probes against one record's service.
    Inject {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        id: String,
        /// File with one probe per line (default: the built-in set).
        #[arg(long)]
        probes: Option<PathBuf>,
    },
}

/// The TOML configuration surface. Every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AppConfig {
    backend: BackendConfig,
    mutation: MutationConfig,
    prune: PruneConfig,
    eval: EvalConfig,
    thresholds: Thresholds,
    attack: AttackSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AttackSection {
    ablations: Vec<Ablation>,
    generation_pairs: usize,
}

impl Default for AttackSection {
    fn default() -> Self {
        AttackSection { ablations: Ablation::ALL.to_vec(), generation_pairs: 1 }
    }
}

impl AppConfig {
    fn load(path: Option<&Path>) -> Result<AppConfig> {
        let Some(path) = path else { return Ok(AppConfig::default()) };
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn campaign_config(&self, ablations: Vec<Ablation>) -> CampaignConfig {
        CampaignConfig {
            ablations,
            thresholds: self.thresholds,
            eval: self.eval,
            prune: self.prune.clone(),
            mutation: self.mutation.clone(),
            generation_pairs: self.attack.generation_pairs,
        }
    }
}

fn parse_ablation(name: &str) -> Result<Ablation> {
    Ablation::parse(name).ok_or_else(|| {
        let valid: Vec<&str> = Ablation::ALL.iter().map(|a| a.as_str()).collect();
        anyhow::anyhow!("unknown ablation {name:?}; valid: {}", valid.join(", "))
    })
}

fn load_records(path: &Path) -> Result<Dataset> {
    load_dataset(path, SchemaTag::PromptRecordsV1)
        .with_context(|| format!("loading {}", path.display()))
}

fn load_eval_inputs(path: Option<&Path>) -> Result<EvalInputs> {
    let Some(path) = path else { return Ok(EvalInputs::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn find_record<'a>(dataset: &'a Dataset, id: &str) -> Result<&'a PromptRecord> {
    dataset.get(id).ok_or_else(|| anyhow::anyhow!("no record with id {id:?}"))
}

fn hidden_prompt(record: &PromptRecord) -> Result<&str> {
    record.prompt_text.as_deref().ok_or_else(|| {
        anyhow::anyhow!(
            "record {} carries no hidden prompt, so target outputs cannot be produced",
            record.id
        )
    })
}

/// Backend configuration retargeted at the record's own model tag.
fn backend_for(record: &PromptRecord, config: &AppConfig) -> BackendConfig {
    let mut backend = config.backend.clone();
    backend.model_tag = record.target_model_tag.clone();
    backend
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Mock { out } => cmd_mock(&out),
        Command::Mutate { records, category, store, model } => {
            cmd_mutate(&config, &records, &category, &store, model.as_deref())
        }
        Command::Attack { records, id, store, ablation, eval_inputs, out } => cmd_attack(
            &config,
            &records,
            &id,
            store.as_deref(),
            &ablation,
            eval_inputs.as_deref(),
            out.as_deref(),
        ),
        Command::Campaign { records, eval_inputs, ablations, out } => {
            cmd_campaign(&config, &records, eval_inputs.as_deref(), &ablations, out.as_deref())
        }
        Command::Calibrate { labeled, grid_step } => cmd_calibrate(&labeled, grid_step),
        Command::Defend { records, eval_inputs, ratios, seed, out } => {
            cmd_defend(&config, &records, eval_inputs.as_deref(), &ratios, seed, out.as_deref())
        }
        Command::Inject { records, id, probes } => {
            cmd_inject(&config, &records, &id, probes.as_deref())
        }
    }
}

fn cmd_mock(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let suite = mock_suite();
    let records_path = out.join("records.jsonl");
    save_dataset(&suite.dataset, &records_path)?;
    write_json(&out.join("eval_inputs.json"), &suite.eval_inputs)?;
    let categories: Vec<String> =
        suite.dataset.categories().map(|c| c.to_string()).collect();
    println!(
        "wrote {} records across {} categories ({}) to {}",
        suite.dataset.len(),
        categories.len(),
        categories.join(", "),
        out.display()
    );
    Ok(())
}

fn cmd_mutate(
    config: &AppConfig,
    records: &Path,
    category: &str,
    store: &Path,
    model: Option<&str>,
) -> Result<()> {
    let dataset = load_records(records)?;
    let category = promptlift::model::Category::new(category)?;
    let mut chosen: Vec<PromptRecord> =
        dataset.records_for(&category).into_iter().cloned().collect();
    if chosen.is_empty() {
        bail!("no records in category {category}");
    }
    if let Some(model) = model {
        chosen.retain(|r| r.target_model_tag == model);
        if chosen.is_empty() {
            bail!("no records in category {category} target model {model:?}");
        }
    } else {
        let mut models: Vec<&str> = chosen.iter().map(|r| r.target_model_tag.as_str()).collect();
        models.sort_unstable();
        models.dedup();
        if models.len() > 1 {
            bail!(
                "category {category} spans models {}; pick one with --model",
                models.join(", ")
            );
        }
    }
    let mut backend = config.backend.clone();
    backend.model_tag = chosen[0].target_model_tag.clone();
    let roles = CampaignRoles::from_config(&backend)?;
    let outcome = learn_attention(&chosen, &roles.learn_context(), &config.mutation)?;
    let version = AttentionStore::open(store)?.save(&outcome.attention)?;
    println!(
        "learned {} factors for {} on {} over {} pairs in {} rounds (stored as v{version})",
        outcome.attention.len(),
        category,
        backend.model_tag,
        outcome.stats.pairs_used,
        outcome.stats.rounds_run,
    );
    for factor in outcome.attention.factors() {
        println!("  {} (loss {:.2}): {}", factor.name, factor.loss, factor.description);
    }
    Ok(())
}

fn cmd_attack(
    config: &AppConfig,
    records: &Path,
    id: &str,
    store: Option<&Path>,
    ablation: &str,
    eval_inputs: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let ablation = parse_ablation(ablation)?;
    let dataset = load_records(records)?;
    let record = find_record(&dataset, id)?;
    let prompt = hidden_prompt(record)?;
    let roles = CampaignRoles::from_config(&backend_for(record, config))?;
    let attention = match (ablation, store) {
        (Ablation::Full | Ablation::NoPruning, Some(store)) => Some(
            AttentionStore::open(store)?.load(&record.category, &record.target_model_tag)?,
        ),
        (Ablation::Full | Ablation::NoPruning, None) => {
            bail!("ablation {ablation} needs learned attention; pass --store (see `mutate`)")
        }
        _ => None,
    };
    let held_out = load_eval_inputs(eval_inputs)?
        .inputs
        .get(id)
        .cloned()
        .unwrap_or_default();
    let env = AttackEnv {
        target: TargetHandle::KnownPrompt { backend: &roles.family, prompt },
        family: &roles.family,
        generator: &roles.generator,
        generator_template: &roles.generator_template,
    };
    let attack_config = AttackConfig {
        ablation,
        thresholds: config.thresholds,
        eval: config.eval,
        prune: config.prune.clone(),
        generation_pairs: config.attack.generation_pairs,
    };
    let outcome = run_attack(record, &held_out, attention.as_ref(), &env, &attack_config)?;
    println!("record    {}", outcome.record_id);
    println!("ablation  {}", outcome.ablation);
    println!("surrogate {}", outcome.surrogate.text);
    if !outcome.surrogate.masked_words.is_empty() {
        println!("masked    {}", outcome.surrogate.masked_words.join(", "));
    }
    println!(
        "scores    sem {:.4} syn {:.4} str {:.4}",
        outcome.triple.semantic, outcome.triple.syntactic, outcome.triple.structural
    );
    println!(
        "calls     generation {} pruning {} evaluation {}",
        outcome.costs.generation, outcome.costs.pruning, outcome.costs.evaluation
    );
    println!("success   {}", outcome.success);
    if let Some(out) = out {
        write_json(out, &outcome)?;
    }
    Ok(())
}

fn cmd_campaign(
    config: &AppConfig,
    records: &Path,
    eval_inputs: Option<&Path>,
    ablations: &[String],
    out: Option<&Path>,
) -> Result<()> {
    let dataset = load_records(records)?;
    let eval_inputs = load_eval_inputs(eval_inputs)?;
    let chosen = if ablations.is_empty() {
        config.attack.ablations.clone()
    } else {
        ablations.iter().map(|a| parse_ablation(a)).collect::<Result<Vec<_>>>()?
    };
    let roles = CampaignRoles::from_config(&config.backend)?;
    let report = run_campaign(&dataset, &eval_inputs, &roles, &config.campaign_config(chosen))?;
    print!("{}", render_text_summary(&report));
    if let Some(out) = out {
        write_json(out, &report)?;
    }
    if report.failure_rate > 0.5 {
        eprintln!(
            "more than half of the attacks errored (failure rate {:.2})",
            report.failure_rate
        );
        std::process::exit(2);
    }
    Ok(())
}

fn cmd_calibrate(labeled: &Path, grid_step: f64) -> Result<()> {
    let text =
        fs::read_to_string(labeled).with_context(|| format!("reading {}", labeled.display()))?;
    let mut samples: Vec<LabeledTriple> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let sample: LabeledTriple = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", labeled.display(), lineno + 1))?;
        samples.push(sample);
    }
    let calibration = calibrate_thresholds(&samples, grid_step)?;
    let t = calibration.thresholds;
    println!(
        "thresholds sem {} syn {} str {} (accuracy {:.4} on {} samples)",
        t.semantic,
        t.syntactic,
        t.structural,
        calibration.accuracy,
        samples.len()
    );
    Ok(())
}

fn cmd_defend(
    config: &AppConfig,
    records: &Path,
    eval_inputs: Option<&Path>,
    ratios: &[f64],
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let dataset = load_records(records)?;
    let eval_inputs = load_eval_inputs(eval_inputs)?;
    let roles = CampaignRoles::from_config(&config.backend)?;
    let campaign = config.campaign_config(vec![Ablation::Full]);
    let points = defense_sweep(&dataset, &eval_inputs, &roles, &campaign, ratios, seed)?;
    for p in &points {
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
        println!(
            "ratio {:.2}  asr {}  sem {}  syn {}  str {}",
            p.ratio,
            fmt(p.asr),
            fmt(p.mean_semantic),
            fmt(p.mean_syntactic),
            fmt(p.mean_structural)
        );
    }
    if let Some(out) = out {
        write_json(out, &points)?;
    }
    Ok(())
}

fn cmd_inject(
    config: &AppConfig,
    records: &Path,
    id: &str,
    probes: Option<&Path>,
) -> Result<()> {
    let dataset = load_records(records)?;
    let record = find_record(&dataset, id)?;
    let prompt = hidden_prompt(record)?;
    let backend = promptlift::gateway::Backend::new(&backend_for(record, config))?;
    let target = TargetHandle::KnownPrompt { backend: &backend, prompt };
    let probes = match probes {
        None => default_probes(),
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
        }
    };
    let report = injection_baseline(&target, &probes)?;
    for outcome in &report.probes {
        let verdict = if outcome.leaked { "LEAK" } else { "safe" };
        println!("{verdict}  {}", outcome.probe);
    }
    println!(
        "{}/{} probes extracted the prompt from {}",
        report.leak_count,
        report.probes.len(),
        report.model
    );
    Ok(())
}
