//! Model gateway: one interface over the three LLM roles the pipeline needs
//! (target completion, surrogate generation, difference analysis), with a
//! deterministic in-process mock and an HTTP client as interchangeable
//! backends.
//!
//! Every outward call is counted on the backend, including retries, so a run
//! can report exactly how many model invocations it spent.

pub mod mock;
pub mod remote;
pub mod template;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mutation::Attention;
use crate::text::normalize_ws;

use mock::MockLlm;
use remote::RemoteLlm;
use template::RoleTemplate;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("template is missing required slot {slot}")]
    MissingSlot { slot: String },
    #[error("template contains slot {slot} {count} times; exactly one occurrence is required")]
    DuplicateSlot { slot: String, count: usize },
    #[error("failed to read template {0}: {1}")]
    TemplateIo(String, #[source] std::io::Error),
    #[error("refusing to send an empty prompt")]
    EmptyPrompt,
    #[error("model {model} returned an empty completion")]
    EmptyCompletion { model: String },
    #[error("surrogate generation degenerated: {reason}")]
    DegenerateSurrogate { reason: String },
    #[error("model {model} did not produce a parsable difference report: {detail}")]
    AnalyzerFormat { model: String, detail: String },
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("credential environment variable {var} is not set")]
    MissingCredential { var: String },
    #[error("request to {model} failed after {attempts} attempts: {detail}")]
    Transport { model: String, attempts: u32, detail: String },
    #[error("model {model} returned an unusable response body: {detail}")]
    MalformedResponse { model: String, detail: String },
    #[error("model {model} answered with status {status}: {detail}")]
    Http { model: String, status: u16, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Remote,
}

/// How a remote endpoint expects its request body: an OpenAI-style chat
/// message list or a single prompt string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireFormat {
    Chat,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimit {
    pub max_requests: u32,
    pub window_secs: u64,
}

/// Everything needed to stand up one backend. The same shape covers mock and
/// remote; fields the chosen kind does not use are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub model_tag: String,
    pub temperature: f64,
    /// Full URL of the completion endpoint (remote only).
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key. The key itself
    /// never appears in configuration files.
    pub credential_env: Option<String>,
    pub wire: WireFormat,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub backoff_ms: u64,
    pub rate_limit: Option<RateLimit>,
    /// Mock-only: phrasing seed for the family member.
    pub seed: u64,
    /// Mock-only: whether the simulated service refuses prompt extraction.
    pub protected: bool,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            model_tag: "mock-a".to_string(),
            temperature: 0.7,
            endpoint: None,
            credential_env: None,
            wire: WireFormat::Chat,
            max_retries: 3,
            timeout_secs: 30,
            backoff_ms: 250,
            rate_limit: None,
            seed: 7,
            protected: true,
        }
    }
}

impl BackendConfig {
    pub fn mock(model_tag: &str, seed: u64, protected: bool) -> Self {
        BackendConfig {
            model_tag: model_tag.to_string(),
            seed,
            protected,
            ..BackendConfig::default()
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.model_tag.trim().is_empty() {
            return Err(GatewayError::InvalidConfig("model_tag must not be empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) || !self.temperature.is_finite() {
            return Err(GatewayError::InvalidConfig(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.kind == BackendKind::Remote && self.endpoint.is_none() {
            return Err(GatewayError::InvalidConfig(
                "remote backend requires an endpoint".into(),
            ));
        }
        if let Some(rl) = &self.rate_limit {
            if rl.max_requests == 0 || rl.window_secs == 0 {
                return Err(GatewayError::InvalidConfig(
                    "rate limit window and request count must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One named axis of difference between two outputs, with a loss in [0, 1].
/// Names are normalized (lowercased, whitespace collapsed) so the same axis
/// reported twice merges into one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceFactor {
    pub name: String,
    pub description: String,
    pub loss: f64,
    /// True when the reported loss fell outside [0, 1] and was clamped.
    #[serde(default)]
    pub clamped: bool,
}

impl DifferenceFactor {
    pub fn new(name: &str, description: &str, loss: f64) -> Self {
        let mut clamped = false;
        let loss = if loss.is_finite() {
            if (0.0..=1.0).contains(&loss) {
                loss
            } else {
                clamped = true;
                loss.clamp(0.0, 1.0)
            }
        } else {
            clamped = true;
            0.0
        };
        DifferenceFactor {
            name: normalize_ws(name),
            description: description.trim().to_string(),
            loss,
            clamped,
        }
    }
}

/// A difference report: factors with unique names, in first-report order.
/// Duplicate names keep the maximum loss and the longer description.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DifferenceReport {
    factors: Vec<DifferenceFactor>,
}

impl DifferenceReport {
    pub fn new(factors: Vec<DifferenceFactor>) -> Self {
        let mut report = DifferenceReport { factors: Vec::new() };
        for f in factors {
            report.push(f);
        }
        report
    }

    pub fn push(&mut self, factor: DifferenceFactor) {
        match self.factors.iter_mut().find(|f| f.name == factor.name) {
            Some(existing) => {
                if factor.loss > existing.loss {
                    existing.loss = factor.loss;
                }
                if factor.description.len() > existing.description.len() {
                    existing.description = factor.description;
                }
                existing.clamped |= factor.clamped;
            }
            None => self.factors.push(factor),
        }
    }

    pub fn factors(&self) -> &[DifferenceFactor] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Parses the fenced `factor | description | loss` block a remote difference
/// analyzer is instructed to emit. An empty fence is a valid empty report;
/// a missing fence or a malformed line is an error described for the re-ask.
pub fn parse_fenced_report(text: &str) -> Result<Vec<DifferenceFactor>, String> {
    let mut inside = false;
    let mut seen_fence = false;
    let mut factors = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with("```") {
            if inside {
                return Ok(factors);
            }
            inside = true;
            seen_fence = true;
            continue;
        }
        if !inside || trimmed.is_empty() {
            continue;
        }
        let parts: Vec<&str> = trimmed.split('|').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!(
                "expected `factor | description | loss`, got {} field(s) in {trimmed:?}",
                parts.len()
            ));
        }
        if parts[0].is_empty() {
            return Err(format!("empty factor name in {trimmed:?}"));
        }
        let loss: f64 = parts[2]
            .parse()
            .map_err(|_| format!("loss {:?} is not a number in {trimmed:?}", parts[2]))?;
        factors.push(DifferenceFactor::new(parts[0], parts[1], loss));
    }
    if !seen_fence {
        return Err("no fenced report block found".to_string());
    }
    Err("fenced report block was never closed".to_string())
}

enum Engine {
    Mock(MockLlm),
    Remote(RemoteLlm),
}

/// A configured model endpoint playing one role. All calls are counted,
/// including retried HTTP attempts.
pub struct Backend {
    engine: Engine,
    model_tag: String,
    calls: AtomicU64,
}

impl Backend {
    pub fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let engine = match config.kind {
            BackendKind::Mock => {
                Engine::Mock(MockLlm::new(&config.model_tag, config.seed, config.protected))
            }
            BackendKind::Remote => Engine::Remote(RemoteLlm::new(config)?),
        };
        Ok(Backend { engine, model_tag: config.model_tag.clone(), calls: AtomicU64::new(0) })
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    /// Total outward calls so far. For the remote engine this counts HTTP
    /// attempts, so retries are visible.
    pub fn call_count(&self) -> u64 {
        match &self.engine {
            Engine::Mock(_) => self.calls.load(Ordering::Relaxed),
            Engine::Remote(r) => r.attempt_count(),
        }
    }

    /// Runs `prompt` over `input` on the modeled service.
    pub fn complete(&self, prompt: &str, input: &str) -> Result<String, GatewayError> {
        if prompt.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let text = match &self.engine {
            Engine::Mock(m) => {
                self.calls.fetch_add(1, Ordering::Relaxed);
                m.complete(prompt, input)
            }
            Engine::Remote(r) => r.complete_prompt(&format!("{prompt}\n\n{input}"))?,
        };
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyCompletion { model: self.model_tag.clone() });
        }
        Ok(text)
    }

    /// Sends a bare payload to the service. A remote service applies the
    /// prompt it embeds server-side; the mock treats the payload as the
    /// prompt itself over an empty input.
    pub fn complete_raw(&self, payload: &str) -> Result<String, GatewayError> {
        if payload.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let text = match &self.engine {
            Engine::Mock(m) => {
                self.calls.fetch_add(1, Ordering::Relaxed);
                m.complete(payload, "")
            }
            Engine::Remote(r) => r.complete_prompt(payload)?,
        };
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyCompletion { model: self.model_tag.clone() });
        }
        Ok(text)
    }

    /// Asks the generator role for a surrogate prompt explaining how `input`
    /// became `output`. Rejects degenerate answers (empty, or parroting the
    /// output back).
    pub fn generate_surrogate(
        &self,
        template: &RoleTemplate,
        input: &str,
        output: &str,
        attention: Option<&Attention>,
    ) -> Result<String, GatewayError> {
        let text = match &self.engine {
            Engine::Mock(m) => {
                self.calls.fetch_add(1, Ordering::Relaxed);
                m.generate_surrogate(input, output, attention)
            }
            Engine::Remote(r) => {
                let focus = attention.map(|a| a.focus_text()).unwrap_or_default();
                let payload = template.render_generator(input, output, &focus);
                r.complete_prompt(&payload)?
            }
        };
        let text = text.trim().to_string();
        if text.is_empty() {
            return Err(GatewayError::DegenerateSurrogate {
                reason: "generator returned an empty prompt".into(),
            });
        }
        if normalize_ws(&text) == normalize_ws(output) {
            return Err(GatewayError::DegenerateSurrogate {
                reason: "generator echoed the example output verbatim".into(),
            });
        }
        Ok(text)
    }

    /// Asks the analyzer role for the differences between two outputs.
    pub fn analyze_difference(
        &self,
        template: &RoleTemplate,
        surrogate_output: &str,
        target_output: &str,
    ) -> Result<DifferenceReport, GatewayError> {
        match &self.engine {
            Engine::Mock(m) => {
                self.calls.fetch_add(1, Ordering::Relaxed);
                Ok(m.analyze_difference(surrogate_output, target_output))
            }
            Engine::Remote(r) => {
                let payload = template.render_differ(surrogate_output, target_output);
                let first = r.complete_prompt(&payload)?;
                match parse_fenced_report(&first) {
                    Ok(factors) => Ok(DifferenceReport::new(factors)),
                    Err(first_err) => {
                        // One corrective re-ask before giving up.
                        let reminder = format!(
                            "{payload}\n\nYour previous reply could not be parsed ({first_err}). \
                             Reply again with only the fenced block of `factor | description | loss` lines."
                        );
                        let second = r.complete_prompt(&reminder)?;
                        match parse_fenced_report(&second) {
                            Ok(factors) => Ok(DifferenceReport::new(factors)),
                            Err(detail) => Err(GatewayError::AnalyzerFormat {
                                model: self.model_tag.clone(),
                                detail,
                            }),
                        }
                    }
                }
            }
        }
    }
}
