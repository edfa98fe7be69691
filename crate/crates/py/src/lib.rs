//! Python bindings for the attack toolkit.
//!
//! The module mirrors the library's main operations: the three similarity
//! metrics, consistency scoring over output samples, threshold calibration,
//! input-word masking with beam selection, and the bundled mock service
//! suite (including a full campaign run). Structured results cross the
//! boundary as plain tuples or JSON text so no Python-side schema is needed.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use promptlift::harness::inject::{default_probes, injection_baseline};
use promptlift::harness::suite::{mock_suite, suite_backend_config};
use promptlift::harness::{run_campaign, Ablation, CampaignConfig, CampaignRoles, TargetHandle};
use promptlift::metrics::{self, LabeledTriple};
use promptlift::model::save_dataset;
use promptlift::pruning::{self, Candidate, PruneConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Per-axis minimum scores an attack must reach to count as a success.
#[pyclass(name = "Thresholds", skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyThresholds {
    inner: metrics::Thresholds,
}

#[pymethods]
impl PyThresholds {
    #[new]
    #[pyo3(signature = (semantic=0.6, syntactic=0.75, structural=0.9))]
    fn new(semantic: f64, syntactic: f64, structural: f64) -> Self {
        PyThresholds { inner: metrics::Thresholds { semantic, syntactic, structural } }
    }

    #[getter]
    fn semantic(&self) -> f64 {
        self.inner.semantic
    }

    #[getter]
    fn syntactic(&self) -> f64 {
        self.inner.syntactic
    }

    #[getter]
    fn structural(&self) -> f64 {
        self.inner.structural
    }

    fn __repr__(&self) -> String {
        format!(
            "Thresholds(semantic={}, syntactic={}, structural={})",
            self.inner.semantic, self.inner.syntactic, self.inner.structural
        )
    }
}

/// The three normalized consistency scores for one attack.
#[pyclass(name = "SimilarityTriple", skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyTriple {
    inner: metrics::SimilarityTriple,
}

#[pymethods]
impl PyTriple {
    #[getter]
    fn semantic(&self) -> f64 {
        self.inner.semantic
    }

    #[getter]
    fn syntactic(&self) -> f64 {
        self.inner.syntactic
    }

    #[getter]
    fn structural(&self) -> f64 {
        self.inner.structural
    }

    /// True when every axis meets its threshold (inclusive).
    fn meets(&self, thresholds: &PyThresholds) -> bool {
        metrics::attack_success(&self.inner, &thresholds.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "SimilarityTriple(semantic={:.4}, syntactic={:.4}, structural={:.4})",
            self.inner.semantic, self.inner.syntactic, self.inner.structural
        )
    }
}

/// Smoothed n-gram overlap of `candidate` against the closest reference.
#[pyfunction]
fn bleu(candidate: &str, references: Vec<String>) -> PyResult<f64> {
    let refs: Vec<&str> = references.iter().map(String::as_str).collect();
    metrics::bleu(candidate, &refs).map_err(value_err)
}

/// Parse-tree fragment overlap; word substitutions do not change it.
#[pyfunction]
fn syntactic_similarity(a: &str, b: &str) -> f64 {
    metrics::syntactic_similarity(a, b)
}

/// Inverse Jensen-Shannon divergence of the two word distributions.
#[pyfunction]
fn structural_similarity(a: &str, b: &str) -> PyResult<f64> {
    metrics::structural_similarity(a, b).map_err(value_err)
}

/// Jensen-Shannon divergence (in bits) of the two word distributions.
#[pyfunction]
fn js_divergence(a: &str, b: &str) -> PyResult<f64> {
    metrics::js_divergence(a, b).map_err(value_err)
}

/// Consistency of surrogate outputs against target outputs, one inner list
/// of samples per shared input, normalized by target self-similarity.
#[pyfunction]
fn consistency(surrogate: Vec<Vec<String>>, target: Vec<Vec<String>>) -> PyResult<PyTriple> {
    metrics::similarity_triple(&surrogate, &target)
        .map(|inner| PyTriple { inner })
        .map_err(value_err)
}

/// Fit thresholds to `(semantic, syntactic, structural, label)` samples by
/// exhaustive grid search; returns the thresholds and their accuracy.
#[pyfunction]
#[pyo3(signature = (samples, grid_step=0.05))]
fn calibrate(
    samples: Vec<(f64, f64, f64, bool)>,
    grid_step: f64,
) -> PyResult<(PyThresholds, f64)> {
    let labeled: Vec<LabeledTriple> = samples
        .into_iter()
        .map(|(semantic, syntactic, structural, label)| LabeledTriple {
            semantic,
            syntactic,
            structural,
            label,
        })
        .collect();
    let calibration = metrics::calibrate_thresholds(&labeled, grid_step).map_err(value_err)?;
    Ok((PyThresholds { inner: calibration.thresholds }, calibration.accuracy))
}

/// Replace whole-word occurrences of `words` with `placeholder`; returns
/// `(masked_text, words_found, placeholder_count)`.
#[pyfunction]
#[pyo3(signature = (text, words, placeholder="{}"))]
fn mask_prompt(
    text: &str,
    words: Vec<String>,
    placeholder: &str,
) -> (String, Vec<String>, usize) {
    let masked = pruning::mask_prompt(text, &words, placeholder);
    (masked.text, masked.masked_words, masked.placeholder_count)
}

/// Pick how many of `candidates` (most input-related first) to mask: tries
/// growing prefixes, scoring each masked prompt with `evaluate(text)`, and
/// keeps the best-scoring one. An evaluator exception fails that trial
/// only. Returns `(selected_words, masked_text)`.
#[pyfunction]
#[pyo3(signature = (prompt, candidates, evaluate, mask_ratio=0.6, eval_frequency=5, beam_width=2, placeholder="{}"))]
fn select_mask_words(
    prompt: &str,
    candidates: Vec<String>,
    evaluate: Bound<'_, PyAny>,
    mask_ratio: f64,
    eval_frequency: usize,
    beam_width: usize,
    placeholder: &str,
) -> PyResult<(Vec<String>, String)> {
    let candidates: Vec<Candidate> = candidates
        .into_iter()
        .enumerate()
        .map(|(position, word)| Candidate {
            word,
            position,
            similarity: 1.0 - position as f64 * 1e-6,
        })
        .collect();
    let config = PruneConfig {
        mask_ratio,
        eval_frequency,
        beam_width,
        placeholder: placeholder.to_string(),
        ..PruneConfig::default()
    };
    let score = |text: &str| -> Result<f64, String> {
        evaluate
            .call1((text,))
            .and_then(|v| v.extract::<f64>())
            .map_err(|e| e.to_string())
    };
    let selection =
        pruning::select_mask_words(prompt, &candidates, &config, score).map_err(value_err)?;
    Ok((selection.selected, selection.masked.text))
}

/// Write the bundled mock suite (`records.jsonl`, `eval_inputs.json`) into
/// `dir`; returns the record count.
#[pyfunction]
fn write_mock_suite(dir: &str) -> PyResult<usize> {
    let suite = mock_suite();
    let dir = std::path::Path::new(dir);
    std::fs::create_dir_all(dir).map_err(value_err)?;
    save_dataset(&suite.dataset, &dir.join("records.jsonl")).map_err(value_err)?;
    let inputs = serde_json::to_string_pretty(&suite.eval_inputs).map_err(value_err)?;
    std::fs::write(dir.join("eval_inputs.json"), inputs).map_err(value_err)?;
    Ok(suite.dataset.len())
}

/// Run the requested ablations (default: all five) over the bundled mock
/// suite and return the campaign report as JSON text.
#[pyfunction]
#[pyo3(signature = (ablations=None))]
fn run_mock_campaign(ablations: Option<Vec<String>>) -> PyResult<String> {
    let chosen = match ablations {
        None => Ablation::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|name| {
                Ablation::parse(name)
                    .ok_or_else(|| value_err(format!("unknown ablation {name:?}")))
            })
            .collect::<PyResult<Vec<_>>>()?,
    };
    let suite = mock_suite();
    let roles = CampaignRoles::from_config(&suite_backend_config()).map_err(value_err)?;
    let config = CampaignConfig { ablations: chosen, ..CampaignConfig::default() };
    let report = run_campaign(&suite.dataset, &suite.eval_inputs, &roles, &config)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Run the verbatim-extraction probes against the first mock service;
/// returns `(leak_count, probe_count)`.
#[pyfunction]
#[pyo3(signature = (protected=true))]
fn mock_injection(protected: bool) -> PyResult<(usize, usize)> {
    let suite = mock_suite();
    let record = &suite.dataset.records()[0];
    let prompt = record.prompt_text.as_deref().expect("suite records carry prompts");
    let mut config = suite_backend_config();
    config.protected = protected;
    let backend = promptlift::gateway::Backend::new(&config).map_err(value_err)?;
    let target = TargetHandle::KnownPrompt { backend: &backend, prompt };
    let probes = default_probes();
    let report = injection_baseline(&target, &probes)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((report.leak_count, report.probes.len()))
}

#[pymodule]
fn promptlift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyThresholds>()?;
    m.add_class::<PyTriple>()?;
    m.add_function(wrap_pyfunction!(bleu, m)?)?;
    m.add_function(wrap_pyfunction!(syntactic_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(structural_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(js_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(consistency, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(mask_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(select_mask_words, m)?)?;
    m.add_function(wrap_pyfunction!(write_mock_suite, m)?)?;
    m.add_function(wrap_pyfunction!(run_mock_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(mock_injection, m)?)?;
    Ok(())
}
