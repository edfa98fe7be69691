//! The bundled offline evaluation suite.
//!
//! Twenty services across four categories, five per category, all served by
//! the deterministic mock model family. Every record carries its hidden
//! prompt (so real target outputs can be produced on demand), one or two
//! example pairs rendered with that prompt, and two held-out inputs for
//! evaluation.
//!
//! The suite is constructed so the pipeline's parts matter in a measurable
//! way:
//!
//! * most records use directives the difference analyzer can name, so
//!   attention learning recovers them;
//! * two records ask for rhyme, which the analyzer's vocabulary cannot
//!   express — no amount of iteration recovers those;
//! * two records ship a single example pair whose input words all ride into
//!   the naive surrogate, where masking one word is indistinguishable from
//!   masking both on the only available pair — the shortest-prefix rule then
//!   leaves a leak behind;
//! * two records carry no directives at all, so pruning alone wins them and
//!   attention adds nothing.
//!
//! Hidden prompts are phrased entirely from the mock's template vocabulary,
//! and example inputs are short noun phrases, so full masking is always
//! within the mask-ratio budget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gateway::mock::MockLlm;
use crate::gateway::BackendConfig;
use crate::model::{Category, Dataset, IoPair, PromptRecord};

pub const SUITE_MODEL_TAG: &str = "mock-a";
pub const SUITE_SEED: u64 = 7;

/// A dataset plus per-record held-out evaluation inputs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalInputs {
    pub inputs: BTreeMap<String, Vec<String>>,
}

pub struct MockSuite {
    pub dataset: Dataset,
    pub eval_inputs: EvalInputs,
}

/// Backend settings matching the suite's renders.
pub fn suite_backend_config() -> BackendConfig {
    BackendConfig::mock(SUITE_MODEL_TAG, SUITE_SEED, true)
}

struct Blueprint {
    id: &'static str,
    category: &'static str,
    prompt: &'static str,
    example_inputs: &'static [&'static str],
    eval_inputs: &'static [&'static str],
}

const BLUEPRINTS: &[Blueprint] = &[
    // --- ads ---
    Blueprint {
        id: "ads-01",
        category: "ads",
        prompt: "Generate a product copywriting for the given item. The copywriting should be colloquial. Use emoji icons. Generate relevant tags.",
        example_inputs: &["mobile phone", "camera drone"],
        eval_inputs: &["desk lamp", "garden hose"],
    },
    Blueprint {
        id: "ads-02",
        category: "ads",
        prompt: "Create an attractive product listing for the given item. Start with an attractive title. Use bullet points for the key ideas.",
        example_inputs: &["leather wallet", "espresso machine"],
        eval_inputs: &["steel bottle", "wool scarf"],
    },
    Blueprint {
        id: "ads-03",
        category: "ads",
        prompt: "Compose a formal announcement for the given product. Keep the tone formal. State the intended audience.",
        example_inputs: &["yoga kit", "mobile phone"],
        eval_inputs: &["desk lamp", "wool scarf"],
    },
    Blueprint {
        id: "ads-04",
        category: "ads",
        prompt: "Describe the given product. Organize the content with clear headings. Make it detailed and comprehensive.",
        example_inputs: &["camera drone", "leather wallet"],
        eval_inputs: &["garden hose", "steel bottle"],
    },
    Blueprint {
        // Rhyme sits outside the difference analyzer's vocabulary: this
        // record is designed to stay unrecoverable.
        id: "ads-05",
        category: "ads",
        prompt: "Write a short piece about the given item. Make it rhyme.",
        example_inputs: &["espresso machine", "yoga kit"],
        eval_inputs: &["desk lamp", "garden hose"],
    },
    // --- email ---
    Blueprint {
        id: "email-01",
        category: "email",
        prompt: "Write an email about the given topic. Keep the tone formal. State the intended audience.",
        example_inputs: &["project deadline", "team lunch"],
        eval_inputs: &["vendor invoice", "sales forecast"],
    },
    Blueprint {
        id: "email-02",
        category: "email",
        prompt: "Compose an email message about the given topic. Start with an attractive title. Use bullet points for the key ideas.",
        example_inputs: &["budget report", "office party"],
        eval_inputs: &["vendor invoice", "sales forecast"],
    },
    Blueprint {
        // Single example pair with a two-word input: every mask prefix
        // scores identically on that pair, the shortest wins, and one leaked
        // word survives. Designed to stay unrecoverable.
        id: "email-03",
        category: "email",
        prompt: "Write an email note about the given topic. Use emoji icons.",
        example_inputs: &["project deadline"],
        eval_inputs: &["sales forecast", "vendor invoice"],
    },
    Blueprint {
        // No directives: pruning alone recovers this one.
        id: "email-04",
        category: "email",
        prompt: "Write a short email about the given topic.",
        example_inputs: &["team lunch", "budget report"],
        eval_inputs: &["vendor invoice", "sales forecast"],
    },
    Blueprint {
        id: "email-05",
        category: "email",
        prompt: "Write an email update about the given topic. Organize the content with clear headings. Keep the tone colloquial.",
        example_inputs: &["office party", "client workshop"],
        eval_inputs: &["sales forecast", "vendor invoice"],
    },
    // --- travel ---
    Blueprint {
        id: "travel-01",
        category: "travel",
        prompt: "Create a travel guide for the given topic. Organize the content with clear headings. Use bullet points for the key ideas.",
        example_inputs: &["kyoto temples", "alpine lakes"],
        eval_inputs: &["island ferry", "canyon hike"],
    },
    Blueprint {
        id: "travel-02",
        category: "travel",
        prompt: "Write a travel itinerary for the given topic. Start with an attractive title. Make it detailed and comprehensive.",
        example_inputs: &["desert safari", "harbor cruise"],
        eval_inputs: &["canyon hike", "island ferry"],
    },
    Blueprint {
        id: "travel-03",
        category: "travel",
        prompt: "Describe the given travel plan. Keep the tone colloquial. Use emoji icons. Generate relevant tags.",
        example_inputs: &["vineyard tour", "kyoto temples"],
        eval_inputs: &["island ferry", "canyon hike"],
    },
    Blueprint {
        // Second designed-unrecoverable rhyme record.
        id: "travel-04",
        category: "travel",
        prompt: "Write a short travel note about the given topic. Make it rhyme.",
        example_inputs: &["alpine lakes", "desert safari"],
        eval_inputs: &["canyon hike", "island ferry"],
    },
    Blueprint {
        // No directives: pruning alone recovers this one.
        id: "travel-05",
        category: "travel",
        prompt: "Write about the given travel topic.",
        example_inputs: &["harbor cruise", "vineyard tour"],
        eval_inputs: &["island ferry", "canyon hike"],
    },
    // --- music ---
    Blueprint {
        id: "music-01",
        category: "music",
        prompt: "Write a piece about the given music topic. Start with an attractive title. Use emoji icons.",
        example_inputs: &["jazz vinyl", "guitar solos"],
        eval_inputs: &["piano ballads", "violin duets"],
    },
    Blueprint {
        id: "music-02",
        category: "music",
        prompt: "Create a playlist description for the given topic. Keep the tone formal. Use bullet points for the key ideas.",
        example_inputs: &["techno beats", "opera arias"],
        eval_inputs: &["violin duets", "piano ballads"],
    },
    Blueprint {
        // Second single-pair tie record; the leak survives by design.
        id: "music-03",
        category: "music",
        prompt: "Write a music note about the given topic. Generate relevant tags.",
        example_inputs: &["drum circles"],
        eval_inputs: &["piano ballads", "violin duets"],
    },
    Blueprint {
        id: "music-04",
        category: "music",
        prompt: "Describe the given music item. Organize the content with clear headings. State the intended audience.",
        example_inputs: &["guitar solos", "techno beats"],
        eval_inputs: &["violin duets", "piano ballads"],
    },
    Blueprint {
        id: "music-05",
        category: "music",
        prompt: "Compose a music review for the given topic. Make it detailed and comprehensive. Keep the tone colloquial.",
        example_inputs: &["opera arias", "jazz vinyl"],
        eval_inputs: &["piano ballads", "violin duets"],
    },
];

/// Builds the bundled suite. Deterministic: same records, same outputs,
/// every time.
pub fn mock_suite() -> MockSuite {
    let llm = MockLlm::new(SUITE_MODEL_TAG, SUITE_SEED, true);
    let mut records = Vec::new();
    let mut eval_inputs = BTreeMap::new();
    for bp in BLUEPRINTS {
        let examples = bp
            .example_inputs
            .iter()
            .map(|input| IoPair {
                input: input.to_string(),
                output: llm.complete(bp.prompt, input),
            })
            .collect();
        records.push(PromptRecord {
            id: bp.id.to_string(),
            category: Category::new(bp.category).expect("suite categories are non-empty"),
            target_model_tag: SUITE_MODEL_TAG.to_string(),
            prompt_text: Some(bp.prompt.to_string()),
            examples,
        });
        eval_inputs
            .insert(bp.id.to_string(), bp.eval_inputs.iter().map(|s| s.to_string()).collect());
    }
    let dataset = Dataset::from_records(records).expect("bundled suite must validate");
    MockSuite { dataset, eval_inputs: EvalInputs { inputs: eval_inputs } }
}
