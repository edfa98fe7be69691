//! Prompt-stealing attack toolkit.
//!
//! The pipeline recovers a functional surrogate of a hidden system prompt from
//! nothing but input/output examples exposed by an LLM service:
//!
//! 1. [`mutation`] learns per-category "prompt attention" by repeatedly
//!    generating surrogate prompts, replaying them against a target model, and
//!    distilling output differences into weighted factors.
//! 2. [`gateway`] talks to the models involved (a remote HTTP completion API
//!    or a bundled deterministic mock family) in three roles: target,
//!    surrogate generator, and output-difference analyzer.
//! 3. [`pruning`] strips input-revealing words from a surrogate prompt via
//!    embedding similarity against the example input's nouns plus a truncated
//!    beam search over mask prefixes.
//! 4. [`metrics`] scores functional consistency between surrogate and target
//!    outputs on three axes (semantic, syntactic, structural) and turns the
//!    scores into attack success judgments.
//! 5. [`harness`] wires the stages into single attacks, multi-record
//!    campaigns, ablations, an output-obfuscation defense sweep, and a
//!    prompt-injection baseline.
//!
//! [`model`] holds the shared record/dataset vocabulary and the line-delimited
//! JSON interchange format used by all of the above.

pub mod gateway;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod mutation;
pub mod pruning;
pub mod text;

pub use model::{Category, Dataset, IoPair, PromptRecord, SchemaTag};
