//! Role templates for the generator and difference-analyzer prompts.
//!
//! Templates are plain text files with named slots. The generator template
//! must contain `{input}`, `{output}` and `{attention}` exactly once; the
//! analyzer template must contain `{output_a}` and `{output_b}` exactly once.
//! Defaults are compiled in; deployments can point at their own files.

use std::fs;
use std::path::Path;

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Generator,
    Differ,
}

impl Role {
    fn required_slots(self) -> &'static [&'static str] {
        match self {
            Role::Generator => &["{input}", "{output}", "{attention}"],
            Role::Differ => &["{output_a}", "{output_b}"],
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoleTemplate {
    role: Role,
    text: String,
}

impl RoleTemplate {
    pub fn new(role: Role, text: &str) -> Result<Self, GatewayError> {
        for slot in role.required_slots() {
            match text.matches(slot).count() {
                0 => {
                    return Err(GatewayError::MissingSlot { slot: slot.to_string() });
                }
                1 => {}
                n => {
                    return Err(GatewayError::DuplicateSlot { slot: slot.to_string(), count: n });
                }
            }
        }
        Ok(RoleTemplate { role, text: text.to_string() })
    }

    pub fn load(role: Role, path: &Path) -> Result<Self, GatewayError> {
        let text = fs::read_to_string(path)
            .map_err(|e| GatewayError::TemplateIo(path.display().to_string(), e))?;
        Self::new(role, &text)
    }

    pub fn default_generator() -> Self {
        Self::new(Role::Generator, include_str!("../../assets/generator.tmpl"))
            .expect("bundled generator template is valid")
    }

    pub fn default_differ() -> Self {
        Self::new(Role::Differ, include_str!("../../assets/differ.tmpl"))
            .expect("bundled differ template is valid")
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Fills the generator slots. `attention_text` is the pre-rendered
    /// "focus on" block, or empty when generating unguided.
    pub fn render_generator(&self, input: &str, output: &str, attention_text: &str) -> String {
        debug_assert_eq!(self.role, Role::Generator);
        self.text
            .replace("{attention}", attention_text)
            .replace("{input}", input)
            .replace("{output}", output)
    }

    /// Fills the analyzer slots with the two outputs to compare.
    pub fn render_differ(&self, output_a: &str, output_b: &str) -> String {
        debug_assert_eq!(self.role, Role::Differ);
        self.text.replace("{output_a}", output_a).replace("{output_b}", output_b)
    }
}
