use thiserror::Error;

pub const COVERAGE_INSTRUCTION: &str =
    "Identify as many objects, attributes, and their relations within the image as possible.";

pub const EXTRACTION_INSTRUCTION: &str =
    "Extract the scene graph of this image: list the objects it shows, their attributes, and the relations between them.";

pub const DEFAULT_RULES: [&str; 4] = [
    "Identify the objects in the image and assign a unique ID to each.",
    "The attributes must be abstract adjectives and should not include specific objects. Each object may have one or more attributes.",
    "The relations between objects should be as specific as possible, avoiding simple relations. Use more precise verbs, minimizing repetition.",
    "For people, label the object as \"person\" and include attributes such as gender and age. Avoid anthropomorphism or associations, and provide an objective description of what is observed in the image.",
];

pub const DEFAULT_OUTPUT_FORMAT: &str = "Respond with a single JSON object and nothing else, in this form: \
{\"items\": [{\"item_id\": 0, \"label\": \"...\", \"attributes\": [\"...\"]}], \
\"relations\": [{\"triple_id\": 0, \"item1\": 0, \"relation\": \"...\", \"item2\": 1}]}. \
item_id values are unique integers; item1 and item2 refer to item_id values; triple_id values are unique integers.";

pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("rule list is empty")]
    NoRules,
    #[error("temperature must be a finite value >= 0, got {0}")]
    Temperature(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptConfig {
    pub rule_texts: Vec<String>,
    pub output_format_instructions: String,
    pub model_name: String,
    pub temperature: f64,
    /// Also send the original caption with the image.
    pub include_caption: bool,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            rule_texts: DEFAULT_RULES.iter().map(|s| s.to_string()).collect(),
            output_format_instructions: DEFAULT_OUTPUT_FORMAT.to_string(),
            model_name: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            include_caption: false,
        }
    }
}

impl PromptConfig {
    pub fn validate(&self) -> Result<(), PromptError> {
        if self.rule_texts.is_empty() {
            return Err(PromptError::NoRules);
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(PromptError::Temperature(self.temperature));
        }
        Ok(())
    }

    pub fn with_extra_rule(mut self, rule: impl Into<String>) -> Self {
        self.rule_texts.push(rule.into());
        self
    }
}

fn render(head: &str, config: &PromptConfig, caption: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(head);
    out.push_str("\n\nRules:\n");
    for (i, rule) in config.rule_texts.iter().enumerate() {
        out.push_str(&format!("{}) {}\n", i + 1, rule));
    }
    if let Some(c) = caption {
        out.push_str(&format!("\nThe image was published with this caption: {c}\n"));
    }
    out.push('\n');
    out.push_str(&config.output_format_instructions);
    out
}

/// Annotation prompt: coverage instruction, numbered rules, output format.
pub fn build_prompt(config: &PromptConfig) -> String {
    render(COVERAGE_INSTRUCTION, config, None)
}

/// Annotation prompt for one image; the caption is used only if the config asks for it.
pub fn job_prompt(config: &PromptConfig, caption: Option<&str>) -> String {
    render(COVERAGE_INSTRUCTION, config, caption.filter(|_| config.include_caption))
}

/// Same rules and schema, framed as extraction from a generated image.
pub fn build_extraction_prompt(config: &PromptConfig) -> String {
    render(EXTRACTION_INSTRUCTION, config, None)
}
