use serde_json::{Deserializer, Value};
use sgkit_core::io::graph_from_object;
use sgkit_core::{validate_graph, Mode, SceneGraph, ValidationReport};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error("unparsable-response: {0}")]
    Unparsable(String),
    #[error("invalid-graph: {}", .0.render_lines().join("; "))]
    InvalidGraph(ValidationReport),
}

impl ResponseError {
    pub fn code(&self) -> &'static str {
        match self {
            ResponseError::Unparsable(_) => "unparsable-response",
            ResponseError::InvalidGraph(_) => "invalid-graph",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub graph: SceneGraph,
    /// Lenient-mode warnings.
    pub report: ValidationReport,
}

/// Finds the first JSON object with an `items` key anywhere in `text`
/// (prose and code fences around it are ignored) and validates it leniently.
pub fn parse_llm_response(text: &str) -> Result<ParsedResponse, ResponseError> {
    let mut field_error = None;
    for (start, _) in text.match_indices('{') {
        let mut stream = Deserializer::from_str(&text[start..]).into_iter::<Value>();
        let Some(Ok(Value::Object(obj))) = stream.next() else {
            continue;
        };
        if !obj.contains_key("items") {
            continue;
        }
        match graph_from_object(&obj) {
            Ok(graph) => {
                let report = validate_graph(&graph, Mode::Lenient);
                if !report.is_accepted() {
                    return Err(ResponseError::InvalidGraph(report));
                }
                return Ok(ParsedResponse { graph, report });
            }
            Err(e) => {
                field_error.get_or_insert(e.to_string());
            }
        }
    }
    Err(ResponseError::Unparsable(
        field_error.unwrap_or_else(|| "no JSON object with an \"items\" field".into()),
    ))
}
