//! LLM-driven scene-graph annotation: prompt, response parsing, a journaled
//! resumable pipeline, audit sampling, and image-based evaluation.

pub mod audit;
pub mod client;
pub mod evalkit;
pub mod pipeline;
pub mod prompt;
pub mod response;

pub use audit::{read_tally, render_bundle, render_tally_sheet, sample_audit, AuditSample, TallySummary};
pub use client::{ChatClient, ChatEndpoint, ClientError, HttpChatClient, ImageRef};
pub use evalkit::{
    annotation_accuracy_protocol, extract_sg_from_image, run_accuracy_batch, BatchReport, HttpImageGenerator,
    ImageGenerator, Variant,
};
pub use pipeline::{run_pipeline, AnnotationJob, JobStatus, PipelineConfig, PipelinePaths, PipelineReport};
pub use prompt::{build_extraction_prompt, build_prompt, PromptConfig};
pub use response::{parse_llm_response, ParsedResponse, ResponseError};
