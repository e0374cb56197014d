//! Scene-graph extraction from images and the annotation-accuracy protocol.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use log::warn;
use serde::Serialize;
use serde_json::{json, Value};
use sgkit_core::io::serialize_graph;
use sgkit_core::{iou_report, DatasetRecord, IoUReport, ModelError, SceneGraph};
use thiserror::Error;

use crate::client::{ChatClient, ClientError, ImageRef};
use crate::prompt::{build_extraction_prompt, PromptConfig};
use crate::response::{parse_llm_response, ResponseError};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Response(#[from] ResponseError),
}

/// Asks the model to describe a (generated) image as a scene graph.
pub fn extract_sg_from_image(
    image: &ImageRef,
    client: &dyn ChatClient,
    config: &PromptConfig,
) -> Result<SceneGraph, ExtractError> {
    let reply = client.complete(&build_extraction_prompt(config), image)?;
    Ok(parse_llm_response(&reply)?.graph)
}

/// Text-to-image service.
pub trait ImageGenerator: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<ImageRef, ClientError>;
}

/// POSTs `{"prompt": ...}`. Accepts a raw image body or an images-API JSON
/// reply carrying `data[0].b64_json` or `data[0].url`.
pub struct HttpImageGenerator {
    url: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpImageGenerator {
    pub fn new(url: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(HttpImageGenerator {
            url: url.to_string(),
            api_key,
            http,
        })
    }
}

impl ImageGenerator for HttpImageGenerator {
    fn generate(&self, prompt: &str) -> Result<ImageRef, ClientError> {
        let mut req = self.http.post(&self.url).json(&json!({ "prompt": prompt }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        let mime = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_string();
        let body = resp.bytes().map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Status {
                status: status.as_u16(),
                body: String::from_utf8_lossy(&body).chars().take(500).collect(),
            });
        }
        if mime.starts_with("image/") {
            return Ok(ImageRef::Bytes {
                mime,
                data: body.to_vec(),
            });
        }
        let v: Value = serde_json::from_slice(&body).map_err(|e| ClientError::BadResponse(e.to_string()))?;
        if let Some(b64) = v.pointer("/data/0/b64_json").and_then(Value::as_str) {
            let data = STANDARD
                .decode(b64)
                .map_err(|e| ClientError::BadResponse(e.to_string()))?;
            return Ok(ImageRef::Bytes {
                mime: "image/png".into(),
                data,
            });
        }
        v.pointer("/data/0/url")
            .and_then(Value::as_str)
            .map(|u| ImageRef::Url(u.to_string()))
            .ok_or_else(|| ClientError::BadResponse("no image in response".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Generate from the original caption.
    Caption,
    /// Generate from the serialized scene graph.
    Sg,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "caption" => Some(Variant::Caption),
            "sg" => Some(Variant::Sg),
            _ => None,
        }
    }

    pub fn generation_prompt(self, record: &DatasetRecord) -> String {
        match self {
            Variant::Caption => record.caption_ori.clone(),
            Variant::Sg => serialize_graph(&record.graph),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("generator: {0}")]
    Generate(ClientError),
    #[error("extracting from generated image: {0}")]
    ExtractGenerated(ExtractError),
    #[error("extracting from reference image: {0}")]
    ExtractReference(ExtractError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Generates an image for `record`, extracts scene graphs from it and from the
/// reference image, and compares the two.
pub fn annotation_accuracy_protocol(
    record: &DatasetRecord,
    reference_image: &ImageRef,
    generator: &dyn ImageGenerator,
    extractor: &dyn ChatClient,
    config: &PromptConfig,
    variant: Variant,
) -> Result<IoUReport, ProtocolError> {
    let generated = generator
        .generate(&variant.generation_prompt(record))
        .map_err(ProtocolError::Generate)?;
    let predicted = extract_sg_from_image(&generated, extractor, config).map_err(ProtocolError::ExtractGenerated)?;
    let reference =
        extract_sg_from_image(reference_image, extractor, config).map_err(ProtocolError::ExtractReference)?;
    Ok(iou_report(&predicted, &reference)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchRow {
    pub img_id: String,
    pub report: Option<IoUReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub variant: Variant,
    pub rows: Vec<BatchRow>,
    /// Mean over successful records only.
    pub mean: Option<IoUReport>,
    pub successes: usize,
    pub failures: usize,
}

impl BatchReport {
    /// Per-record TSV rows followed by a `mean` row.
    pub fn render_table(&self) -> String {
        let mut out = String::from("img_id\tsg_iou\tentity_iou\trelation_iou\terror\n");
        let fmt = |r: &IoUReport| format!("{:.4}\t{:.4}\t{:.4}", r.sg_iou, r.entity_iou, r.relation_iou);
        for row in &self.rows {
            match &row.report {
                Some(r) => out.push_str(&format!("{}\t{}\t\n", row.img_id, fmt(r))),
                None => out.push_str(&format!(
                    "{}\t\t\t\t{}\n",
                    row.img_id,
                    row.error.as_deref().unwrap_or("").replace(['\t', '\n'], " ")
                )),
            }
        }
        match &self.mean {
            Some(m) => out.push_str(&format!("mean(n={})\t{}\t\n", self.successes, fmt(m))),
            None => out.push_str("mean(n=0)\t\t\t\t\n"),
        }
        out
    }
}

/// Runs the protocol over `records` with at most `parallelism` records in flight.
/// Failed records are logged and excluded from the mean.
pub fn run_accuracy_batch(
    records: &[DatasetRecord],
    generator: &dyn ImageGenerator,
    extractor: &dyn ChatClient,
    config: &PromptConfig,
    variant: Variant,
    parallelism: usize,
) -> BatchReport {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<IoUReport, String>>>> = Mutex::new(vec![None; records.len()]);
    thread::scope(|s| {
        for _ in 0..parallelism.max(1).min(records.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(record) = records.get(i) else { break };
                let reference = ImageRef::parse(&record.url);
                let result = annotation_accuracy_protocol(record, &reference, generator, extractor, config, variant)
                    .map_err(|e| {
                        warn!("{}: skipped: {e}", record.img_id);
                        e.to_string()
                    });
                slots.lock().expect("result slots")[i] = Some(result);
            });
        }
    });
    let rows: Vec<BatchRow> = records
        .iter()
        .zip(slots.into_inner().expect("result slots"))
        .map(|(r, slot)| match slot.expect("every record processed") {
            Ok(report) => BatchRow {
                img_id: r.img_id.clone(),
                report: Some(report),
                error: None,
            },
            Err(e) => BatchRow {
                img_id: r.img_id.clone(),
                report: None,
                error: Some(e),
            },
        })
        .collect();
    let ok: Vec<IoUReport> = rows.iter().filter_map(|r| r.report).collect();
    BatchReport {
        variant,
        mean: IoUReport::mean(&ok),
        successes: ok.len(),
        failures: rows.len() - ok.len(),
        rows,
    }
}
