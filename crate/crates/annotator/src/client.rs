use std::path::{Path, PathBuf};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("http status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("bad response: {0}")]
    BadResponse(String),
    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing credential: environment variable {0} is not set")]
    MissingKey(String),
}

/// Where the image comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageRef {
    Url(String),
    Path(PathBuf),
    Bytes { mime: String, data: Vec<u8> },
}

impl ImageRef {
    /// `http(s)://` and `data:` strings become URLs, anything else a path.
    pub fn parse(s: &str) -> ImageRef {
        if s.starts_with("http://") || s.starts_with("https://") || s.starts_with("data:") {
            ImageRef::Url(s.to_string())
        } else {
            ImageRef::Path(PathBuf::from(s))
        }
    }

    /// A URL usable in an `image_url` content part.
    pub fn to_url(&self) -> Result<String, ClientError> {
        match self {
            ImageRef::Url(u) => Ok(u.clone()),
            ImageRef::Path(p) => {
                let data = std::fs::read(p).map_err(|source| ClientError::Image {
                    path: p.clone(),
                    source,
                })?;
                Ok(data_url(mime_for_path(p), &data))
            }
            ImageRef::Bytes { mime, data } => Ok(data_url(mime, data)),
        }
    }
}

fn data_url(mime: &str, data: &[u8]) -> String {
    format!("data:{mime};base64,{}", STANDARD.encode(data))
}

pub fn mime_for_path(p: &Path) -> &'static str {
    let ext = p
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" => "image/png",
        "gif" => "image/gif",
        "webp" => "image/webp",
        "bmp" => "image/bmp",
        _ => "image/jpeg",
    }
}

/// Sends a prompt and one image, returns the model's text reply.
pub trait ChatClient: Send + Sync {
    fn complete(&self, prompt: &str, image: &ImageRef) -> Result<String, ClientError>;
}

#[derive(Debug, Clone)]
pub struct ChatEndpoint {
    pub url: String,
    pub model: String,
    pub temperature: f64,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl ChatEndpoint {
    /// Reads the key from `key_env` when given; an unset variable is an error.
    pub fn with_key_from_env(mut self, key_env: Option<&str>) -> Result<Self, ClientError> {
        if let Some(var) = key_env {
            let key = std::env::var(var).map_err(|_| ClientError::MissingKey(var.to_string()))?;
            self.api_key = Some(key);
        }
        Ok(self)
    }
}

/// OpenAI-style `chat/completions` client.
pub struct HttpChatClient {
    endpoint: ChatEndpoint,
    http: reqwest::blocking::Client,
}

impl HttpChatClient {
    pub fn new(endpoint: ChatEndpoint) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(endpoint.timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(HttpChatClient { endpoint, http })
    }

    pub fn request_body(&self, prompt: &str, image_url: &str) -> Value {
        json!({
            "model": self.endpoint.model,
            "temperature": self.endpoint.temperature,
            "messages": [{
                "role": "user",
                "content": [
                    { "type": "text", "text": prompt },
                    { "type": "image_url", "image_url": { "url": image_url } }
                ]
            }]
        })
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, prompt: &str, image: &ImageRef) -> Result<String, ClientError> {
        let body = self.request_body(prompt, &image.to_url()?);
        let mut req = self.http.post(&self.endpoint.url).json(&body);
        if let Some(key) = &self.endpoint.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Status {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| ClientError::BadResponse(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ClientError::BadResponse("no choices[0].message.content".into()))
    }
}
