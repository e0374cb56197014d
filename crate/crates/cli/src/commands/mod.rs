pub mod annotate;
pub mod audit;
pub mod bench;
pub mod encode;
pub mod metrics;
pub mod split;
pub mod stats;
pub mod validate;

use std::path::Path;

use anyhow::{bail, Context, Result};
use sgkit_core::io::{Chunks, ErrorLocation, IngestStats, RecordError};
use sgkit_core::{DatasetRecord, Mode};

use crate::run::Run;

pub const OK: u8 = 0;
pub const DOMAIN_ERRORS: u8 = 1;

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "strict" => Ok(Mode::Strict),
        "lenient" => Ok(Mode::Lenient),
        other => bail!("mode must be strict or lenient, got {other:?}"),
    }
}

/// Streams `path`, handing each parsed record or parse failure to `each` in
/// input order. Failures are logged and counted.
pub fn for_each_record(
    run: &mut Run,
    path: &Path,
    mut each: impl FnMut(Result<DatasetRecord, RecordError>) -> Result<()>,
) -> Result<IngestStats> {
    let source = run.input(path)?;
    let mut stats = IngestStats::default();
    for chunk in Chunks::new(source) {
        let chunk = chunk.with_context(|| format!("reading {}", path.display()))?;
        match chunk.parse() {
            Ok(r) => {
                stats.record_ok();
                each(Ok(r))?;
            }
            Err(e) => {
                log::warn!("{}: record {} at byte {}: {}", path.display(), e.ordinal, e.byte_offset, e.error);
                stats.record_failure(ErrorLocation {
                    ordinal: e.ordinal,
                    byte_offset: e.byte_offset,
                    message: e.error.to_string(),
                });
                each(Err(e))?;
            }
        }
    }
    log::info!("{}: {} records ok, {} failed", path.display(), stats.records_ok, stats.records_failed);
    Ok(stats)
}

pub fn read_corpus(run: &mut Run, path: &Path) -> Result<(Vec<DatasetRecord>, IngestStats)> {
    let mut records = Vec::new();
    let stats = for_each_record(run, path, |r| {
        if let Ok(r) = r {
            records.push(r);
        }
        Ok(())
    })?;
    Ok((records, stats))
}

/// Strips tabs and newlines so a value fits in one TSV cell.
pub fn cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Chat endpoint and prompt settings shared by `annotate` and `metrics --protocol`.
pub fn chat_setup(
    run: &mut Run,
    endpoint: Option<String>,
) -> Result<(sgkit_annotator::HttpChatClient, sgkit_annotator::PromptConfig, u64)> {
    use sgkit_annotator::{ChatEndpoint, HttpChatClient, PromptConfig};
    let defaults = PromptConfig::default();
    let Some(url) = run.optional("endpoint", endpoint) else {
        bail!("no chat endpoint: pass --endpoint or set `endpoint` in the config file");
    };
    let model = run.setting("model", None, defaults.model_name.clone())?;
    let temperature = run.setting("temperature", None, defaults.temperature)?;
    let include_caption = run.setting("include_caption", None, defaults.include_caption)?;
    let timeout_s = run.setting("timeout_s", None, 120u64)?;
    let key_env = run.optional("api_key_env", None);
    let rule_texts = match run.optional("rules_file", None) {
        Some(p) => {
            let path = std::path::PathBuf::from(p);
            let mut text = String::new();
            std::io::Read::read_to_string(&mut run.input(&path)?, &mut text)?;
            text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect()
        }
        None => defaults.rule_texts.clone(),
    };
    let prompt = PromptConfig {
        rule_texts,
        model_name: model.clone(),
        temperature,
        include_caption,
        ..defaults
    };
    prompt.validate()?;
    let endpoint = ChatEndpoint {
        url,
        model,
        temperature,
        api_key: None,
        timeout: std::time::Duration::from_secs(timeout_s),
    }
    .with_key_from_env(key_env.as_deref())?;
    Ok((HttpChatClient::new(endpoint)?, prompt, timeout_s))
}
