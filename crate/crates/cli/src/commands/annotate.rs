use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::Duration;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use serde_json::Value;
use sgkit_annotator::{run_pipeline, AnnotationJob, ImageRef, JobStatus, PipelineConfig, PipelinePaths};
use sgkit_core::io::{parse_json, record_from_value};

use super::{chat_setup, DOMAIN_ERRORS, OK};
use crate::run::Run;

pub const OUTPUT_NAME: &str = "annotated.jsonl";
pub const JOURNAL_NAME: &str = "journal.tsv";

#[derive(Args, Debug)]
pub struct AnnotateArgs {
    /// JSON lines with img_id, name, caption_ori, score, url and optionally
    /// `image` (URL or local path; defaults to url).
    pub manifest: PathBuf,
    /// Chat-completions URL; overrides `endpoint` in the config file.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Retries after the first attempt.
    #[arg(long)]
    pub max_retries: Option<u32>,
}

#[derive(Serialize)]
struct Summary {
    jobs: usize,
    skipped_already_done: usize,
    done: usize,
    failed: usize,
    requests: u64,
    failures: Vec<(String, String)>,
}

fn parse_job(line: &str, base: &Path) -> Result<AnnotationJob> {
    let Value::Object(mut obj) = parse_json(line)? else {
        bail!("manifest line is not a JSON object");
    };
    let image = match obj.remove("image") {
        Some(Value::String(s)) => Some(s),
        Some(_) => bail!("`image` must be a string"),
        None => None,
    };
    obj.entry("items").or_insert_with(|| Value::Array(vec![]));
    obj.entry("relations").or_insert_with(|| Value::Array(vec![]));
    let record = record_from_value(Value::Object(obj))?;
    let image = match ImageRef::parse(image.as_deref().unwrap_or(&record.url)) {
        ImageRef::Path(p) if p.is_relative() => ImageRef::Path(base.join(p)),
        other => other,
    };
    Ok(AnnotationJob::new(record, image))
}

pub fn run(args: AnnotateArgs, run: &mut Run) -> Result<u8> {
    let defaults = PipelineConfig::default();
    let parallelism = run.setting("parallelism", args.parallelism, defaults.parallelism)?;
    let max_retries = run.setting("max_retries", args.max_retries, defaults.max_retries)?;
    let backoff_ms = run.setting("backoff_ms", None, defaults.backoff_base.as_millis() as u64)?;
    let (client, prompt, _) = chat_setup(run, args.endpoint)?;

    let base = args.manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut jobs = Vec::new();
    let mut bad = 0usize;
    for (i, line) in run.input(&args.manifest)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_job(&line, &base) {
            Ok(j) => jobs.push(j),
            Err(e) => {
                eprintln!("{} line {}: {e:#}", args.manifest.display(), i + 1);
                bad += 1;
            }
        }
    }
    if bad > 0 {
        eprintln!("{bad} invalid manifest lines; nothing sent");
        return Ok(DOMAIN_ERRORS);
    }

    let config = PipelineConfig {
        prompt,
        parallelism,
        max_retries,
        backoff_base: Duration::from_millis(backoff_ms),
    };
    let paths = PipelinePaths {
        output: run.output_path(OUTPUT_NAME)?,
        journal: run.output_path(JOURNAL_NAME)?,
    };
    let n_jobs = jobs.len();
    let report = run_pipeline(jobs, &client, &config, &paths, &AtomicBool::new(false))?;
    let summary = Summary {
        jobs: n_jobs,
        skipped_already_done: report.skipped,
        done: report.count(JobStatus::Done),
        failed: report.count(JobStatus::Failed),
        requests: report.requests,
        failures: report
            .jobs
            .iter()
            .filter(|j| j.status == JobStatus::Failed)
            .map(|j| (j.img_id().to_string(), j.last_error.clone().unwrap_or_default()))
            .collect(),
    };
    run.write_json("annotate_summary.json", &summary)?;
    println!(
        "{} jobs: {} done ({} from a previous run), {} failed, {} requests",
        summary.jobs, summary.done, summary.skipped_already_done, summary.failed, summary.requests
    );
    Ok(if summary.failed > 0 { DOMAIN_ERRORS } else { OK })
}
