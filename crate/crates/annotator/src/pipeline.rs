use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use chrono::{SecondsFormat, Utc};
use log::{info, warn};
use sgkit_core::io::{parse_record, serialize_record, ErrorLocation, IngestStats};
use sgkit_core::DatasetRecord;
use thiserror::Error;

use crate::client::{ChatClient, ImageRef};
use crate::prompt::{job_prompt, PromptConfig};
use crate::response::parse_llm_response;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JobStatus {
    Pending,
    Done,
    Failed,
}

impl JobStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            JobStatus::Pending => "pending",
            JobStatus::Done => "done",
            JobStatus::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<JobStatus> {
        match s {
            "pending" => Some(JobStatus::Pending),
            "done" => Some(JobStatus::Done),
            "failed" => Some(JobStatus::Failed),
            _ => None,
        }
    }
}

/// One image to annotate. `record` carries the metadata; its graph is filled on success.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationJob {
    pub record: DatasetRecord,
    pub image: ImageRef,
    pub status: JobStatus,
    pub attempts: u32,
    pub last_error: Option<String>,
}

impl AnnotationJob {
    pub fn new(record: DatasetRecord, image: ImageRef) -> Self {
        AnnotationJob {
            record,
            image,
            status: JobStatus::Pending,
            attempts: 0,
            last_error: None,
        }
    }

    pub fn img_id(&self) -> &str {
        &self.record.img_id
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub prompt: PromptConfig,
    pub parallelism: usize,
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further one.
    pub backoff_base: Duration,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            prompt: PromptConfig::default(),
            parallelism: 4,
            max_retries: 3,
            backoff_base: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelinePaths {
    /// Annotated records, one JSON line each.
    pub output: PathBuf,
    /// `img_id<TAB>status<TAB>attempts<TAB>timestamp` lines.
    pub journal: PathBuf,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid job {img_id:?}: {reason}")]
    InvalidJob { img_id: String, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JournalEntry {
    pub img_id: String,
    pub status: JobStatus,
    pub attempts: u32,
    pub timestamp: String,
}

impl JournalEntry {
    fn line(&self) -> String {
        format!("{}\t{}\t{}\t{}\n", self.img_id, self.status.as_str(), self.attempts, self.timestamp)
    }

    fn parse(line: &str) -> Option<JournalEntry> {
        let mut f = line.split('\t');
        let entry = JournalEntry {
            img_id: f.next()?.to_string(),
            status: JobStatus::parse(f.next()?)?,
            attempts: f.next()?.parse().ok()?,
            timestamp: f.next()?.to_string(),
        };
        (f.next().is_none() && !entry.img_id.is_empty()).then_some(entry)
    }
}

/// Complete journal lines; a torn or malformed line is skipped.
pub fn read_journal(path: &Path) -> io::Result<Vec<JournalEntry>> {
    let mut text = String::new();
    match File::open(path) {
        Ok(mut f) => f.read_to_string(&mut text)?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    Ok(text
        .split_inclusive('\n')
        .filter(|l| l.ends_with('\n'))
        .filter_map(|l| JournalEntry::parse(l.trim_end_matches(['\n', '\r'])))
        .collect())
}

/// Last journal state per img_id.
pub fn journal_state(entries: &[JournalEntry]) -> HashMap<String, JournalEntry> {
    entries.iter().map(|e| (e.img_id.clone(), e.clone())).collect()
}

/// img_ids of the records in an output file; torn or unparsable lines are skipped.
pub fn read_output_ids(path: &Path) -> io::Result<Vec<String>> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut ids = Vec::new();
    let mut reader = BufReader::new(f);
    let mut line = String::new();
    while reader.read_line(&mut line)? > 0 {
        if line.ends_with('\n') {
            match parse_record(line.trim()) {
                Ok(r) => ids.push(r.img_id),
                Err(e) if !line.trim().is_empty() => warn!("ignoring unreadable output line: {e}"),
                Err(_) => {}
            }
        }
        line.clear();
    }
    Ok(ids)
}

/// Cuts an unterminated last line left by an interrupted write.
fn repair_tail(path: &Path) -> io::Result<()> {
    let mut f = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(path)?;
    let len = f.metadata()?.len();
    if len == 0 {
        return Ok(());
    }
    let mut keep = len;
    let mut buf = [0u8; 4096];
    loop {
        let start = keep.saturating_sub(buf.len() as u64);
        let chunk = &mut buf[..(keep - start) as usize];
        f.seek(SeekFrom::Start(start))?;
        f.read_exact(chunk)?;
        if let Some(p) = chunk.iter().rposition(|&b| b == b'\n') {
            keep = start + p as u64 + 1;
            break;
        }
        if start == 0 {
            keep = 0;
            break;
        }
        keep = start;
    }
    if keep != len {
        warn!("{}: dropping {} bytes of an incomplete last line", path.display(), len - keep);
        f.set_len(keep)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    /// Outcomes of this run: successes and failures, by manifest position.
    pub stats: IngestStats,
    pub jobs: Vec<AnnotationJob>,
    /// Jobs already done before this run.
    pub skipped: usize,
    /// Requests sent to the client in this run.
    pub requests: u64,
    pub cancelled: bool,
}

impl PipelineReport {
    pub fn count(&self, status: JobStatus) -> usize {
        self.jobs.iter().filter(|j| j.status == status).count()
    }
}

enum Outcome {
    Done { index: usize, attempts: u32, line: String },
    Failed { index: usize, attempts: u32, error: String },
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn sleep_unless_cancelled(d: Duration, cancel: &AtomicBool) {
    let until = Instant::now() + d;
    while !cancel.load(Ordering::SeqCst) {
        let now = Instant::now();
        if now >= until {
            break;
        }
        thread::sleep((until - now).min(Duration::from_millis(50)));
    }
}

fn attempt_job(
    job: &AnnotationJob,
    client: &dyn ChatClient,
    config: &PipelineConfig,
    requests: &AtomicU64,
    cancel: &AtomicBool,
) -> Option<(u32, Result<String, String>)> {
    let prompt = job_prompt(&config.prompt, Some(&job.record.caption_ori));
    let mut last_error = String::new();
    let mut attempts = 0;
    for attempt in 0..=config.max_retries {
        if attempt > 0 {
            if cancel.load(Ordering::SeqCst) {
                break;
            }
            sleep_unless_cancelled(config.backoff_base * 2u32.saturating_pow(attempt - 1), cancel);
            if cancel.load(Ordering::SeqCst) {
                break;
            }
        }
        attempts += 1;
        requests.fetch_add(1, Ordering::SeqCst);
        let reply = client.complete(&prompt, &job.image);
        match reply.map_err(|e| e.to_string()).and_then(|t| parse_llm_response(&t).map_err(|e| e.to_string())) {
            Ok(parsed) => {
                for w in &parsed.report.warnings {
                    warn!("{}: {} {}", job.img_id(), w.rule, w.message);
                }
                let mut record = job.record.clone();
                record.graph = parsed.graph;
                return Some((attempts, Ok(serialize_record(&record))));
            }
            Err(e) => {
                warn!("{} attempt {attempts}: {e}", job.img_id());
                last_error = e;
            }
        }
    }
    if attempts == 0 {
        return None;
    }
    Some((attempts, Err(last_error)))
}

fn validate_jobs(jobs: &[AnnotationJob]) -> Result<(), PipelineError> {
    let mut seen = HashSet::new();
    for job in jobs {
        let id = job.img_id();
        let reason = if id.is_empty() {
            Some("empty img_id")
        } else if id.contains(['\t', '\n', '\r']) {
            Some("img_id contains a tab or line break")
        } else if !seen.insert(id) {
            Some("duplicate img_id")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(PipelineError::InvalidJob {
                img_id: id.to_string(),
                reason: reason.to_string(),
            });
        }
    }
    Ok(())
}

/// Annotates every job not already present in the output file.
///
/// Results pass through a single writer: the record line is appended and
/// synced before its journal line, so a crash never loses a success and a
/// re-run never repeats one.
pub fn run_pipeline(
    jobs: Vec<AnnotationJob>,
    client: &dyn ChatClient,
    config: &PipelineConfig,
    paths: &PipelinePaths,
    cancel: &AtomicBool,
) -> Result<PipelineReport, PipelineError> {
    if config.parallelism == 0 {
        return Err(PipelineError::Config("parallelism must be at least 1".into()));
    }
    config.prompt.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    validate_jobs(&jobs)?;

    repair_tail(&paths.output)?;
    repair_tail(&paths.journal)?;
    let done: BTreeSet<String> = read_output_ids(&paths.output)?.into_iter().collect();
    let journal = journal_state(&read_journal(&paths.journal)?);
    let mut journal_out = OpenOptions::new().append(true).create(true).open(&paths.journal)?;
    let mut output = OpenOptions::new().append(true).create(true).open(&paths.output)?;

    let mut jobs = jobs;
    let mut pending = Vec::new();
    let mut skipped = 0;
    for (i, job) in jobs.iter_mut().enumerate() {
        let entry = journal.get(job.img_id());
        if done.contains(job.img_id()) {
            job.status = JobStatus::Done;
            job.attempts = entry.map_or(0, |e| e.attempts);
            skipped += 1;
            if entry.map(|e| e.status) != Some(JobStatus::Done) {
                // record landed but its journal line did not
                let repaired = JournalEntry {
                    img_id: job.img_id().to_string(),
                    status: JobStatus::Done,
                    attempts: job.attempts,
                    timestamp: timestamp(),
                };
                journal_out.write_all(repaired.line().as_bytes())?;
            }
        } else {
            if entry.map(|e| e.status) == Some(JobStatus::Done) {
                warn!("{}: journal says done but no record in output; annotating again", job.img_id());
            }
            job.status = JobStatus::Pending;
            pending.push(i);
        }
    }
    journal_out.flush()?;
    info!("{} jobs, {} already done, {} to annotate", jobs.len(), skipped, pending.len());

    let requests = AtomicU64::new(0);
    let next = AtomicUsize::new(0);
    let workers = config.parallelism.min(pending.len()).max(1);
    let mut stats = IngestStats::default();
    let mut write_error: Option<io::Error> = None;
    let job_view = &jobs;

    thread::scope(|s| {
        let (tx, rx) = mpsc::channel::<Outcome>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (pending, next, requests) = (&pending, &next, &requests);
            s.spawn(move || loop {
                if cancel.load(Ordering::SeqCst) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&index) = pending.get(k) else { break };
                let Some((attempts, result)) = attempt_job(&job_view[index], client, config, requests, cancel) else {
                    break;
                };
                let _ = tx.send(match result {
                    Ok(line) => Outcome::Done { index, attempts, line },
                    Err(error) => Outcome::Failed { index, attempts, error },
                });
            });
        }
        drop(tx);

        let mut updates = Vec::new();
        for outcome in rx {
            if write_error.is_some() {
                continue;
            }
            let (index, attempts, status, line, error) = match outcome {
                Outcome::Done { index, attempts, line } => (index, attempts, JobStatus::Done, Some(line), None),
                Outcome::Failed { index, attempts, error } => (index, attempts, JobStatus::Failed, None, Some(error)),
            };
            let entry = JournalEntry {
                img_id: job_view[index].img_id().to_string(),
                status,
                attempts,
                timestamp: timestamp(),
            };
            let written = (|| -> io::Result<()> {
                if let Some(line) = &line {
                    output.write_all(line.as_bytes())?;
                    output.write_all(b"\n")?;
                    output.flush()?;
                    output.sync_data()?;
                }
                journal_out.write_all(entry.line().as_bytes())?;
                journal_out.flush()
            })();
            if let Err(e) = written {
                cancel.store(true, Ordering::SeqCst);
                write_error = Some(e);
                continue;
            }
            updates.push((index, status, attempts, error));
        }
        updates
    })
    .into_iter()
    .for_each(|(index, status, attempts, error)| {
        let job = &mut jobs[index];
        job.status = status;
        job.attempts = attempts;
        match status {
            JobStatus::Done => stats.record_ok(),
            _ => stats.record_failure(ErrorLocation {
                ordinal: index as u64,
                byte_offset: 0,
                message: format!("{}: {}", job.img_id(), error.as_deref().unwrap_or("")),
            }),
        }
        job.last_error = error;
    });

    if let Some(e) = write_error {
        return Err(e.into());
    }
    Ok(PipelineReport {
        stats,
        jobs,
        skipped,
        requests: requests.load(Ordering::SeqCst),
        cancelled: cancel.load(Ordering::SeqCst),
    })
}
