use std::collections::HashMap;
use std::fmt::Write;

use sgkit_core::io::serialize_graph;
use sgkit_core::sampling::{sample_without_replacement, SampleTooLarge};
use sgkit_core::DatasetRecord;
use thiserror::Error;

pub const TALLY_HEADER: &str = "img_id\thallucination\tmislabel\tnotes";

/// Ids drawn without replacement for human review.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditSample {
    pub ids: Vec<String>,
    pub seed: u64,
    pub sample_size: usize,
}

pub fn sample_audit(ids: &[String], size: usize, seed: u64) -> Result<AuditSample, SampleTooLarge> {
    Ok(AuditSample {
        ids: sample_without_replacement(ids, size, seed)?,
        seed,
        sample_size: size,
    })
}

/// Markdown review bundle: each sampled graph next to its caption and URL.
pub fn render_bundle(sample: &AuditSample, records: &HashMap<&str, &DatasetRecord>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Annotation audit\n");
    let _ = writeln!(out, "seed: {}  \nsample size: {}\n", sample.seed, sample.sample_size);
    let _ = writeln!(
        out,
        "Mark each record in the tally sheet: `hallucination` if the graph names something not in the image, \
         `mislabel` if an object, attribute or relation is wrong.\n"
    );
    for (n, id) in sample.ids.iter().enumerate() {
        let _ = writeln!(out, "## {}. {id}\n", n + 1);
        let Some(r) = records.get(id.as_str()) else {
            let _ = writeln!(out, "record not found\n");
            continue;
        };
        let _ = writeln!(out, "- url: {}\n- caption: {}\n", r.url, r.caption_ori);
        match r.graph.triples() {
            Ok(triples) => {
                for t in triples {
                    let _ = writeln!(out, "- ({}, {}, {})", t.subject.label, t.relation, t.object.label);
                }
                for s in r.graph.single_objects() {
                    let _ = writeln!(out, "- {}", s.label);
                }
            }
            Err(e) => {
                let _ = writeln!(out, "- graph error: {e}");
            }
        }
        let _ = writeln!(out, "\n```json\n{}\n```\n", serialize_graph(&r.graph));
    }
    out
}

/// Blank tally sheet, one row per sampled id.
pub fn render_tally_sheet(sample: &AuditSample) -> String {
    let mut out = String::from(TALLY_HEADER);
    out.push('\n');
    for id in &sample.ids {
        out.push_str(id);
        out.push_str("\t\t\t\n");
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TallyError {
    #[error("tally sheet must start with the header {TALLY_HEADER:?}")]
    Header,
    #[error("line {line}: unrecognized mark {mark:?}")]
    Mark { line: usize, mark: String },
    #[error("line {line}: expected at least 3 tab-separated fields")]
    Fields { line: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TallySummary {
    pub reviewed: usize,
    pub hallucinations: usize,
    pub mislabels: usize,
}

impl TallySummary {
    pub fn hallucination_rate(&self) -> f64 {
        percent(self.hallucinations, self.reviewed)
    }

    pub fn mislabel_rate(&self) -> f64 {
        percent(self.mislabels, self.reviewed)
    }
}

fn percent(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

fn mark(s: &str, line: usize) -> Result<bool, TallyError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "n" | "no" | "false" | "-" => Ok(false),
        "1" | "x" | "y" | "yes" | "true" => Ok(true),
        other => Err(TallyError::Mark {
            line,
            mark: other.to_string(),
        }),
    }
}

/// Counts marked rows of a filled tally sheet; every data row counts as reviewed.
pub fn read_tally(text: &str) -> Result<TallySummary, TallyError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == TALLY_HEADER => {}
        _ => return Err(TallyError::Header),
    }
    let mut summary = TallySummary::default();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(TallyError::Fields { line: i + 1 });
        }
        summary.reviewed += 1;
        summary.hallucinations += usize::from(mark(fields[1], i + 1)?);
        summary.mislabels += usize::from(mark(fields[2], i + 1)?);
    }
    Ok(summary)
}
