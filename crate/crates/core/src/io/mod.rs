//! Serialization, streaming ingestion and dataset splitting.

mod record;
mod split;
mod stream;

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

pub use record::{
    graph_from_object, graph_to_value, parse_json, parse_record, record_from_value,
    record_to_value, serialize_graph, serialize_record, serialize_record_pretty, RECORD_FIELDS,
};
pub use split::{split_dataset, Split, SplitSpec};
pub(crate) use split::seeded_permutation;
pub use stream::{
    read_all, stream_records, Chunk, Chunks, ErrorLocation, IngestStats, RecordError,
    StreamFailure, MAX_ERROR_LOCATIONS,
};

/// Writes one id per line.
pub fn write_id_list<W: Write>(mut out: W, ids: &[String]) -> io::Result<()> {
    for id in ids {
        writeln!(out, "{id}")?;
    }
    out.flush()
}

/// Reads one id per line, skipping blank lines and `#` comments.
pub fn read_id_list<R: BufRead>(source: R) -> io::Result<Vec<String>> {
    let mut ids = Vec::new();
    for line in source.lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() && !id.starts_with('#') {
            ids.push(id.to_string());
        }
    }
    Ok(ids)
}

/// Problems found when checking externally supplied split lists against a
/// corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitAudit {
    pub unknown_ids: Vec<String>,
    pub overlapping_ids: Vec<String>,
    pub duplicate_ids: Vec<String>,
    pub unassigned: usize,
}

impl SplitAudit {
    pub fn is_clean(&self) -> bool {
        self.unknown_ids.is_empty() && self.overlapping_ids.is_empty() && self.duplicate_ids.is_empty()
    }
}

/// Checks that `lists` are disjoint, duplicate-free and drawn from `corpus`.
pub fn audit_split_lists(corpus: &[String], lists: &[&[String]]) -> SplitAudit {
    let known: HashSet<&str> = corpus.iter().map(String::as_str).collect();
    let mut audit = SplitAudit::default();
    let mut assigned: HashSet<&str> = HashSet::new();
    for list in lists {
        let mut local = HashSet::new();
        for id in list.iter() {
            if !local.insert(id.as_str()) {
                audit.duplicate_ids.push(id.clone());
                continue;
            }
            if !known.contains(id.as_str()) {
                audit.unknown_ids.push(id.clone());
            }
            if !assigned.insert(id.as_str()) {
                audit.overlapping_ids.push(id.clone());
            }
        }
    }
    audit.unassigned = known.iter().filter(|id| !assigned.contains(*id)).count();
    audit
}
