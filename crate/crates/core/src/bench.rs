//! Selection of complex scenes for the compositional generation benchmark.

use std::io::{self, BufRead, Write};

use crate::model::DatasetRecord;

/// Records with more relations than this are considered complex.
pub const DEFAULT_RELATION_THRESHOLD: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchManifest {
    pub selected: Vec<String>,
    /// Selection keeps records with strictly more relations than this.
    pub threshold: usize,
    pub source_split: String,
    pub scanned: u64,
}

/// Incremental form of [`select_complex`] for streamed corpora.
#[derive(Debug, Clone)]
pub struct BenchSelector {
    manifest: BenchManifest,
}

impl BenchSelector {
    pub fn new(threshold: usize, source_split: impl Into<String>) -> Self {
        BenchSelector {
            manifest: BenchManifest {
                selected: Vec::new(),
                threshold,
                source_split: source_split.into(),
                scanned: 0,
            },
        }
    }

    pub fn push(&mut self, record: &DatasetRecord) {
        self.manifest.scanned += 1;
        if record.graph.relations.len() > self.manifest.threshold {
            self.manifest.selected.push(record.img_id.clone());
        }
    }

    pub fn finish(self) -> BenchManifest {
        self.manifest
    }
}

/// Ids of records with more than `threshold` relations, in input order.
pub fn select_complex<'a>(
    records: impl IntoIterator<Item = &'a DatasetRecord>,
    threshold: usize,
    source_split: &str,
) -> BenchManifest {
    let mut selector = BenchSelector::new(threshold, source_split);
    for r in records {
        selector.push(r);
    }
    selector.finish()
}

impl BenchManifest {
    /// `#`-prefixed summary header followed by one id per line.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# threshold\t{}", self.threshold)?;
        writeln!(out, "# rule\trelations > threshold")?;
        writeln!(out, "# source_split\t{}", self.source_split)?;
        writeln!(out, "# scanned\t{}", self.scanned)?;
        writeln!(out, "# selected\t{}", self.selected.len())?;
        for id in &self.selected {
            writeln!(out, "{id}")?;
        }
        out.flush()
    }

    pub fn read<R: BufRead>(source: R) -> io::Result<BenchManifest> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut manifest = BenchManifest {
            selected: Vec::new(),
            threshold: DEFAULT_RELATION_THRESHOLD,
            source_split: String::new(),
            scanned: 0,
        };
        for line in source.lines() {
            let line = line?;
            if let Some(header) = line.strip_prefix("# ") {
                let (key, value) = header.split_once('\t').unwrap_or((header, ""));
                match key {
                    "threshold" => manifest.threshold = value.parse().map_err(|e| bad(format!("threshold: {e}")))?,
                    "scanned" => manifest.scanned = value.parse().map_err(|e| bad(format!("scanned: {e}")))?,
                    "source_split" => manifest.source_split = value.to_string(),
                    _ => {}
                }
            } else if !line.trim().is_empty() {
                manifest.selected.push(line.trim().to_string());
            }
        }
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Item, Relation, SceneGraph, Score};
    use serde_json::Map;

    fn with_relations(id: &str, n: u64) -> DatasetRecord {
        DatasetRecord {
            img_id: id.into(),
            name: String::new(),
            caption_ori: String::new(),
            score: Score::from_value(7.0),
            url: String::new(),
            graph: SceneGraph::new(
                vec![Item::new(0, "a", &["x"]), Item::new(1, "b", &["y"])],
                (0..n).map(|t| Relation::new(t, 0, "near", 1)).collect(),
            ),
            extra: Map::new(),
        }
    }

    #[test]
    fn boundary_is_strict() {
        let records = vec![with_relations("five", 5), with_relations("four", 4), with_relations("nine", 9)];
        let m = select_complex(&records, 4, "test");
        assert_eq!(m.selected, vec!["five", "nine"]);
        assert_eq!(m.scanned, 3);
    }

    #[test]
    fn manifest_file_round_trip() {
        let m = select_complex(&[with_relations("a", 6)], 4, "test");
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("# selected\t1\n"));
        assert_eq!(BenchManifest::read(io::Cursor::new(buf)).unwrap(), m);
    }
}
