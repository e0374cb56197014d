//! Streaming ingestion of record collections.
//!
//! Two containers are accepted: newline-delimited JSON (one record per line)
//! and a single top-level JSON array. The container is detected from the
//! first non-whitespace byte. Records are cut out of the byte stream one at a
//! time, so memory use does not depend on corpus size, and a malformed record
//! never stops the stream.

use std::io::{self, BufRead};

use thiserror::Error;

use crate::error::ParseError;
use crate::io::record::parse_record;
use crate::model::DatasetRecord;

/// How many error locations [`IngestStats`] keeps.
pub const MAX_ERROR_LOCATIONS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorLocation {
    /// Zero-based position of the record in the stream.
    pub ordinal: u64,
    /// Byte offset of the error (record start plus in-record offset).
    pub byte_offset: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub records_ok: u64,
    pub records_failed: u64,
    pub first_error_locations: Vec<ErrorLocation>,
}

impl IngestStats {
    pub fn records_seen(&self) -> u64 {
        self.records_ok + self.records_failed
    }

    pub fn record_ok(&mut self) {
        self.records_ok += 1;
    }

    pub fn record_failure(&mut self, location: ErrorLocation) {
        self.records_failed += 1;
        if self.first_error_locations.len() < MAX_ERROR_LOCATIONS {
            self.first_error_locations.push(location);
        }
    }
}

/// A record that could not be parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordError {
    pub ordinal: u64,
    pub byte_offset: u64,
    pub error: ParseError,
}

#[derive(Debug, Error)]
#[error("stream aborted after {} records: {source}", stats.records_seen())]
pub struct StreamFailure {
    pub stats: IngestStats,
    #[source]
    pub source: io::Error,
}

/// One record's raw bytes as cut from the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub ordinal: u64,
    pub offset: u64,
    pub bytes: Vec<u8>,
}

impl Chunk {
    pub fn parse(&self) -> Result<DatasetRecord, RecordError> {
        let fail = |error: ParseError| {
            let byte_offset = match &error {
                ParseError::Syntax { offset, .. } => self.offset + *offset as u64,
                _ => self.offset,
            };
            RecordError {
                ordinal: self.ordinal,
                byte_offset,
                error,
            }
        };
        let text = std::str::from_utf8(&self.bytes).map_err(|e| {
            fail(ParseError::Syntax {
                offset: e.valid_up_to(),
                message: "invalid UTF-8".into(),
            })
        })?;
        parse_record(text).map_err(fail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Container {
    Unknown,
    Lines,
    Array,
    Done,
}

/// Iterator over the raw records of a stream.
pub struct Chunks<R> {
    source: R,
    container: Container,
    position: u64,
    ordinal: u64,
}

impl<R: BufRead> Chunks<R> {
    pub fn new(source: R) -> Self {
        Chunks {
            source,
            container: Container::Unknown,
            position: 0,
            ordinal: 0,
        }
    }

    fn skip_whitespace(&mut self) -> io::Result<Option<u8>> {
        loop {
            let buf = self.source.fill_buf()?;
            if buf.is_empty() {
                return Ok(None);
            }
            match buf.iter().position(|b| !b.is_ascii_whitespace()) {
                Some(i) => {
                    let b = buf[i];
                    self.source.consume(i);
                    self.position += i as u64;
                    return Ok(Some(b));
                }
                None => {
                    let n = buf.len();
                    self.source.consume(n);
                    self.position += n as u64;
                }
            }
        }
    }

    fn next_line(&mut self) -> io::Result<Option<Chunk>> {
        loop {
            if self.skip_whitespace()?.is_none() {
                return Ok(None);
            }
            let offset = self.position;
            let mut bytes = Vec::new();
            let n = self.source.read_until(b'\n', &mut bytes)?;
            self.position += n as u64;
            while bytes.last().is_some_and(|b| b.is_ascii_whitespace()) {
                bytes.pop();
            }
            if bytes.is_empty() {
                continue;
            }
            return Ok(Some(self.emit(offset, bytes)));
        }
    }

    fn next_element(&mut self) -> io::Result<Option<Chunk>> {
        loop {
            match self.skip_whitespace()? {
                None => return Ok(None),
                Some(b']') => {
                    self.source.consume(1);
                    self.position += 1;
                    self.container = Container::Done;
                    return Ok(None);
                }
                Some(b',') => {
                    self.source.consume(1);
                    self.position += 1;
                }
                Some(_) => break,
            }
        }
        let offset = self.position;
        let mut bytes = Vec::new();
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        'scan: loop {
            let buf = self.source.fill_buf()?;
            if buf.is_empty() {
                break;
            }
            let mut used = 0;
            for &b in buf {
                if in_string {
                    used += 1;
                    bytes.push(b);
                    if escaped {
                        escaped = false;
                    } else if b == b'\\' {
                        escaped = true;
                    } else if b == b'"' {
                        in_string = false;
                    }
                    continue;
                }
                match b {
                    b',' | b']' if depth == 0 => {
                        // the delimiter stays in the buffer for the next call
                        self.source.consume(used);
                        self.position += used as u64;
                        break 'scan;
                    }
                    b'{' | b'[' => depth += 1,
                    b'}' | b']' => depth = depth.saturating_sub(1),
                    b'"' => in_string = true,
                    _ => {}
                }
                used += 1;
                bytes.push(b);
            }
            self.source.consume(used);
            self.position += used as u64;
        }
        while bytes.last().is_some_and(|b| b.is_ascii_whitespace()) {
            bytes.pop();
        }
        Ok(Some(self.emit(offset, bytes)))
    }

    fn emit(&mut self, offset: u64, bytes: Vec<u8>) -> Chunk {
        let chunk = Chunk {
            ordinal: self.ordinal,
            offset,
            bytes,
        };
        self.ordinal += 1;
        chunk
    }

    fn advance(&mut self) -> io::Result<Option<Chunk>> {
        if self.container == Container::Unknown {
            self.container = match self.skip_whitespace()? {
                Some(b'[') => {
                    self.source.consume(1);
                    self.position += 1;
                    Container::Array
                }
                Some(_) => Container::Lines,
                None => Container::Done,
            };
        }
        match self.container {
            Container::Lines => self.next_line(),
            Container::Array => self.next_element(),
            Container::Done | Container::Unknown => Ok(None),
        }
    }
}

impl<R: BufRead> Iterator for Chunks<R> {
    type Item = io::Result<Chunk>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.advance() {
            Ok(Some(chunk)) => Some(Ok(chunk)),
            Ok(None) => None,
            Err(e) => {
                self.container = Container::Done;
                Some(Err(e))
            }
        }
    }
}

/// Parses every record in `source`, handing successes to `on_record` and
/// failures to `on_error`, both in input order.
pub fn stream_records<R, F, E>(
    source: R,
    mut on_record: F,
    mut on_error: E,
) -> Result<IngestStats, StreamFailure>
where
    R: BufRead,
    F: FnMut(DatasetRecord),
    E: FnMut(RecordError),
{
    let mut stats = IngestStats::default();
    for chunk in Chunks::new(source) {
        let chunk = match chunk {
            Ok(c) => c,
            Err(source) => return Err(StreamFailure { stats, source }),
        };
        match chunk.parse() {
            Ok(record) => {
                stats.record_ok();
                on_record(record);
            }
            Err(err) => {
                stats.record_failure(ErrorLocation {
                    ordinal: err.ordinal,
                    byte_offset: err.byte_offset,
                    message: err.error.to_string(),
                });
                on_error(err);
            }
        }
    }
    Ok(stats)
}

/// Convenience wrapper that collects every parsed record.
pub fn read_all<R: BufRead>(source: R) -> Result<(Vec<DatasetRecord>, IngestStats), StreamFailure> {
    let mut records = Vec::new();
    let stats = stream_records(source, |r| records.push(r), |_| {})?;
    Ok((records, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufReader, Cursor, Read};

    fn rec(id: &str) -> String {
        format!(
            r#"{{"img_id":"{id}","name":"n","caption_ori":"c","score":"6.6","url":"u","items":[{{"item_id":0,"label":"a","attributes":["x"]}}],"relations":[]}}"#
        )
    }

    fn ids(input: &str) -> (Vec<String>, IngestStats, Vec<RecordError>) {
        let mut got = Vec::new();
        let mut errs = Vec::new();
        let stats = stream_records(
            BufReader::with_capacity(7, Cursor::new(input.as_bytes().to_vec())),
            |r| got.push(r.img_id),
            |e| errs.push(e),
        )
        .unwrap();
        (got, stats, errs)
    }

    #[test]
    fn lines_in_order() {
        let input = format!("{}\n\n{}\n{}", rec("a"), rec("b"), rec("c"));
        let (got, stats, _) = ids(&input);
        assert_eq!(got, vec!["a", "b", "c"]);
        assert_eq!(stats.records_ok, 3);
    }

    #[test]
    fn malformed_line_does_not_stop_stream() {
        let input = format!("{}\n{{\"img_id\": oops\n{}\n", rec("a"), rec("c"));
        let (got, stats, errs) = ids(&input);
        assert_eq!(got, vec!["a", "c"]);
        assert_eq!((stats.records_ok, stats.records_failed), (2, 1));
        assert_eq!(errs[0].ordinal, 1);
        let line_start = rec("a").len() as u64 + 1;
        assert_eq!(errs[0].byte_offset, line_start + 11);
        assert_eq!(stats.first_error_locations.len(), 1);
    }

    #[test]
    fn array_container_with_bad_element() {
        let bad = r#"{"img_id": "x", "url": "a" "items": [], "s": "],}"}"#;
        let input = format!("  [\n{},\n {} ,{}\n]\n", rec("a"), bad, rec("b,]"));
        let (got, stats, errs) = ids(&input);
        assert_eq!(got, vec!["a", "b,]"]);
        assert_eq!(stats.records_failed, 1);
        assert!(matches!(errs[0].error, ParseError::Syntax { .. }));
        let bad_start = input.find(bad).unwrap() as u64;
        assert_eq!(errs[0].byte_offset, bad_start + 27);
    }

    #[test]
    fn empty_sources() {
        assert_eq!(ids("").1.records_seen(), 0);
        assert_eq!(ids(" \n [ ] ").1.records_seen(), 0);
    }

    struct Broken(usize);

    impl Read for Broken {
        fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
            if self.0 == 0 {
                return Err(io::Error::other("disk gone"));
            }
            self.0 -= 1;
            let line = format!("{}\n", rec("a"));
            buf[..line.len()].copy_from_slice(line.as_bytes());
            Ok(line.len())
        }
    }

    #[test]
    fn io_failure_returns_partial_stats() {
        let failure = stream_records(BufReader::with_capacity(4096, Broken(2)), |_| {}, |_| {})
            .unwrap_err();
        assert_eq!(failure.stats.records_ok, 2);
        assert_eq!(failure.source.to_string(), "disk gone");
    }
}
