//! Corpus statistics: object counts, annotation lengths, word-count
//! histograms and term frequency tables.
//!
//! Everything is accumulated in exact integer counters so that shards can be
//! merged in any order with identical results. Means and standard deviations
//! are derived from the merged sums; the standard deviation is the population
//! one.

pub mod text;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::StatsError;
use crate::model::{canonical_text, words, DatasetRecord, Item, SceneGraph};
use text::{
    CapitalizationHeuristic, NounExtractor, ProperNounClassifier, ProperNounContext,
    StopwordNounExtractor, Tokenizer, WordTokenizer,
};

/// Count, sum and sum of squares of non-negative integer observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Moments {
    pub n: u64,
    pub sum: u128,
    pub sum_sq: u128,
}

impl Moments {
    pub fn push(&mut self, x: u64) {
        self.n += 1;
        self.sum += x as u128;
        self.sum_sq += (x as u128) * (x as u128);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean_std(&self) -> Option<MeanStd> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as u128;
        // n * sum_sq - sum^2 is exact and non-negative (Cauchy-Schwarz)
        let spread = n * self.sum_sq - self.sum * self.sum;
        let mean = self.sum as f64 / self.n as f64;
        let var = spread as f64 / (n * n) as f64;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Lower edges of half-open bins; the last bin is unbounded above.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinEdges(Vec<u64>);

impl BinEdges {
    pub fn new(edges: Vec<u64>) -> Result<Self, StatsError> {
        if edges.first() != Some(&0) {
            return Err(StatsError::InvalidBins("edges must start at 0".into()));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StatsError::InvalidBins("edges must be strictly increasing".into()));
        }
        Ok(BinEdges(edges))
    }

    /// Parses `0,5,10,20`.
    pub fn parse(text: &str) -> Result<Self, StatsError> {
        let edges = text
            .split(',')
            .map(|s| s.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| StatsError::InvalidBins(format!("{text:?}: {e}")))?;
        BinEdges::new(edges)
    }

    pub fn object_words() -> Self {
        BinEdges(vec![0, 5, 10, 20])
    }

    pub fn graph_words() -> Self {
        BinEdges(vec![0, 10, 20, 30])
    }

    pub fn edges(&self) -> &[u64] {
        &self.0
    }

    pub fn bin_of(&self, x: u64) -> usize {
        self.0.partition_point(|&lo| lo <= x) - 1
    }

    pub fn label(&self, bin: usize) -> String {
        match self.0.get(bin + 1) {
            Some(hi) => format!("[{}-{})", self.0[bin], hi),
            None => format!("[{}-inf)", self.0[bin]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    edges: BinEdges,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(edges: BinEdges) -> Self {
        let counts = vec![0; edges.0.len()];
        Histogram { edges, counts }
    }

    pub fn push(&mut self, x: u64) {
        let b = self.edges.bin_of(x);
        self.counts[b] += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.edges, other.edges, "merging histograms with different bins");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bins(&self) -> Vec<HistogramBin> {
        let total = self.total();
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &count)| HistogramBin {
                bin: self.edges.label(i),
                lower: self.edges.0[i],
                upper: self.edges.0.get(i + 1).copied(),
                count,
                percent: if total == 0 { 0.0 } else { count as f64 * 100.0 / total as f64 },
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin: String,
    pub lower: u64,
    pub upper: Option<u64>,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermFrequency {
    pub term: String,
    pub count: u64,
    pub percent: f64,
}

/// Occurrence counter over canonicalized terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermCounter {
    counts: HashMap<String, u64>,
    total: u64,
}

impl TermCounter {
    pub fn push(&mut self, term: &str) {
        *self.counts.entry(canonical_text(term)).or_default() += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &TermCounter) {
        for (t, c) in &other.counts {
            *self.counts.entry(t.clone()).or_default() += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    /// Highest counts first, ties in lexicographic order.
    pub fn top_k(&self, k: usize) -> Vec<TermFrequency> {
        let mut all: Vec<(&String, &u64)> = self.counts.iter().collect();
        all.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        all.into_iter()
            .take(k)
            .map(|(term, &count)| TermFrequency {
                term: term.clone(),
                count,
                percent: count as f64 * 100.0 / self.total as f64,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Relation,
    Attribute,
}

/// Words in a label plus words across its attributes.
pub fn object_word_count(item: &Item) -> u64 {
    let attr: usize = item.attributes.iter().map(|a| words(a).count()).sum();
    (words(&item.label).count() + attr) as u64
}

/// Object word counts summed over items, plus relation phrase words.
pub fn graph_word_count(graph: &SceneGraph) -> u64 {
    let objects: u64 = graph.items.iter().map(object_word_count).sum();
    let relations: usize = graph.relations.iter().map(|r| words(&r.relation).count()).sum();
    objects + relations as u64
}

/// Pluggable pieces of the caption side.
#[derive(Clone)]
pub struct StatsConfig {
    pub object_bins: BinEdges,
    pub graph_bins: BinEdges,
    pub tokenizer: Arc<dyn Tokenizer>,
    pub nouns: Arc<dyn NounExtractor>,
    pub proper: Arc<dyn ProperNounClassifier>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            object_bins: BinEdges::object_words(),
            graph_bins: BinEdges::graph_words(),
            tokenizer: Arc::new(WordTokenizer),
            nouns: Arc::new(StopwordNounExtractor::default()),
            proper: Arc::new(CapitalizationHeuristic::default()),
        }
    }
}

/// Mergeable single-pass accumulator behind [`StatsReport`].
#[derive(Clone)]
pub struct StatsAccumulator {
    config: StatsConfig,
    pub objects: Moments,
    pub graph_length: Moments,
    pub caption_length: Moments,
    pub caption_nouns: Moments,
    pub caption_nouns_no_proper: Moments,
    pub object_words: Histogram,
    pub graph_words: Histogram,
    pub relations: TermCounter,
    pub attributes: TermCounter,
}

impl StatsAccumulator {
    pub fn new(config: StatsConfig) -> Self {
        StatsAccumulator {
            object_words: Histogram::new(config.object_bins.clone()),
            graph_words: Histogram::new(config.graph_bins.clone()),
            config,
            objects: Moments::default(),
            graph_length: Moments::default(),
            caption_length: Moments::default(),
            caption_nouns: Moments::default(),
            caption_nouns_no_proper: Moments::default(),
            relations: TermCounter::default(),
            attributes: TermCounter::default(),
        }
    }

    pub fn push(&mut self, record: &DatasetRecord) {
        let graph = &record.graph;
        self.objects.push(graph.items.len() as u64);
        self.graph_length.push(graph.annotation_length() as u64);
        self.caption_length
            .push(self.config.tokenizer.count(&record.caption_ori) as u64);

        let nouns = self.config.nouns.nouns(&record.caption_ori);
        let proper = nouns
            .iter()
            .filter(|t| {
                self.config.proper.is_proper(
                    t.text,
                    ProperNounContext {
                        sentence_start: t.sentence_start,
                    },
                )
            })
            .count();
        self.caption_nouns.push(nouns.len() as u64);
        self.caption_nouns_no_proper.push((nouns.len() - proper) as u64);

        for item in &graph.items {
            self.object_words.push(object_word_count(item));
            for attr in &item.attributes {
                self.attributes.push(attr);
            }
        }
        self.graph_words.push(graph_word_count(graph));
        for rel in &graph.relations {
            self.relations.push(&rel.relation);
        }
    }

    pub fn merge(&mut self, other: &StatsAccumulator) {
        self.objects.merge(&other.objects);
        self.graph_length.merge(&other.graph_length);
        self.caption_length.merge(&other.caption_length);
        self.caption_nouns.merge(&other.caption_nouns);
        self.caption_nouns_no_proper.merge(&other.caption_nouns_no_proper);
        self.object_words.merge(&other.object_words);
        self.graph_words.merge(&other.graph_words);
        self.relations.merge(&other.relations);
        self.attributes.merge(&other.attributes);
    }

    pub fn finish(&self, top_k: usize) -> Result<StatsReport, StatsError> {
        if top_k == 0 {
            return Err(StatsError::ZeroK);
        }
        let objects = self.objects.mean_std().ok_or(StatsError::EmptyCorpus)?;
        let ms = |m: &Moments| m.mean_std().expect("same count as objects");
        Ok(StatsReport {
            n_records: self.objects.n,
            objects_mean_std: objects,
            // scene-graph labels are common nouns by construction
            objects_noproper_mean_std: objects,
            sg_length_mean_std: ms(&self.graph_length),
            caption_length_mean_std: ms(&self.caption_length),
            caption_objects_mean_std: ms(&self.caption_nouns),
            caption_objects_noproper_mean_std: ms(&self.caption_nouns_no_proper),
            n_objects: self.object_words.total(),
            object_word_hist: self.object_words.bins(),
            sg_word_hist: self.graph_words.bins(),
            n_relations: self.relations.total(),
            n_attributes: self.attributes.total(),
            top_relations: self.relations.top_k(top_k),
            top_attributes: self.attributes.top_k(top_k),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub n_records: u64,
    pub objects_mean_std: MeanStd,
    pub objects_noproper_mean_std: MeanStd,
    pub sg_length_mean_std: MeanStd,
    pub caption_length_mean_std: MeanStd,
    pub caption_objects_mean_std: MeanStd,
    pub caption_objects_noproper_mean_std: MeanStd,
    pub n_objects: u64,
    pub object_word_hist: Vec<HistogramBin>,
    pub sg_word_hist: Vec<HistogramBin>,
    pub n_relations: u64,
    pub n_attributes: u64,
    pub top_relations: Vec<TermFrequency>,
    pub top_attributes: Vec<TermFrequency>,
}

impl StatsReport {
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let ms = |m: &MeanStd| format!("{:.2} ± {:.2}", m.mean, m.std);
        let _ = writeln!(s, "records                      {}", self.n_records);
        let _ = writeln!(s, "objects per record (SG)      {}", ms(&self.objects_mean_std));
        let _ = writeln!(s, "  w/o proper nouns           {}", ms(&self.objects_noproper_mean_std));
        let _ = writeln!(s, "objects per caption          {}", ms(&self.caption_objects_mean_std));
        let _ = writeln!(s, "  w/o proper nouns           {}", ms(&self.caption_objects_noproper_mean_std));
        let _ = writeln!(s, "SG length (nodes + edges)    {}", ms(&self.sg_length_mean_std));
        let _ = writeln!(s, "caption length (tokens)      {}", ms(&self.caption_length_mean_std));
        let hist = |s: &mut String, title: &str, bins: &[HistogramBin]| {
            let _ = writeln!(s, "\n{title}");
            for b in bins {
                let _ = writeln!(s, "  {:<12} {:>10} {:>7.2}%", b.bin, b.count, b.percent);
            }
        };
        hist(&mut s, "words per object", &self.object_word_hist);
        hist(&mut s, "words per scene graph", &self.sg_word_hist);
        let terms = |s: &mut String, title: &str, total: u64, terms: &[TermFrequency]| {
            let _ = writeln!(s, "\n{title} (of {total})");
            for t in terms {
                let _ = writeln!(s, "  {:<24} {:>10} {:>7.2}%", t.term, t.count, t.percent);
            }
        };
        terms(&mut s, "top relations", self.n_relations, &self.top_relations);
        terms(&mut s, "top attributes", self.n_attributes, &self.top_attributes);
        s
    }
}

/// Mean/std of items per record; the second value excludes proper nouns and
/// equals the first for scene graphs.
pub fn object_count_stats(records: &[DatasetRecord]) -> Result<(MeanStd, MeanStd), StatsError> {
    let mut m = Moments::default();
    for r in records {
        m.push(r.graph.items.len() as u64);
    }
    let stats = m.mean_std().ok_or(StatsError::EmptyCorpus)?;
    Ok((stats, stats))
}

/// `(sg_length, caption_length)` mean/std.
pub fn length_stats(
    records: &[DatasetRecord],
    tokenizer: &dyn Tokenizer,
) -> Result<(MeanStd, MeanStd), StatsError> {
    let mut graph = Moments::default();
    let mut caption = Moments::default();
    for r in records {
        graph.push(r.graph.annotation_length() as u64);
        caption.push(tokenizer.count(&r.caption_ori) as u64);
    }
    Ok((
        graph.mean_std().ok_or(StatsError::EmptyCorpus)?,
        caption.mean_std().ok_or(StatsError::EmptyCorpus)?,
    ))
}

/// `(object histogram, scene-graph histogram)`.
pub fn word_histograms(
    records: &[DatasetRecord],
    object_bins: &BinEdges,
    graph_bins: &BinEdges,
) -> (Histogram, Histogram) {
    let mut objects = Histogram::new(object_bins.clone());
    let mut graphs = Histogram::new(graph_bins.clone());
    for r in records {
        for item in &r.graph.items {
            objects.push(object_word_count(item));
        }
        graphs.push(graph_word_count(&r.graph));
    }
    (objects, graphs)
}

pub fn top_k_terms(
    records: &[DatasetRecord],
    kind: TermKind,
    k: usize,
) -> Result<Vec<TermFrequency>, StatsError> {
    if k == 0 {
        return Err(StatsError::ZeroK);
    }
    let mut counter = TermCounter::default();
    for r in records {
        match kind {
            TermKind::Relation => r.graph.relations.iter().for_each(|x| counter.push(&x.relation)),
            TermKind::Attribute => r
                .graph
                .items
                .iter()
                .flat_map(|it| &it.attributes)
                .for_each(|a| counter.push(a)),
        }
    }
    Ok(counter.top_k(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Relation, Score};
    use serde_json::Map;

    fn record(items: Vec<Item>, relations: Vec<Relation>, caption: &str) -> DatasetRecord {
        DatasetRecord {
            img_id: "x".into(),
            name: String::new(),
            caption_ori: caption.into(),
            score: Score::from_value(6.6),
            url: String::new(),
            graph: SceneGraph::new(items, relations),
            extra: Map::new(),
        }
    }

    fn with_items(n: u64) -> DatasetRecord {
        record((0..n).map(|i| Item::new(i, "a", &["b"])).collect(), vec![], "")
    }

    #[test]
    fn object_counts() {
        let (m, p) = object_count_stats(&[with_items(3), with_items(5)]).unwrap();
        assert_eq!((m.mean, m.std), (4.0, 1.0));
        assert_eq!(m, p);
        let (single, _) = object_count_stats(&[with_items(7)]).unwrap();
        assert_eq!(single.std, 0.0);
        assert_eq!(object_count_stats(&[]), Err(StatsError::EmptyCorpus));
    }

    #[test]
    fn lengths() {
        let r = record(
            vec![Item::new(0, "car", &["red"]), Item::new(1, "road", &["wet"])],
            vec![Relation::new(0, 0, "parked on", 1)],
            "a red car",
        );
        let (sg, cap) = length_stats(&[r], &WordTokenizer).unwrap();
        assert_eq!(sg.mean, 5.0);
        assert_eq!(cap.mean, 3.0);
    }

    #[test]
    fn object_word_bins() {
        let person = Item::new(0, "person", &["young", "female"]);
        assert_eq!(object_word_count(&person), 3);
        let bins = BinEdges::object_words();
        assert_eq!(bins.bin_of(3), 0);
        assert_eq!(bins.bin_of(5), 1);
        assert_eq!(bins.bin_of(19), 2);
        assert_eq!(bins.bin_of(20), 3);
        assert_eq!(bins.bin_of(10_000), 3);
        assert_eq!(bins.label(3), "[20-inf)");
    }

    #[test]
    fn bin_edges_validation() {
        assert!(BinEdges::parse("0,5,10,20").is_ok());
        assert!(BinEdges::parse("1,5").is_err());
        assert!(BinEdges::parse("0,5,5").is_err());
        assert!(BinEdges::parse("0,x").is_err());
    }

    #[test]
    fn top_terms_with_ties() {
        let r = record(
            vec![Item::new(0, "a", &["b"]), Item::new(1, "c", &["d"])],
            vec![
                Relation::new(0, 0, "holding", 1),
                Relation::new(1, 0, "Holding", 1),
                Relation::new(2, 1, "riding", 0),
            ],
            "",
        );
        let top = top_k_terms(std::slice::from_ref(&r), TermKind::Relation, 5).unwrap();
        assert_eq!(top.len(), 2);
        assert_eq!((top[0].term.as_str(), top[0].count), ("holding", 2));
        assert!((top[0].percent - 66.666_666_666).abs() < 1e-6);
        assert_eq!((top[1].term.as_str(), top[1].count), ("riding", 1));
        let attrs = top_k_terms(&[r], TermKind::Attribute, 1).unwrap();
        assert_eq!(attrs[0].term, "b");
        assert_eq!(top_k_terms(&[], TermKind::Attribute, 0), Err(StatsError::ZeroK));
    }

    #[test]
    fn sharded_merge_matches_sequential() {
        let records: Vec<DatasetRecord> = (0..9).map(|n| with_items(n % 4 + 1)).collect();
        let mut whole = StatsAccumulator::new(StatsConfig::default());
        records.iter().for_each(|r| whole.push(r));
        let mut a = StatsAccumulator::new(StatsConfig::default());
        let mut b = StatsAccumulator::new(StatsConfig::default());
        records[..4].iter().for_each(|r| a.push(r));
        records[4..].iter().for_each(|r| b.push(r));
        b.merge(&a);
        assert_eq!(whole.finish(3).unwrap(), b.finish(3).unwrap());
    }

    #[test]
    fn caption_proper_nouns_are_excluded() {
        let r = record(vec![Item::new(0, "a", &["b"])], vec![], "Sunset over Yosemite valley");
        let mut acc = StatsAccumulator::new(StatsConfig::default());
        acc.push(&r);
        let report = acc.finish(1).unwrap();
        assert_eq!(report.caption_objects_mean_std.mean, 3.0);
        assert_eq!(report.caption_objects_noproper_mean_std.mean, 2.0);
        assert!(report.render_table().contains("top relations (of 0)"));
    }
}
