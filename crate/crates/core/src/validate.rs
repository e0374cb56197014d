//! Rule-based validation of graphs and records.
//!
//! Every rule has a stable id. Malformed content is reported, never raised:
//! the caller decides what to do with a [`ValidationReport`].

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::model::{canonical_text, DatasetRecord, SceneGraph};

/// Minimum aesthetic score of the source subset; strict mode rejects records
/// at or below it.
pub const MIN_AESTHETIC_SCORE: f64 = 6.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Construction rules of the dataset: every item carries an attribute and
    /// scores exceed [`MIN_AESTHETIC_SCORE`].
    Strict,
    /// Accept whatever is structurally sound.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

/// Where a finding sits. Orders as record fields, then items, then relations,
/// each by position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Record { field: &'static str },
    Item { index: usize, item_id: u64 },
    Relation { index: usize, triple_id: u64 },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Record { field } => write!(f, "record.{field}"),
            Location::Item { index, item_id } => write!(f, "items[{index}](item_id={item_id})"),
            Location::Relation { index, triple_id } => {
                write!(f, "relations[{index}](triple_id={triple_id})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Finding {
    pub rule: &'static str,
    pub location: Location,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.errors
            .iter()
            .chain(&self.warnings)
            .any(|f| f.rule == rule)
    }

    fn push(&mut self, severity: Severity, rule: &'static str, location: Location, message: String) {
        let finding = Finding {
            rule,
            location,
            message,
        };
        match severity {
            Severity::Error => self.errors.push(finding),
            Severity::Warning => self.warnings.push(finding),
        }
    }

    fn finish(mut self) -> Self {
        let key = |f: &Finding| (f.location.clone(), f.rule, f.message.clone());
        self.errors.sort_by_key(key);
        self.warnings.sort_by_key(key);
        self
    }

    /// One line per finding: `severity<TAB>rule<TAB>location<TAB>message`.
    pub fn render_lines(&self) -> Vec<String> {
        let line = |sev: &str, f: &Finding| {
            format!("{sev}\t{}\t{}\t{}", f.rule, f.location, f.message)
        };
        self.errors
            .iter()
            .map(|f| line("error", f))
            .chain(self.warnings.iter().map(|f| line("warning", f)))
            .collect()
    }
}

/// Validates the graph and the record-level fields.
pub fn validate(record: &DatasetRecord, mode: Mode) -> ValidationReport {
    let mut report = ValidationReport::default();
    let field = |field| Location::Record { field };

    if record.img_id.trim().is_empty() {
        report.push(
            Severity::Error,
            "empty-img-id",
            field("img_id"),
            "img_id is empty".into(),
        );
    }
    let score = record.score.value();
    if !score.is_finite() {
        report.push(
            Severity::Error,
            "score-not-finite",
            field("score"),
            format!("score {:?} is not a finite decimal", record.score.text()),
        );
    } else if mode == Mode::Strict && score <= MIN_AESTHETIC_SCORE {
        report.push(
            Severity::Error,
            "score-below-threshold",
            field("score"),
            format!("score {} is not above {MIN_AESTHETIC_SCORE}", record.score.text()),
        );
    }

    check_graph(&record.graph, mode, &mut report);
    report.finish()
}

/// Validates a bare graph.
pub fn validate_graph(graph: &SceneGraph, mode: Mode) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_graph(graph, mode, &mut report);
    report.finish()
}

fn check_graph(graph: &SceneGraph, mode: Mode, report: &mut ValidationReport) {
    let mut id_count: HashMap<u64, usize> = HashMap::new();
    for item in &graph.items {
        *id_count.entry(item.item_id).or_default() += 1;
    }

    for (index, item) in graph.items.iter().enumerate() {
        let loc = || Location::Item {
            index,
            item_id: item.item_id,
        };
        if id_count[&item.item_id] > 1 {
            report.push(
                Severity::Error,
                "dup-item-id",
                loc(),
                format!("item_id {} appears {} times", item.item_id, id_count[&item.item_id]),
            );
        }
        if item.label.trim().is_empty() {
            report.push(Severity::Error, "empty-label", loc(), "label is empty".into());
        }
        if item.attributes.is_empty() {
            let severity = match mode {
                Mode::Strict => Severity::Error,
                Mode::Lenient => Severity::Warning,
            };
            report.push(
                severity,
                "no-attribute",
                loc(),
                format!("item {:?} has no attribute", item.label),
            );
        }
        let mut seen = HashSet::new();
        for (ai, attr) in item.attributes.iter().enumerate() {
            if attr.trim().is_empty() {
                report.push(
                    Severity::Error,
                    "empty-attribute",
                    loc(),
                    format!("attribute {ai} is empty"),
                );
            } else if !seen.insert(canonical_text(attr)) {
                report.push(
                    Severity::Warning,
                    "dup-attribute",
                    loc(),
                    format!("attribute {attr:?} repeated"),
                );
            }
        }
    }

    let mut triple_count: HashMap<u64, usize> = HashMap::new();
    for rel in &graph.relations {
        *triple_count.entry(rel.triple_id).or_default() += 1;
    }
    let mut seen_triples = HashSet::new();
    for (index, rel) in graph.relations.iter().enumerate() {
        let loc = || Location::Relation {
            index,
            triple_id: rel.triple_id,
        };
        if triple_count[&rel.triple_id] > 1 {
            report.push(
                Severity::Error,
                "dup-triple-id",
                loc(),
                format!("triple_id {} appears {} times", rel.triple_id, triple_count[&rel.triple_id]),
            );
        }
        if rel.relation.trim().is_empty() {
            report.push(Severity::Error, "empty-relation", loc(), "relation is empty".into());
        }
        for (role, id) in [("item1", rel.item1), ("item2", rel.item2)] {
            if !id_count.contains_key(&id) {
                report.push(
                    Severity::Error,
                    "dangling-ref",
                    loc(),
                    format!("{role}={id} does not name an item"),
                );
            }
        }
        if rel.item1 == rel.item2 {
            report.push(
                Severity::Warning,
                "self-relation",
                loc(),
                format!("item {} relates to itself", rel.item1),
            );
        }
        if !seen_triples.insert((rel.item1, canonical_text(&rel.relation), rel.item2)) {
            report.push(
                Severity::Warning,
                "dup-triple",
                loc(),
                format!("({}, {:?}, {}) repeated", rel.item1, rel.relation, rel.item2),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Item, Relation, Score};
    use serde_json::Map;

    fn record(graph: SceneGraph, score: &str) -> DatasetRecord {
        DatasetRecord {
            img_id: "1".into(),
            name: "n".into(),
            caption_ori: "c".into(),
            score: Score::parse(score, true).unwrap(),
            url: "u".into(),
            graph,
            extra: Map::new(),
        }
    }

    #[test]
    fn duplicate_item_ids_are_errors() {
        let g = SceneGraph::new(
            vec![Item::new(0, "a", &["x"]), Item::new(0, "b", &["y"])],
            vec![],
        );
        let r = validate_graph(&g, Mode::Lenient);
        assert!(!r.is_accepted());
        assert_eq!(r.errors.iter().filter(|f| f.rule == "dup-item-id").count(), 2);
    }

    #[test]
    fn dangling_reference_is_error() {
        let g = SceneGraph::new(
            vec![Item::new(0, "a", &["x"])],
            vec![Relation::new(0, 0, "near", 7)],
        );
        let r = validate_graph(&g, Mode::Lenient);
        assert!(r.errors.iter().any(|f| f.rule == "dangling-ref"));
    }

    #[test]
    fn missing_attribute_depends_on_mode() {
        let g = SceneGraph::new(vec![Item::new(0, "a", &[])], vec![]);
        let strict = validate_graph(&g, Mode::Strict);
        assert_eq!(strict.errors[0].rule, "no-attribute");
        let lenient = validate_graph(&g, Mode::Lenient);
        assert!(lenient.is_accepted());
        assert_eq!(lenient.warnings[0].rule, "no-attribute");
    }

    #[test]
    fn self_and_duplicate_triples_warn() {
        let g = SceneGraph::new(
            vec![Item::new(0, "a", &["x"]), Item::new(1, "b", &["x", "X "])],
            vec![
                Relation::new(0, 0, "touch", 0),
                Relation::new(1, 0, "near", 1),
                Relation::new(2, 0, "Near", 1),
            ],
        );
        let r = validate_graph(&g, Mode::Strict);
        assert!(r.is_accepted());
        assert!(r.has_rule("self-relation"));
        assert!(r.has_rule("dup-triple"));
        assert!(r.has_rule("dup-attribute"));
    }

    #[test]
    fn score_rules() {
        let g = SceneGraph::new(vec![Item::new(0, "a", &["x"])], vec![]);
        assert!(validate(&record(g.clone(), "6.72"), Mode::Strict).is_accepted());
        let low = record(g.clone(), "5.1");
        assert!(validate(&low, Mode::Lenient).is_accepted());
        assert!(validate(&low, Mode::Strict).has_rule("score-below-threshold"));
        let nan = record(g, "NaN");
        assert!(validate(&nan, Mode::Lenient).has_rule("score-not-finite"));
    }

    #[test]
    fn findings_are_ordered_by_location_then_rule() {
        let g = SceneGraph::new(
            vec![
                Item::new(3, " ", &[]),
                Item::new(3, "b", &[]),
            ],
            vec![Relation::new(0, 9, "", 3)],
        );
        let r = validate_graph(&g, Mode::Strict);
        let keys: Vec<_> = r.errors.iter().map(|f| (f.location.clone(), f.rule)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(r, validate_graph(&g, Mode::Strict));
        assert_eq!(r.render_lines()[0].split('\t').nth(1), Some("dup-item-id"));
    }
}
