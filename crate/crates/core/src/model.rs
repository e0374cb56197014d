//! In-memory scene graphs and dataset records.
//!
//! A [`SceneGraph`] is a list of [`Item`]s (objects with their attribute
//! strings) plus a list of [`Relation`]s between them. A [`DatasetRecord`]
//! pairs one graph with the image metadata it was annotated from.

use std::collections::BTreeSet;

use serde_json::{Map, Value};
use unicode_normalization::UnicodeNormalization;

use crate::error::ModelError;

/// One object in a scene graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub item_id: u64,
    pub label: String,
    pub attributes: Vec<String>,
    pub global_item_id: Option<u64>,
    /// Fields present in the source that this crate does not interpret.
    pub extra: Map<String, Value>,
}

impl Item {
    pub fn new(item_id: u64, label: impl Into<String>, attributes: &[&str]) -> Self {
        Item {
            item_id,
            label: label.into(),
            attributes: attributes.iter().map(|a| a.to_string()).collect(),
            global_item_id: None,
            extra: Map::new(),
        }
    }
}

/// A directed `item1 --relation--> item2` edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub triple_id: u64,
    pub item1: u64,
    pub relation: String,
    pub item2: u64,
    pub global_relation_id: Option<u64>,
    pub extra: Map<String, Value>,
}

impl Relation {
    pub fn new(triple_id: u64, item1: u64, relation: impl Into<String>, item2: u64) -> Self {
        Relation {
            triple_id,
            item1,
            relation: relation.into(),
            item2,
            global_relation_id: None,
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGraph {
    pub items: Vec<Item>,
    pub relations: Vec<Relation>,
}

/// Aesthetic score, kept as written so that serialization is lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    text: String,
    value: f64,
    quoted: bool,
}

impl Score {
    /// Parses a decimal score. `quoted` records whether the source held it as
    /// a JSON string (the published listings do) or as a bare number.
    pub fn parse(text: &str, quoted: bool) -> Option<Score> {
        let value: f64 = text.trim().parse().ok()?;
        Some(Score {
            text: text.to_string(),
            value,
            quoted,
        })
    }

    pub fn from_value(value: f64) -> Score {
        Score {
            text: format!("{value}"),
            value,
            quoted: true,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_quoted(&self) -> bool {
        self.quoted
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub img_id: String,
    pub name: String,
    pub caption_ori: String,
    pub score: Score,
    pub url: String,
    pub graph: SceneGraph,
    /// Unknown top-level fields, re-emitted after the known ones.
    pub extra: Map<String, Value>,
}

/// A relation with both endpoints resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple<'a> {
    pub triple_id: u64,
    pub subject: &'a Item,
    pub relation: &'a str,
    pub object: &'a Item,
}

impl SceneGraph {
    pub fn new(items: Vec<Item>, relations: Vec<Relation>) -> Self {
        SceneGraph { items, relations }
    }

    pub fn item(&self, item_id: u64) -> Option<&Item> {
        self.items.iter().find(|it| it.item_id == item_id)
    }

    /// Resolved triples in `triple_id` order.
    pub fn triples(&self) -> Result<Vec<Triple<'_>>, ModelError> {
        let mut relations: Vec<&Relation> = self.relations.iter().collect();
        relations.sort_by_key(|r| r.triple_id);
        relations
            .into_iter()
            .map(|r| {
                let resolve = |id: u64| {
                    self.item(id).ok_or(ModelError::DanglingReference {
                        triple_id: r.triple_id,
                        item_id: id,
                    })
                };
                Ok(Triple {
                    triple_id: r.triple_id,
                    subject: resolve(r.item1)?,
                    relation: &r.relation,
                    object: resolve(r.item2)?,
                })
            })
            .collect()
    }

    /// Items that take part in no relation, in `item_id` order.
    pub fn single_objects(&self) -> Vec<&Item> {
        let linked: BTreeSet<u64> = self
            .relations
            .iter()
            .flat_map(|r| [r.item1, r.item2])
            .collect();
        let mut singles: Vec<&Item> = self
            .items
            .iter()
            .filter(|it| !linked.contains(&it.item_id))
            .collect();
        singles.sort_by_key(|it| it.item_id);
        singles
    }

    /// Nodes plus edges: one node per item, one node per attribute string,
    /// one edge per relation record.
    pub fn annotation_length(&self) -> usize {
        let attributes: usize = self.items.iter().map(|it| it.attributes.len()).sum();
        self.items.len() + attributes + self.relations.len()
    }

    /// Returns a copy with every label, attribute and relation phrase passed
    /// through [`canonical_text`]. Ids and structure are untouched.
    pub fn canonicalize(&self) -> SceneGraph {
        SceneGraph {
            items: self
                .items
                .iter()
                .map(|it| Item {
                    label: canonical_text(&it.label),
                    attributes: it.attributes.iter().map(|a| canonical_text(a)).collect(),
                    ..it.clone()
                })
                .collect(),
            relations: self
                .relations
                .iter()
                .map(|r| Relation {
                    relation: canonical_text(&r.relation),
                    ..r.clone()
                })
                .collect(),
        }
    }
}

/// NFC-normalizes, trims, collapses internal whitespace runs to one space and
/// lowercases.
pub fn canonical_text(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    let collapsed = nfc.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.to_lowercase().nfc().collect()
}

/// Whitespace-separated words of a phrase.
pub fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split_whitespace()
}
