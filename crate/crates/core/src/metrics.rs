//! Multiset intersection-over-union between scene-graph derived lists.
//!
//! Three lists come out of a graph: entity labels, relation phrases, and
//! `(subject, relation, object)` label triples. Attributes are not part of
//! any of them. Strings are compared after [`canonical_text`].

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::ModelError;
use crate::model::{canonical_text, SceneGraph};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Multiset<T: Ord>(BTreeMap<T, usize>);

impl<T: Ord> Multiset<T> {
    pub fn new() -> Self {
        Multiset(BTreeMap::new())
    }

    pub fn insert(&mut self, value: T) {
        *self.0.entry(value).or_default() += 1;
    }

    pub fn count(&self, value: &T) -> usize {
        self.0.get(value).copied().unwrap_or(0)
    }

    /// Total number of elements, with multiplicity.
    pub fn len(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, usize)> {
        self.0.iter().map(|(k, &v)| (k, v))
    }
}

impl<T: Ord> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for v in iter {
            m.insert(v);
        }
        m
    }
}

/// Σ min(count_a, count_b) / Σ max(count_a, count_b). Two empty multisets
/// score 1, exactly one empty scores 0.
pub fn iou<T: Ord>(a: &Multiset<T>, b: &Multiset<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (k, ca) in a.iter() {
        let cb = b.count(k);
        inter += ca.min(cb);
        union += ca.max(cb);
    }
    for (k, cb) in b.iter() {
        if a.count(k) == 0 {
            union += cb;
        }
    }
    inter as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleKey {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl TripleKey {
    pub fn new(subject: &str, relation: &str, object: &str) -> Self {
        TripleKey {
            subject: canonical_text(subject),
            relation: canonical_text(relation),
            object: canonical_text(object),
        }
    }
}

pub fn entity_list(graph: &SceneGraph) -> Multiset<String> {
    graph.items.iter().map(|it| canonical_text(&it.label)).collect()
}

pub fn relation_list(graph: &SceneGraph) -> Multiset<String> {
    graph
        .relations
        .iter()
        .map(|r| canonical_text(&r.relation))
        .collect()
}

pub fn sg_list(graph: &SceneGraph) -> Result<Multiset<TripleKey>, ModelError> {
    Ok(graph
        .triples()?
        .into_iter()
        .map(|t| TripleKey::new(&t.subject.label, t.relation, &t.object.label))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct IoUReport {
    pub sg_iou: f64,
    pub entity_iou: f64,
    pub relation_iou: f64,
}

impl IoUReport {
    /// Component-wise mean; `None` for an empty slice.
    pub fn mean(reports: &[IoUReport]) -> Option<IoUReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let sum = |f: fn(&IoUReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(IoUReport {
            sg_iou: sum(|r| r.sg_iou),
            entity_iou: sum(|r| r.entity_iou),
            relation_iou: sum(|r| r.relation_iou),
        })
    }
}

pub fn iou_report(predicted: &SceneGraph, reference: &SceneGraph) -> Result<IoUReport, ModelError> {
    Ok(IoUReport {
        sg_iou: iou(&sg_list(predicted)?, &sg_list(reference)?),
        entity_iou: iou(&entity_list(predicted), &entity_list(reference)),
        relation_iou: iou(&relation_list(predicted), &relation_list(reference)),
    })
}
