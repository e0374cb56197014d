use std::collections::BTreeMap;

use sgkit_core::{ModelError, SceneGraph};

use crate::backend::{embed_text, EmbeddingBackend};
use crate::error::Result;

pub const ATTRIBUTE_EDGE_PHRASE: &str = "has attribute";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSource {
    Object { item_id: u64 },
    Attribute { item_id: u64, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSource {
    Relation { triple_id: u64, word_index: usize },
    Attribute { item_id: u64, index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub source: NodeSource,
    pub feature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub feature: Vec<f64>,
    pub source: EdgeSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleNodes {
    pub subject: usize,
    pub object: usize,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoweredGraph {
    pub dim: usize,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub triple_index: BTreeMap<u64, TripleNodes>,
}

impl LoweredGraph {
    /// `(neighbor, edge)` pairs for each node, both directions, in edge order.
    pub fn incidence(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            inc[e.dst].push((e.src, k));
            inc[e.src].push((e.dst, k));
        }
        inc
    }
}

/// Objects by item_id, then attributes, then relation words by triple_id.
pub fn lower(graph: &SceneGraph, backend: &dyn EmbeddingBackend) -> Result<LoweredGraph> {
    let mut items: Vec<_> = graph.items.iter().collect();
    items.sort_by_key(|i| i.item_id);

    let mut nodes = Vec::new();
    let mut object_node = BTreeMap::new();
    for item in &items {
        object_node.insert(item.item_id, nodes.len());
        nodes.push(Node {
            source: NodeSource::Object { item_id: item.item_id },
            feature: embed_text(backend, &item.label)?,
        });
    }

    let mut edges = Vec::new();
    let attr_feature = if items.iter().any(|i| !i.attributes.is_empty()) {
        Some(embed_text(backend, ATTRIBUTE_EDGE_PHRASE)?)
    } else {
        None
    };
    for item in &items {
        for (index, attr) in item.attributes.iter().enumerate() {
            let node = nodes.len();
            nodes.push(Node {
                source: NodeSource::Attribute { item_id: item.item_id, index },
                feature: embed_text(backend, attr)?,
            });
            edges.push(Edge {
                src: node,
                dst: object_node[&item.item_id],
                feature: attr_feature.clone().unwrap_or_default(),
                source: EdgeSource::Attribute { item_id: item.item_id, index },
            });
        }
    }

    let mut relations: Vec<_> = graph.relations.iter().collect();
    relations.sort_by_key(|r| r.triple_id);
    let mut triple_index = BTreeMap::new();
    for rel in relations {
        let endpoint = |id: u64| {
            object_node.get(&id).copied().ok_or(ModelError::DanglingReference {
                triple_id: rel.triple_id,
                item_id: id,
            })
        };
        let subject = endpoint(rel.item1)?;
        let object = endpoint(rel.item2)?;
        let mut edge_ids = Vec::new();
        for (word_index, word) in rel.relation.split_whitespace().enumerate() {
            edge_ids.push(edges.len());
            edges.push(Edge {
                src: subject,
                dst: object,
                feature: embed_text(backend, word)?,
                source: EdgeSource::Relation { triple_id: rel.triple_id, word_index },
            });
        }
        triple_index.insert(
            rel.triple_id,
            TripleNodes {
                subject,
                object,
                edges: edge_ids,
            },
        );
    }

    Ok(LoweredGraph {
        dim: backend.dim(),
        nodes,
        edges,
        triple_index,
    })
}
