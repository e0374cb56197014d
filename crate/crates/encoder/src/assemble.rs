use std::collections::BTreeMap;

use serde::Serialize;
use sgkit_core::{Item, SceneGraph};

use crate::backend::{embed_text, EmbeddingBackend};
use crate::error::{EncoderError, Result};
use crate::gnn::{gnn_forward_traced, ForwardTrace, GnnOutput};
use crate::lower::{lower, LoweredGraph};
use crate::matrix::{add_into, scale};
use crate::params::EncoderParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Triple { triple_id: u64 },
    Single { item_id: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgEmbedding {
    pub vectors: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
}

impl SgEmbedding {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssembleOptions {
    /// Prefix subject and object labels with their attributes in triple text.
    pub include_attributes: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            include_attributes: true,
        }
    }
}

fn push_item(parts: &mut Vec<String>, item: &Item, with_attrs: bool) {
    if with_attrs {
        parts.extend(item.attributes.iter().filter(|a| !a.trim().is_empty()).cloned());
    }
    parts.push(item.label.clone());
}

/// `"{subject attributes} {subject label} {relation} {object attributes} {object label}"`.
pub fn render_triple_text(subject: &Item, relation: &str, object: &Item, opts: AssembleOptions) -> String {
    let mut parts = Vec::new();
    push_item(&mut parts, subject, opts.include_attributes);
    parts.push(relation.to_string());
    push_item(&mut parts, object, opts.include_attributes);
    parts
        .iter()
        .flat_map(|p| p.split_whitespace())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Mean of the final states of the subject and object nodes and the triple's edges.
pub fn refine_triples(lowered: &LoweredGraph, out: &GnnOutput) -> Result<BTreeMap<u64, Vec<f64>>> {
    lowered
        .triple_index
        .keys()
        .map(|&t| refine_triple(lowered, out, t).map(|v| (t, v)))
        .collect()
}

pub fn refine_triple(lowered: &LoweredGraph, out: &GnnOutput, triple_id: u64) -> Result<Vec<f64>> {
    let tn = lowered
        .triple_index
        .get(&triple_id)
        .ok_or(EncoderError::UnknownTriple(triple_id))?;
    let nodes = constituent_nodes(tn.subject, tn.object);
    let mut acc = vec![0.0; lowered.dim];
    for &n in &nodes {
        add_into(&mut acc, &out.node_states[n]);
    }
    for &k in &tn.edges {
        add_into(&mut acc, &out.edge_states[k]);
    }
    Ok(scale(&acc, 1.0 / (nodes.len() + tn.edges.len()) as f64))
}

fn constituent_nodes(subject: usize, object: usize) -> Vec<usize> {
    if subject == object {
        vec![subject]
    } else {
        vec![subject, object]
    }
}

/// Everything that depends only on the graph and the text encoder.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub lowered: LoweredGraph,
    pub triple_ids: Vec<u64>,
    pub triple_embeddings: Vec<Vec<f64>>,
    pub single_ids: Vec<u64>,
    pub single_embeddings: Vec<Vec<f64>>,
}

pub fn prepare(graph: &SceneGraph, backend: &dyn EmbeddingBackend, opts: AssembleOptions) -> Result<PreparedGraph> {
    let lowered = lower(graph, backend)?;
    let mut triple_ids = Vec::new();
    let mut triple_embeddings = Vec::new();
    for t in graph.triples()? {
        let text = render_triple_text(t.subject, t.relation, t.object, opts);
        triple_ids.push(t.triple_id);
        triple_embeddings.push(embed_text(backend, &text)?);
    }
    let mut single_ids = Vec::new();
    let mut single_embeddings = Vec::new();
    for item in graph.single_objects() {
        single_ids.push(item.item_id);
        single_embeddings.push(embed_text(backend, &item.label)?);
    }
    Ok(PreparedGraph {
        lowered,
        triple_ids,
        triple_embeddings,
        single_ids,
        single_embeddings,
    })
}

/// Forward intermediates needed by the backward pass.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub embedding: SgEmbedding,
    pub refined: Vec<Vec<f64>>,
    pub gnn: GnnOutput,
    pub trace: ForwardTrace,
}

pub fn encode_prepared(prepared: &PreparedGraph, params: &EncoderParams) -> Result<Encoded> {
    let (gnn, trace) = gnn_forward_traced(&prepared.lowered, params)?;
    let mut vectors = Vec::with_capacity(prepared.triple_ids.len() + prepared.single_ids.len());
    let mut provenance = Vec::with_capacity(vectors.capacity());
    let mut refined = Vec::with_capacity(prepared.triple_ids.len());
    for (&t, e_t) in prepared.triple_ids.iter().zip(&prepared.triple_embeddings) {
        let e_r = refine_triple(&prepared.lowered, &gnn, t)?;
        let v = e_t.iter().zip(&e_r).map(|(a, r)| a + params.alpha * r).collect();
        vectors.push(v);
        provenance.push(Provenance::Triple { triple_id: t });
        refined.push(e_r);
    }
    for (&id, e_s) in prepared.single_ids.iter().zip(&prepared.single_embeddings) {
        vectors.push(e_s.clone());
        provenance.push(Provenance::Single { item_id: id });
    }
    Ok(Encoded {
        embedding: SgEmbedding { vectors, provenance },
        refined,
        gnn,
        trace,
    })
}

/// `concat(e_t + alpha·e_r, e_s)`: triples by triple_id, then single objects by item_id.
pub fn assemble(graph: &SceneGraph, backend: &dyn EmbeddingBackend, params: &EncoderParams) -> Result<SgEmbedding> {
    assemble_with(graph, backend, params, AssembleOptions::default())
}

pub fn assemble_with(
    graph: &SceneGraph,
    backend: &dyn EmbeddingBackend,
    params: &EncoderParams,
    opts: AssembleOptions,
) -> Result<SgEmbedding> {
    let prepared = prepare(graph, backend, opts)?;
    Ok(encode_prepared(&prepared, params)?.embedding)
}
