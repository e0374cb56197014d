use crate::error::{EncoderError, Result};
use crate::lower::LoweredGraph;
use crate::matrix::{add_into, scale};
use crate::params::EncoderParams;

#[derive(Debug, Clone, PartialEq)]
pub struct GnnOutput {
    pub node_states: Vec<Vec<f64>>,
    /// Edge states are not updated; they equal the lowered edge features.
    pub edge_states: Vec<Vec<f64>>,
}

/// Per-node intermediates of one round; `None` for isolated nodes.
#[derive(Debug, Clone)]
struct NodeStep {
    input: Vec<f64>,
    aggregate: Vec<f64>,
    activation: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    incidence: Vec<Vec<(usize, usize)>>,
    steps: Vec<Vec<Option<NodeStep>>>,
}

fn check_dims(lowered: &LoweredGraph, params: &EncoderParams) -> Result<()> {
    params.check()?;
    if lowered.dim != params.dim {
        return Err(EncoderError::Dimension(format!(
            "graph features have dim {} but params expect {}",
            lowered.dim, params.dim
        )));
    }
    let bad = lowered.nodes.iter().map(|n| n.feature.len()).chain(lowered.edges.iter().map(|e| e.feature.len()));
    for len in bad {
        if len != params.dim {
            return Err(EncoderError::Dimension(format!("feature of length {len}, expected {}", params.dim)));
        }
    }
    Ok(())
}

pub fn gnn_forward(lowered: &LoweredGraph, params: &EncoderParams) -> Result<GnnOutput> {
    gnn_forward_traced(lowered, params).map(|(out, _)| out)
}

/// Residual mean-aggregation message passing.
///
/// Per round, for a node `v` with incident edges `(u, k)` in either direction:
/// `a = W_msg·mean([h_u; f_k]) + b_msg` and `h_v ← h_v + tanh(W_upd·a + b_upd)`.
/// The mean is taken over the concatenated inputs, which equals the mean of
/// the per-edge messages since the message map is affine.
pub fn gnn_forward_traced(
    lowered: &LoweredGraph,
    params: &EncoderParams,
) -> Result<(GnnOutput, ForwardTrace)> {
    check_dims(lowered, params)?;
    let d = params.dim;
    let incidence = lowered.incidence();
    let mut states: Vec<Vec<f64>> = lowered.nodes.iter().map(|n| n.feature.clone()).collect();
    let mut steps = Vec::with_capacity(params.layers.len());

    for layer in &params.layers {
        let mut next = states.clone();
        let mut layer_steps = Vec::with_capacity(states.len());
        for (v, inc) in incidence.iter().enumerate() {
            if inc.is_empty() {
                layer_steps.push(None);
                continue;
            }
            let mut input = vec![0.0; 2 * d];
            for &(u, k) in inc {
                add_into(&mut input[..d], &states[u]);
                add_into(&mut input[d..], &lowered.edges[k].feature);
            }
            let input = scale(&input, 1.0 / inc.len() as f64);
            let mut aggregate = layer.msg_weight.mul_vec(&input);
            add_into(&mut aggregate, &layer.msg_bias);
            let mut activation = layer.upd_weight.mul_vec(&aggregate);
            add_into(&mut activation, &layer.upd_bias);
            activation.iter_mut().for_each(|z| *z = z.tanh());
            add_into(&mut next[v], &activation);
            layer_steps.push(Some(NodeStep {
                input,
                aggregate,
                activation,
            }));
        }
        states = next;
        steps.push(layer_steps);
    }

    let edge_states = lowered.edges.iter().map(|e| e.feature.clone()).collect();
    Ok((
        GnnOutput {
            node_states: states,
            edge_states,
        },
        ForwardTrace { incidence, steps },
    ))
}

/// Accumulates parameter gradients into `grads` given `dL/dh` for final node states.
pub fn gnn_backward(
    trace: &ForwardTrace,
    params: &EncoderParams,
    final_grad: Vec<Vec<f64>>,
    grads: &mut EncoderParams,
) {
    let d = params.dim;
    let mut g = final_grad;
    for (l, layer) in params.layers.iter().enumerate().rev() {
        let gl = &mut grads.layers[l];
        let mut prev = g.clone();
        for (v, step) in trace.steps[l].iter().enumerate() {
            let Some(step) = step else { continue };
            let dz: Vec<f64> = g[v]
                .iter()
                .zip(&step.activation)
                .map(|(gv, t)| gv * (1.0 - t * t))
                .collect();
            gl.upd_weight.add_outer_parts(&dz, &[&step.aggregate]);
            add_into(&mut gl.upd_bias, &dz);
            let da = layer.upd_weight.tmul_vec(&dz);
            gl.msg_weight.add_outer_parts(&da, &[&step.input]);
            add_into(&mut gl.msg_bias, &da);
            let inc = &trace.incidence[v];
            let dh = scale(&layer.msg_weight.tmul_vec_cols(&da, 0..d), 1.0 / inc.len() as f64);
            for &(u, _) in inc {
                add_into(&mut prev[u], &dh);
            }
        }
        g = prev;
    }
}
