use sgkit_core::SceneGraph;

use crate::assemble::{encode_prepared, prepare, AssembleOptions, PreparedGraph};
use crate::backend::EmbeddingBackend;
use crate::diffusion::{mse, noisy_latent, Denoiser, DifferentiableDenoiser, NoiseSchedule};
use crate::error::{EncoderError, Result};
use crate::gnn::gnn_backward;
use crate::matrix::{add_into, dot, scale};
use crate::params::EncoderParams;

/// `mean((eps − denoiser(x_t, t, assemble(graph)))²)`.
#[allow(clippy::too_many_arguments)]
pub fn sg_loss(
    x0: &[f64],
    eps: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser,
    graph: &SceneGraph,
    backend: &dyn EmbeddingBackend,
    params: &EncoderParams,
) -> Result<f64> {
    let prepared = prepare(graph, backend, AssembleOptions::default())?;
    let x_t = noisy_latent(x0, eps, t, schedule)?;
    let cond = encode_prepared(&prepared, params)?.embedding;
    mse(eps, &denoiser.predict(&x_t, t, &cond)?)
}

/// Fixed inputs of one loss evaluation.
pub struct LossConfig<'a> {
    pub x0: Vec<f64>,
    pub eps: Vec<f64>,
    pub t: usize,
    pub schedule: &'a NoiseSchedule,
    pub denoiser: &'a dyn DifferentiableDenoiser,
    pub backend: &'a dyn EmbeddingBackend,
    pub options: AssembleOptions,
}

pub fn loss_prepared(prepared: &PreparedGraph, params: &EncoderParams, cfg: &LossConfig) -> Result<f64> {
    let x_t = noisy_latent(&cfg.x0, &cfg.eps, cfg.t, cfg.schedule)?;
    let cond = encode_prepared(prepared, params)?.embedding;
    mse(&cfg.eps, &cfg.denoiser.predict(&x_t, cfg.t, &cond)?)
}

/// Loss and its analytic gradient with respect to `alpha` and every layer weight.
pub fn loss_and_grad(prepared: &PreparedGraph, params: &EncoderParams, cfg: &LossConfig) -> Result<(f64, EncoderParams)> {
    let x_t = noisy_latent(&cfg.x0, &cfg.eps, cfg.t, cfg.schedule)?;
    let enc = encode_prepared(prepared, params)?;
    let pred = cfg.denoiser.predict(&x_t, cfg.t, &enc.embedding)?;
    let loss = mse(&cfg.eps, &pred)?;
    let n = pred.len() as f64;
    let d_pred: Vec<f64> = cfg.eps.iter().zip(&pred).map(|(e, p)| -2.0 * (e - p) / n).collect();
    let d_cond = cfg.denoiser.cond_gradient(&x_t, cfg.t, &enc.embedding, &d_pred);
    if d_cond.len() != enc.embedding.len() {
        return Err(EncoderError::Dimension(format!(
            "denoiser returned {} condition gradients for {} vectors",
            d_cond.len(),
            enc.embedding.len()
        )));
    }

    let mut grads = EncoderParams::zeros(params.dim, params.hidden, params.n_layers());
    let lowered = &prepared.lowered;
    let mut d_states = vec![vec![0.0; params.dim]; lowered.nodes.len()];
    for (i, &t) in prepared.triple_ids.iter().enumerate() {
        let g = &d_cond[i];
        grads.alpha += dot(g, &enc.refined[i]);
        let tn = &lowered.triple_index[&t];
        let mut nodes = vec![tn.subject];
        if tn.object != tn.subject {
            nodes.push(tn.object);
        }
        let share = scale(g, params.alpha / (nodes.len() + tn.edges.len()) as f64);
        for v in nodes {
            add_into(&mut d_states[v], &share);
        }
    }
    gnn_backward(&enc.trace, params, d_states, &mut grads);
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: Option<String>,
    pub n_params: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Central differences with step `eps_fd` against [`loss_and_grad`].
pub fn grad_check(graph: &SceneGraph, params: &EncoderParams, cfg: &LossConfig, eps_fd: f64) -> Result<GradCheckReport> {
    let prepared = prepare(graph, cfg.backend, cfg.options)?;
    let (_, grads) = loss_and_grad(&prepared, params, cfg)?;
    let analytic = grads.to_flat();
    let base = params.to_flat();
    let mut probe = params.clone();
    let mut flat = base.clone();
    let mut numeric = Vec::with_capacity(base.len());
    let mut worst = (0.0, None);
    for i in 0..base.len() {
        flat[i] = base[i] + eps_fd;
        probe.set_flat(&flat);
        let up = loss_prepared(&prepared, &probe, cfg)?;
        flat[i] = base[i] - eps_fd;
        probe.set_flat(&flat);
        let down = loss_prepared(&prepared, &probe, cfg)?;
        flat[i] = base[i];
        let g = (up - down) / (2.0 * eps_fd);
        let err = relative_error(analytic[i], g);
        if err > worst.0 || worst.1.is_none() {
            worst = (err, Some(i));
        }
        numeric.push(g);
    }
    Ok(GradCheckReport {
        max_rel_error: worst.0,
        worst_param: worst.1.map(|i| params.param_name(i)),
        n_params: base.len(),
        analytic,
        numeric,
    })
}
