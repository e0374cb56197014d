//! Scene-graph encoder: text embedding, graph lowering, message passing,
//! sequence assembly and the noise-prediction loss with analytic gradients.

pub mod assemble;
pub mod backend;
pub mod diffusion;
pub mod error;
pub mod gnn;
pub mod loss;
pub mod lower;
pub mod matrix;
pub mod params;

pub use assemble::{assemble, assemble_with, refine_triples, AssembleOptions, Provenance, SgEmbedding};
pub use backend::{embed_text, EmbeddingBackend, HashEmbedding, HttpEmbedding};
pub use diffusion::{noisy_latent, Denoiser, DifferentiableDenoiser, NoiseSchedule, ToyLinearDenoiser};
pub use error::EncoderError;
pub use gnn::{gnn_forward, GnnOutput};
pub use loss::{grad_check, sg_loss, GradCheckReport, LossConfig};
pub use lower::{lower, LoweredGraph};
pub use params::EncoderParams;
