use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assemble::SgEmbedding;
use crate::error::{EncoderError, Result};
use crate::matrix::{add_into, scale, Matrix};

/// Cumulative signal fraction `alpha_bar(t)` for `t = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// Values must lie in `[0, 1]` and be non-increasing in `t`.
    pub fn from_values(alpha_bar: Vec<f64>) -> Result<Self> {
        if alpha_bar.is_empty() {
            return Err(EncoderError::Schedule("no timesteps".into()));
        }
        for (t, &a) in alpha_bar.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(EncoderError::Schedule(format!("alpha_bar({t}) = {a} outside [0, 1]")));
            }
            if t > 0 && a > alpha_bar[t - 1] {
                return Err(EncoderError::Schedule(format!("alpha_bar increases at t = {t}")));
            }
        }
        Ok(NoiseSchedule { alpha_bar })
    }

    fn from_betas(betas: impl Iterator<Item = f64>) -> Result<Self> {
        let mut prod = 1.0;
        let values = betas
            .map(|b| {
                prod *= 1.0 - b;
                prod
            })
            .collect();
        Self::from_values(values)
    }

    /// Betas linear in `t` from `beta_start` to `beta_end`.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        Self::from_betas((0..steps).map(|i| beta_start + (beta_end - beta_start) * frac(i, steps)))
    }

    /// Betas whose square roots are linear in `t`.
    pub fn scaled_linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        let (s, e) = (beta_start.sqrt(), beta_end.sqrt());
        Self::from_betas((0..steps).map(|i| (s + (e - s) * frac(i, steps)).powi(2)))
    }

    /// 1000 steps, scaled-linear betas from 0.00085 to 0.012.
    pub fn default_latent() -> Self {
        Self::scaled_linear(1000, 0.00085, 0.012).expect("valid default schedule")
    }

    pub fn alpha_bar(&self, t: usize) -> Option<f64> {
        self.alpha_bar.get(t).copied()
    }

    pub fn len(&self) -> usize {
        self.alpha_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_bar.is_empty()
    }
}

fn frac(i: usize, steps: usize) -> f64 {
    if steps <= 1 {
        0.0
    } else {
        i as f64 / (steps - 1) as f64
    }
}

/// `x_t = sqrt(alpha_bar(t))·x0 + sqrt(1 − alpha_bar(t))·eps`.
pub fn noisy_latent(x0: &[f64], eps: &[f64], t: usize, schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    if x0.len() != eps.len() {
        return Err(EncoderError::Dimension(format!("x0 has {} values, eps {}", x0.len(), eps.len())));
    }
    let a = schedule.alpha_bar(t).ok_or(EncoderError::UnknownTimestep(t))?;
    let (s, n) = (a.sqrt(), (1.0 - a).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| s * x + n * e).collect())
}

/// Noise predictor conditioned on a scene-graph embedding.
pub trait Denoiser {
    fn predict(&self, x_t: &[f64], t: usize, cond: &SgEmbedding) -> Result<Vec<f64>>;
}

/// A denoiser that can report `dL/dcond` given `dL/dprediction`.
pub trait DifferentiableDenoiser: Denoiser {
    fn cond_gradient(&self, x_t: &[f64], t: usize, cond: &SgEmbedding, grad_out: &[f64]) -> Vec<Vec<f64>>;
}

/// `eps_hat = A·x_t + B·mean(cond) + c + (t / 1000)·w`; an empty condition pools to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyLinearDenoiser {
    pub latent: Matrix,
    pub cond: Matrix,
    pub bias: Vec<f64>,
    pub time: Vec<f64>,
}

impl ToyLinearDenoiser {
    pub fn random(latent_dim: usize, cond_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows, cols, s: f64| Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-s..s));
        let latent = draw(latent_dim, latent_dim, 1.0 / (latent_dim as f64).sqrt());
        let cond = draw(latent_dim, cond_dim, 1.0 / (cond_dim as f64).sqrt());
        let bias = draw(latent_dim, 1, 0.1).data;
        let time = draw(latent_dim, 1, 0.1).data;
        ToyLinearDenoiser { latent, cond, bias, time }
    }

    pub fn latent_dim(&self) -> usize {
        self.latent.rows
    }

    fn pooled(&self, cond: &SgEmbedding) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.cond.cols];
        for v in &cond.vectors {
            if v.len() != self.cond.cols {
                return Err(EncoderError::Dimension(format!(
                    "condition vector of length {}, expected {}",
                    v.len(),
                    self.cond.cols
                )));
            }
            add_into(&mut acc, v);
        }
        if !cond.is_empty() {
            acc = scale(&acc, 1.0 / cond.len() as f64);
        }
        Ok(acc)
    }
}

impl Denoiser for ToyLinearDenoiser {
    fn predict(&self, x_t: &[f64], t: usize, cond: &SgEmbedding) -> Result<Vec<f64>> {
        if x_t.len() != self.latent.cols {
            return Err(EncoderError::Dimension(format!(
                "latent of length {}, expected {}",
                x_t.len(),
                self.latent.cols
            )));
        }
        let mut out = self.latent.mul_vec(x_t);
        add_into(&mut out, &self.cond.mul_vec(&self.pooled(cond)?));
        add_into(&mut out, &self.bias);
        let tau = t as f64 / 1000.0;
        for (o, w) in out.iter_mut().zip(&self.time) {
            *o += tau * w;
        }
        Ok(out)
    }
}

impl DifferentiableDenoiser for ToyLinearDenoiser {
    fn cond_gradient(&self, _x_t: &[f64], _t: usize, cond: &SgEmbedding, grad_out: &[f64]) -> Vec<Vec<f64>> {
        if cond.is_empty() {
            return Vec::new();
        }
        let g = scale(&self.cond.tmul_vec(grad_out), 1.0 / cond.len() as f64);
        vec![g; cond.len()]
    }
}

pub fn mse(target: &[f64], prediction: &[f64]) -> Result<f64> {
    if target.len() != prediction.len() || target.is_empty() {
        return Err(EncoderError::Dimension(format!(
            "prediction has {} values, target {}",
            prediction.len(),
            target.len()
        )));
    }
    Ok(target.iter().zip(prediction).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / target.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_are_monotone() {
        let s = NoiseSchedule::default_latent();
        assert_eq!(s.len(), 1000);
        assert!(s.alpha_bar(0).unwrap() < 1.0);
        assert!(s.alpha_bar(999).unwrap() > 0.0);
        NoiseSchedule::linear(50, 1e-4, 0.02).unwrap();
        assert!(NoiseSchedule::from_values(vec![0.5, 0.6]).is_err());
        assert!(NoiseSchedule::from_values(vec![1.2]).is_err());
        assert!(NoiseSchedule::from_values(vec![]).is_err());
    }

    #[test]
    fn noising_substitution() {
        let s = NoiseSchedule::from_values(vec![1.0, 0.25, 0.0]).unwrap();
        assert_eq!(noisy_latent(&[1.0, 0.0], &[0.0, 2.0], 0, &s).unwrap(), vec![1.0, 0.0]);
        assert_eq!(noisy_latent(&[1.0, 0.0], &[0.0, 2.0], 1, &s).unwrap(), vec![0.5, 0.75f64.sqrt() * 2.0]);
        assert_eq!(noisy_latent(&[1.0, 0.0], &[0.0, 2.0], 2, &s).unwrap(), vec![0.0, 2.0]);
        assert!(matches!(noisy_latent(&[1.0], &[1.0], 3, &s), Err(EncoderError::UnknownTimestep(3))));
        assert!(noisy_latent(&[1.0], &[1.0, 2.0], 0, &s).is_err());
    }
}
