//! Measurement-noise generators and the two-source covariance matrix.
//!
//! Streams come from ChaCha8 keyed by a seed and a stream index, so Monte
//! Carlo instance `j` of a run with master seed `s` always sees the same
//! deviates regardless of scheduling. Normal deviates use the ziggurat
//! sampler of `rand_distr::StandardNormal`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// σ₁ of the two-source model, MPa.
pub const DEFAULT_SIGMA_UNCORRELATED: f64 = 10.0;
/// σ₂ of the two-source model, MPa.
pub const DEFAULT_SIGMA_CORRELATED: f64 = 5.0;

/// Stochastic description of additive measurement error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// Independent `𝒩(0, σ²)`.
    White { sigma: f64 },
    /// `Noise_i = α Noise_{i−1} + ε_i`, `ε_i ~ 𝒩(0, σ²)`, started from the
    /// stationary law.
    Ar { alpha: f64, sigma: f64 },
    /// White noise of σ₁ plus `ε Exp_i / max|Exp|` with `ε ~ 𝒩(0, σ₂²)`.
    TwoSource { sigma1: f64, sigma2: f64 },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::TwoSource { sigma1: DEFAULT_SIGMA_UNCORRELATED, sigma2: DEFAULT_SIGMA_CORRELATED }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let sigmas: &[f64] = match self {
            NoiseModel::White { sigma } => &[*sigma],
            NoiseModel::Ar { alpha, sigma } => {
                if !(*alpha >= 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1), got {alpha}")));
                }
                &[*sigma]
            }
            NoiseModel::TwoSource { sigma1, sigma2 } => &[*sigma1, *sigma2],
        };
        if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::InvalidParameter(format!("noise sigma must be non-negative, got {s}")));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        match *self {
            NoiseModel::White { sigma } | NoiseModel::Ar { sigma, .. } => sigma == 0.0,
            NoiseModel::TwoSource { sigma1, sigma2 } => sigma1 == 0.0 && sigma2 == 0.0,
        }
    }
}

/// Generator for stream `stream` of seed `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn max_abs(exp: &[f64]) -> f64 {
    exp.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// One noise realization for data `exp`, drawn from stream 0 of `seed`.
pub fn sample_noise(model: &NoiseModel, exp: &[f64], seed: u64) -> Result<Vec<f64>> {
    sample_noise_with(model, exp, &mut rng_for(seed, 0))
}

/// One noise realization from an explicit generator.
pub fn sample_noise_with<R: Rng + ?Sized>(model: &NoiseModel, exp: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    model.validate()?;
    if exp.is_empty() {
        return Err(Error::DegenerateData("empty data vector".into()));
    }
    let n = exp.len();
    let out = match *model {
        NoiseModel::White { sigma } => (0..n).map(|_| sigma * normal(rng)).collect(),
        NoiseModel::Ar { alpha, sigma } => {
            let mut out = Vec::with_capacity(n);
            let mut prev = sigma / (1.0 - alpha * alpha).sqrt() * normal(rng);
            out.push(prev);
            for _ in 1..n {
                prev = alpha * prev + sigma * normal(rng);
                out.push(prev);
            }
            out
        }
        NoiseModel::TwoSource { sigma1, sigma2 } => {
            let scale = max_abs(exp);
            if !(scale > 0.0) {
                return Err(Error::DegenerateData("max |Exp| is zero".into()));
            }
            let shared = sigma2 * normal(rng) / scale;
            let mut out: Vec<f64> = exp.iter().map(|e| shared * e).collect();
            for v in out.iter_mut() {
                *v += sigma1 * normal(rng);
            }
            out
        }
    };
    Ok(out)
}

/// `Cov_ij = σ₁² δ_ij + σ₂² Exp_i Exp_j / (max_k |Exp_k|)²`; white noise is
/// the `σ₂ = 0` case.
pub fn covariance(model: &NoiseModel, exp: &[f64]) -> Result<DMatrix<f64>> {
    model.validate()?;
    let n = exp.len();
    if n == 0 {
        return Err(Error::DegenerateData("empty data vector".into()));
    }
    let (s1, s2) = match *model {
        NoiseModel::White { sigma } => (sigma, 0.0),
        NoiseModel::TwoSource { sigma1, sigma2 } => (sigma1, sigma2),
        NoiseModel::Ar { .. } => return Err(Error::UnsupportedModel("autoregressive covariance")),
    };
    let scale = max_abs(exp);
    if s2 != 0.0 && !(scale > 0.0) {
        return Err(Error::DegenerateData("max |Exp| is zero".into()));
    }
    let c = if s2 == 0.0 { 0.0 } else { s2 * s2 / (scale * scale) };
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { s1 * s1 } else { 0.0 };
        diag + c * exp[i] * exp[j]
    }))
}
