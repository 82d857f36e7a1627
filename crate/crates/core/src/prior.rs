//! Column-wise spike-and-slab prior on the first layer, Gaussian prior on
//! everything else.
//!
//! Every first-layer column `W_{1,*j}` is a two-component mixture
//! `λ N(0, σ₁² I) + (1 − λ) N(0, σ₀² I)`. At the usual hyperparameters the
//! mixture normalizers overflow in linear space, so all mixture and inclusion
//! probability arithmetic is done on log densities.

use std::f64::consts::PI;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{axpy, GradientBuffer, NetworkParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparsityHyper {
    /// Prior slab probability λ.
    pub lambda: f64,
    /// Spike variance σ₀².
    pub sigma0_sq: f64,
    /// Slab variance σ₁².
    pub sigma1_sq: f64,
    /// Prior variance σ² of deep weights and all biases.
    pub sigma_sq: f64,
    /// Observation noise variance σ_ε².
    pub noise_var: f64,
}

impl Default for SparsityHyper {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            sigma0_sq: 1e-5,
            sigma1_sq: 2e-3,
            sigma_sq: 1.0,
            noise_var: 1.0,
        }
    }
}

impl SparsityHyper {
    /// Checks positivity and `λ ∈ [0, 1]`. The endpoints of `λ` are allowed
    /// here (degenerate mixtures) but rejected by [`norm_threshold`].
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma0_sq", self.sigma0_sq),
            ("sigma1_sq", self.sigma1_sq),
            ("sigma_sq", self.sigma_sq),
            ("noise_var", self.noise_var),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    fn validate_separated(&self) -> Result<()> {
        self.validate()?;
        if !(self.sigma1_sq > self.sigma0_sq) {
            return Err(Error::InvalidConfig(format!(
                "slab variance {} must exceed spike variance {}",
                self.sigma1_sq, self.sigma0_sq
            )));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must lie strictly inside (0, 1), got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Plug-in posterior inclusion probability of every input feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PipVector(pub Vec<f64>);

impl Deref for PipVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `log N(w; 0, s² I_dim)` given `‖w‖²`.
fn log_normal_iso(norm_sq: f64, var: f64, dim: usize) -> f64 {
    -0.5 * dim as f64 * (2.0 * PI * var).ln() - norm_sq / (2.0 * var)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Slab and spike log weights `(ℓ₁, ℓ₀)` of a column with squared norm `norm_sq`.
/// The shared `(2π)^{-dim/2}` factor is omitted.
fn component_logs(norm_sq: f64, dim: usize, hyper: &SparsityHyper) -> (f64, f64) {
    let half = 0.5 * dim as f64;
    let slab = hyper.lambda.ln() - half * hyper.sigma1_sq.ln() - norm_sq / (2.0 * hyper.sigma1_sq);
    let spike =
        (1.0 - hyper.lambda).ln() - half * hyper.sigma0_sq.ln() - norm_sq / (2.0 * hyper.sigma0_sq);
    (slab, spike)
}

/// Posterior log-odds `log q/(1 − q)` of inclusion for one column.
pub fn inclusion_log_odds(norm_sq: f64, dim: usize, hyper: &SparsityHyper) -> f64 {
    let (slab, spike) = component_logs(norm_sq, dim, hyper);
    slab - spike
}

/// Logistic function, evaluated without overflow for large `|x|`.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inclusion probability of one column from its squared norm.
pub fn inclusion_probability(norm_sq: f64, dim: usize, hyper: &SparsityHyper) -> f64 {
    let (slab, spike) = component_logs(norm_sq, dim, hyper);
    if slab == f64::NEG_INFINITY {
        return 0.0;
    }
    if spike == f64::NEG_INFINITY {
        return 1.0;
    }
    sigmoid(slab - spike)
}

/// `−log π(θ)` under the marginal (indicator-summed) prior.
pub fn neg_log_marginal_prior(params: &NetworkParams, hyper: &SparsityHyper) -> Result<f64> {
    hyper.validate()?;
    let dim = params.first_width();
    let mut total = 0.0;
    for norm_sq in params.column_norms_sq() {
        let slab = hyper.lambda.ln() + log_normal_iso(norm_sq, hyper.sigma1_sq, dim);
        let spike = (1.0 - hyper.lambda).ln() + log_normal_iso(norm_sq, hyper.sigma0_sq, dim);
        total -= log_add_exp(slab, spike);
    }

    let half_log = 0.5 * (2.0 * PI * hyper.sigma_sq).ln();
    let mut count = 0usize;
    let mut sum_sq = 0.0;
    for w in &params.weights()[1..] {
        count += w.len();
        sum_sq += w.norm_squared();
    }
    for b in params.biases() {
        count += b.len();
        sum_sq += b.norm_squared();
    }
    total += count as f64 * half_log + sum_sq / (2.0 * hyper.sigma_sq);
    Ok(total)
}

/// Gradient of [`neg_log_marginal_prior`].
///
/// Column `j` of the first layer contributes `[q_j/σ₁² + (1 − q_j)/σ₀²] W_{1,*j}`,
/// every other parameter `θ/σ²`.
pub fn prior_grad(params: &NetworkParams, hyper: &SparsityHyper) -> Result<GradientBuffer> {
    hyper.validate()?;
    let mut grad = params.clone();
    accumulate_prior_grad(params, hyper, 1.0, &mut grad, true);
    Ok(grad)
}

/// `grad += scale · ∇(−log π)(params)`. When `overwrite` is set, `grad` is
/// assumed to hold a copy of `params` and is rescaled in place instead.
pub(crate) fn accumulate_prior_grad(
    params: &NetworkParams,
    hyper: &SparsityHyper,
    scale: f64,
    grad: &mut GradientBuffer,
    overwrite: bool,
) {
    let dim = params.first_width();
    let inv1 = 1.0 / hyper.sigma1_sq;
    let inv0 = 1.0 / hyper.sigma0_sq;
    let norms = params.column_norms_sq();
    let w1 = params.first_layer();
    let g1 = grad.first_layer_mut();
    for (j, norm_sq) in norms.into_iter().enumerate() {
        let q = inclusion_probability(norm_sq, dim, hyper);
        let coef = scale * (q * inv1 + (1.0 - q) * inv0);
        let mut gcol = g1.column_mut(j);
        if overwrite {
            gcol *= coef;
        } else {
            gcol.axpy(coef, &w1.column(j), 1.0);
        }
    }

    let deep = scale / hyper.sigma_sq;
    let n_layers = params.n_layers();
    for h in 1..n_layers {
        if overwrite {
            grad.weights_mut()[h] *= deep;
        } else {
            axpy(grad.weights_mut()[h].as_mut_slice(), params.weights()[h].as_slice(), deep);
        }
    }
    for h in 0..n_layers {
        if overwrite {
            grad.biases_mut()[h] *= deep;
        } else {
            grad.biases_mut()[h].axpy(deep, &params.biases()[h], 1.0);
        }
    }
}

/// Inclusion probabilities of all first-layer columns.
pub fn pip(params: &NetworkParams, hyper: &SparsityHyper) -> Result<PipVector> {
    hyper.validate()?;
    let dim = params.first_width();
    Ok(PipVector(
        params
            .column_norms_sq()
            .into_iter()
            .map(|s| inclusion_probability(s, dim, hyper))
            .collect(),
    ))
}

/// Squared column norm `τ` at which the inclusion probability crosses 1/2,
/// for a first layer of width `first_width`.
pub fn norm_threshold(hyper: &SparsityHyper, first_width: usize) -> Result<f64> {
    hyper.validate_separated()?;
    let numerator = ((1.0 - hyper.lambda) / hyper.lambda).ln()
        + 0.5 * first_width as f64 * (hyper.sigma1_sq / hyper.sigma0_sq).ln();
    let denominator = 0.5 / hyper.sigma0_sq - 0.5 / hyper.sigma1_sq;
    Ok(numerator / denominator)
}
