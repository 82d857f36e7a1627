//! Laplace-approximated log evidence of a sparsified network.
//!
//! With `h(θ) = −objective(θ)/n` and `H` its Hessian restricted to the
//! retained parameters,
//!
//! ```text
//! ℓ = n·h(θ̂) + (d/2) log 2π − (d/2) log n − ½ log det(−H)
//! ```
//!
//! `H` is assembled column by column from central differences of the analytic
//! gradient; the log-determinant comes from the eigenvalues of `−H` after a
//! diagonal jitter, with a floor on tiny or negative eigenvalues.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkParams;
use crate::prior::{self, SparsityHyper};
use crate::train;

/// A negative log posterior over a flat parameter vector.
pub trait LogPosterior: Sync {
    fn dim(&self) -> usize;

    /// Number of training observations `n`.
    fn n_obs(&self) -> usize;

    fn objective(&self, theta: &[f64]) -> Result<f64>;

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvidenceOptions {
    /// Relative central-difference step, scaled by `max(1, |θ_k|)`.
    pub fd_step: f64,
    pub jitter: f64,
    pub eigen_floor: f64,
    /// Largest retained dimension for which the dense Hessian is formed.
    pub max_dim: usize,
}

impl Default for EvidenceOptions {
    fn default() -> Self {
        Self {
            fd_step: 1e-5,
            jitter: 1e-6,
            eigen_floor: 1e-10,
            max_dim: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub log_evidence: f64,
    pub retained_dim: usize,
    pub n_train: usize,
    /// `−½ log det(−H + jitter·I)` after flooring.
    pub logdet_term: f64,
    pub jitter_used: f64,
    pub clamped_eigs: usize,
    /// `‖∇h‖∞` at the evaluation point.
    pub grad_inf_norm: f64,
}

/// Restricted Hessian of `h` and the relative asymmetry of the raw
/// finite-difference matrix before it was symmetrized.
#[derive(Debug, Clone)]
pub struct RestrictedHessian {
    pub matrix: DMatrix<f64>,
    pub asymmetry: f64,
}

/// Hessian of `h = −objective/n` over `retained` at `theta`.
pub fn restricted_hessian<M: LogPosterior + ?Sized>(
    model: &M,
    theta: &[f64],
    retained: &[usize],
    opts: &EvidenceOptions,
) -> Result<RestrictedHessian> {
    let d = retained.len();
    if d > opts.max_dim {
        return Err(Error::EvidenceTooLarge {
            dim: d,
            cap: opts.max_dim,
        });
    }
    if theta.len() != model.dim() {
        return Err(Error::Shape {
            expected: model.dim(),
            got: theta.len(),
        });
    }
    let n = model.n_obs() as f64;

    let columns: Vec<Vec<f64>> = retained
        .par_iter()
        .map(|&k| {
            let step = opts.fd_step * theta[k].abs().max(1.0);
            let mut plus = theta.to_vec();
            plus[k] += step;
            let mut minus = theta.to_vec();
            minus[k] -= step;
            let gp = model.gradient(&plus)?;
            let gm = model.gradient(&minus)?;
            Ok(retained
                .iter()
                .map(|&i| -(gp[i] - gm[i]) / (2.0 * step * n))
                .collect())
        })
        .collect::<Result<_>>()?;

    let raw = DMatrix::from_fn(d, d, |i, j| columns[j][i]);
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in the finite-difference Hessian".into()));
    }
    let scale = raw.amax();
    let asymmetry = if scale > 0.0 {
        (&raw - raw.transpose()).amax() / scale
    } else {
        0.0
    };
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(RestrictedHessian { matrix, asymmetry })
}

/// Laplace log evidence at `theta` over the `retained` coordinates.
pub fn laplace_at<M: LogPosterior + ?Sized>(
    model: &M,
    theta: &[f64],
    retained: &[usize],
    opts: &EvidenceOptions,
) -> Result<EvidenceReport> {
    let n_train = model.n_obs();
    let n = n_train as f64;
    let d = retained.len();
    let hessian = restricted_hessian(model, theta, retained, opts)?;

    let objective = model.objective(theta)?;
    let grad = model.gradient(theta)?;
    let grad_inf_norm = retained
        .iter()
        .map(|&k| (grad[k] / n).abs())
        .fold(0.0, f64::max);
    if grad_inf_norm > 1e-2 {
        log::warn!("evidence point is not stationary: |grad h|_inf = {grad_inf_norm:.3e}");
    }

    let mut neg_h = -hessian.matrix;
    for i in 0..d {
        neg_h[(i, i)] += opts.jitter;
    }
    let mut clamped_eigs = 0;
    let mut logdet = 0.0;
    if d > 0 {
        let eig = SymmetricEigen::new(neg_h);
        for &lambda in eig.eigenvalues.iter() {
            let v = if lambda < opts.eigen_floor {
                clamped_eigs += 1;
                opts.eigen_floor
            } else {
                lambda
            };
            logdet += v.ln();
        }
    }
    if clamped_eigs > 0 {
        log::debug!("clamped {clamped_eigs} of {d} Hessian eigenvalues");
    }

    let logdet_term = -0.5 * logdet;
    let log_evidence = -objective + 0.5 * d as f64 * (2.0 * PI).ln() - 0.5 * d as f64 * n.ln() + logdet_term;
    if !log_evidence.is_finite() {
        return Err(Error::Numerical(format!("log evidence is {log_evidence}")));
    }
    Ok(EvidenceReport {
        log_evidence,
        retained_dim: d,
        n_train,
        logdet_term,
        jitter_used: opts.jitter,
        clamped_eigs,
        grad_inf_norm,
    })
}

/// Network parameters with the first-layer columns of unselected features set to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifiedParams {
    pub params: NetworkParams,
    pub mask: Vec<bool>,
}

impl SparsifiedParams {
    /// Flat indices of the free parameters: every bias, every deep weight and
    /// the first-layer weights of selected columns.
    pub fn retained_indices(&self) -> Vec<usize> {
        let j = self.params.input_dim();
        let first_weights = self.params.first_width() * j;
        (0..self.params.len())
            .filter(|&k| k >= first_weights || self.mask[k % j])
            .collect()
    }
}

/// Zero the first-layer columns whose squared norm does not exceed the
/// inclusion threshold.
pub fn sparsify(params: &NetworkParams, hyper: &SparsityHyper) -> Result<SparsifiedParams> {
    let tau = prior::norm_threshold(hyper, params.first_width())?;
    let mask: Vec<bool> = params.column_norms_sq().iter().map(|&s| s > tau).collect();
    let mut params = params.clone();
    for (j, keep) in mask.iter().enumerate() {
        if !keep {
            params.first_layer_mut().column_mut(j).fill(0.0);
        }
    }
    Ok(SparsifiedParams { params, mask })
}

/// The MAP objective of a network over flat parameters.
pub struct NetworkPosterior<'a> {
    widths: Vec<usize>,
    features: &'a DMatrix<f64>,
    responses: &'a [f64],
    hyper: SparsityHyper,
}

impl<'a> NetworkPosterior<'a> {
    pub fn new(
        widths: &[usize],
        features: &'a DMatrix<f64>,
        responses: &'a [f64],
        hyper: SparsityHyper,
    ) -> Result<Self> {
        hyper.validate()?;
        if features.nrows() != responses.len() || responses.is_empty() {
            return Err(Error::Data(format!(
                "{} feature rows for {} responses",
                features.nrows(),
                responses.len()
            )));
        }
        Ok(Self {
            widths: widths.to_vec(),
            features,
            responses,
            hyper,
        })
    }

    fn params(&self, theta: &[f64]) -> Result<NetworkParams> {
        NetworkParams::from_flat(&self.widths, theta)
    }
}

impl LogPosterior for NetworkPosterior<'_> {
    fn dim(&self) -> usize {
        self.widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    fn n_obs(&self) -> usize {
        self.responses.len()
    }

    fn objective(&self, theta: &[f64]) -> Result<f64> {
        train::objective(&self.params(theta)?, self.features, self.responses, &self.hyper)
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let (_, g) =
            train::objective_and_grad(&self.params(theta)?, self.features, self.responses, &self.hyper)?;
        Ok(g.to_flat())
    }
}

/// Laplace log evidence of a sparsified network on its training data.
pub fn laplace_log_evidence(
    sparsified: &SparsifiedParams,
    features: &DMatrix<f64>,
    responses: &[f64],
    hyper: &SparsityHyper,
    opts: &EvidenceOptions,
) -> Result<EvidenceReport> {
    let retained = sparsified.retained_indices();
    if retained.len() > opts.max_dim {
        return Err(Error::EvidenceTooLarge {
            dim: retained.len(),
            cap: opts.max_dim,
        });
    }
    let model = NetworkPosterior::new(sparsified.params.widths(), features, responses, *hyper)?;
    laplace_at(&model, &sparsified.params.to_flat(), &retained, opts)
}
