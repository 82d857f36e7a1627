//! MAP fitting by mini-batch SGD with validation early stopping and restarts.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::network::{GradientBuffer, NetworkParams};
use crate::prior::{self, SparsityHyper};

/// How the mini-batch gradient is scaled before the SGD step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientScale {
    /// Step along the gradient of `objective / n_train`: batch-mean data
    /// gradient plus the prior gradient divided by `n_train`.
    PerSample,
    /// Step along an unbiased estimate of the full objective gradient: data
    /// gradient scaled by `n_train / batch_size` plus the whole prior gradient.
    FullData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_iters: usize,
    pub patience_iters: usize,
    pub eval_every: usize,
    /// A checkpoint counts as an improvement only if it lowers the best
    /// validation MSE by more than this.
    pub min_delta: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Hidden layer widths; the input width is the projection size and the output width is 1.
    pub hidden: Vec<usize>,
    pub gradient_scale: GradientScale,
    /// Heavy-ball momentum coefficient; 0 is plain SGD.
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            max_iters: 80_001,
            patience_iters: 3_000,
            eval_every: 50,
            min_delta: 0.0,
            restarts: 5,
            seed: 0,
            hidden: vec![64, 64, 64],
            gradient_scale: GradientScale::PerSample,
            momentum: 0.9,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 || self.max_iters == 0 || self.restarts == 0 {
            return bad("batch_size, max_iters and restarts must be positive".into());
        }
        if self.eval_every == 0 || self.patience_iters == 0 {
            return bad("eval_every and patience_iters must be positive".into());
        }
        if self.eval_every > self.patience_iters {
            return bad(format!(
                "eval_every ({}) must not exceed patience_iters ({})",
                self.eval_every, self.patience_iters
            ));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("hidden widths must be nonempty and positive, got {:?}", self.hidden));
        }
        if !(self.min_delta >= 0.0) {
            return bad(format!("min_delta must be nonnegative, got {}", self.min_delta));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        Ok(())
    }

    /// Full layer widths for `input_dim` spline features.
    pub fn widths(&self, input_dim: usize) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(input_dim);
        w.extend(&self.hidden);
        w.push(1);
        w
    }
}

/// Validation MSE recorded at an evaluation checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    /// Parameters at the best validation checkpoint.
    pub params: NetworkParams,
    /// Full training objective at `params`.
    pub train_objective: f64,
    pub val_mse: f64,
    pub best_iteration: usize,
    pub iterations_run: usize,
    pub seed_used: u64,
    pub checkpoints: Vec<Checkpoint>,
}

/// Result of one restart: a fit, or the reason it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RestartOutcome {
    Fitted(FitRecord),
    Diverged { seed: u64, message: String },
}

impl RestartOutcome {
    pub fn fit(&self) -> Option<&FitRecord> {
        match self {
            RestartOutcome::Fitted(f) => Some(f),
            RestartOutcome::Diverged { .. } => None,
        }
    }
}

fn check_data(features: &DMatrix<f64>, responses: &[f64], what: &str) -> Result<()> {
    if features.nrows() == 0 {
        return Err(Error::Data(format!("{what} set is empty")));
    }
    if features.nrows() != responses.len() {
        return Err(Error::Data(format!(
            "{what} set has {} feature rows but {} responses",
            features.nrows(),
            responses.len()
        )));
    }
    Ok(())
}

/// Negative log posterior up to a constant: the squared-error data term plus
/// the negative log marginal prior.
pub fn objective(
    params: &NetworkParams,
    features: &DMatrix<f64>,
    responses: &[f64],
    hyper: &SparsityHyper,
) -> Result<f64> {
    hyper.validate()?;
    check_data(features, responses, "training")?;
    let preds = params.forward_rows(features)?;
    let sse: f64 = preds
        .iter()
        .zip(responses)
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    Ok(sse / (2.0 * hyper.noise_var) + prior::neg_log_marginal_prior(params, hyper)?)
}

/// [`objective`] and its exact gradient.
pub fn objective_and_grad(
    params: &NetworkParams,
    features: &DMatrix<f64>,
    responses: &[f64],
    hyper: &SparsityHyper,
) -> Result<(f64, GradientBuffer)> {
    hyper.validate()?;
    check_data(features, responses, "training")?;
    let (data, mut grad) = params.data_loss_and_grad(features, responses, hyper.noise_var)?;
    prior::accumulate_prior_grad(params, hyper, 1.0, &mut grad, false);
    Ok((data + prior::neg_log_marginal_prior(params, hyper)?, grad))
}

fn mse(params: &NetworkParams, inputs_cols: &DMatrix<f64>, responses: &[f64]) -> f64 {
    let preds = params.forward_cols(inputs_cols);
    preds
        .iter()
        .zip(responses)
        .map(|(p, y)| (y - p) * (y - p))
        .sum::<f64>()
        / responses.len() as f64
}

/// Fit one network by SGD from a seeded initialization, keeping the
/// parameters with the lowest validation MSE.
pub fn fit_map(
    features_train: &DMatrix<f64>,
    y_train: &[f64],
    features_val: &DMatrix<f64>,
    y_val: &[f64],
    hyper: &SparsityHyper,
    config: &TrainConfig,
) -> Result<FitRecord> {
    config.validate()?;
    hyper.validate()?;
    check_data(features_train, y_train, "training")?;
    check_data(features_val, y_val, "validation")?;
    if features_train.ncols() != features_val.ncols() {
        return Err(Error::Shape {
            expected: features_train.ncols(),
            got: features_val.ncols(),
        });
    }

    let n = y_train.len();
    let seed = config.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widths = config.widths(features_train.ncols());
    let mut params = NetworkParams::he_init(&widths, &mut rng)?;
    let mut velocity = (config.momentum > 0.0).then(|| NetworkParams::zeros(&widths)).transpose()?;

    let train_cols = features_train.transpose();
    let val_cols = features_val.transpose();
    let batch_size = config.batch_size.min(n);
    let (data_scale, prior_scale) = match config.gradient_scale {
        GradientScale::PerSample => (1.0, 1.0 / n as f64),
        GradientScale::FullData => (n as f64, 1.0),
    };
    let lr = config.learning_rate;

    let mut best_mse = mse(&params, &val_cols, y_val);
    if !best_mse.is_finite() {
        return Err(Error::Divergence {
            iteration: 0,
            learning_rate: lr,
        });
    }
    let mut best_params = params.clone();
    let mut best_iteration = 0;
    let mut checkpoints = vec![Checkpoint {
        iteration: 0,
        val_mse: best_mse,
    }];

    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut epoch = 0u64;
    let mut batch_y = Vec::with_capacity(batch_size);
    let mut iterations_run = 0;

    for iter in 1..=config.max_iters {
        if cursor >= n {
            let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, epoch));
            order.shuffle(&mut shuffle_rng);
            epoch += 1;
            cursor = 0;
        }
        let end = (cursor + batch_size).min(n);
        let idx = &order[cursor..end];
        cursor = end;

        let batch_x = train_cols.select_columns(idx);
        batch_y.clear();
        batch_y.extend(idx.iter().map(|&i| y_train[i]));
        let (loss, mut grad) = params.loss_and_grad_cols(&batch_x, &batch_y, hyper.noise_var)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                learning_rate: lr,
            });
        }
        grad.scale(data_scale / idx.len() as f64);
        prior::accumulate_prior_grad(&params, hyper, prior_scale, &mut grad, false);

        match velocity.as_mut() {
            Some(v) => {
                v.scale(config.momentum);
                v.add_scaled(&grad, 1.0);
                params.add_scaled(v, -lr);
            }
            None => params.add_scaled(&grad, -lr),
        }
        iterations_run = iter;

        if iter % config.eval_every == 0 {
            let val_mse = mse(&params, &val_cols, y_val);
            if !val_mse.is_finite() || !params.is_finite() {
                return Err(Error::Divergence {
                    iteration: iter,
                    learning_rate: lr,
                });
            }
            checkpoints.push(Checkpoint {
                iteration: iter,
                val_mse,
            });
            if val_mse < best_mse - config.min_delta {
                best_mse = val_mse;
                best_params.clone_from(&params);
                best_iteration = iter;
            } else if iter - best_iteration >= config.patience_iters {
                break;
            }
        }
    }

    let train_objective = objective(&best_params, features_train, y_train, hyper)?;
    Ok(FitRecord {
        params: best_params,
        train_objective,
        val_mse: best_mse,
        best_iteration,
        iterations_run,
        seed_used: seed,
        checkpoints,
    })
}

/// `config.restarts` independent fits with seeds `config.seed + 1 ..= config.seed + R`,
/// in restart order. Fails only when every restart fails.
pub fn fit_restarts(
    features_train: &DMatrix<f64>,
    y_train: &[f64],
    features_val: &DMatrix<f64>,
    y_val: &[f64],
    hyper: &SparsityHyper,
    config: &TrainConfig,
) -> Result<Vec<RestartOutcome>> {
    config.validate()?;
    let outcomes: Vec<RestartOutcome> = (1..=config.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.wrapping_add(r);
            let cfg = TrainConfig {
                seed,
                ..config.clone()
            };
            match fit_map(features_train, y_train, features_val, y_val, hyper, &cfg) {
                Ok(fit) => Ok(RestartOutcome::Fitted(fit)),
                Err(e @ Error::Divergence { .. }) => {
                    log::warn!("restart with seed {seed} diverged: {e}");
                    Ok(RestartOutcome::Diverged {
                        seed,
                        message: e.to_string(),
                    })
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    if outcomes.iter().all(|o| o.fit().is_none()) {
        let first = outcomes.first().and_then(|o| match o {
            RestartOutcome::Diverged { message, .. } => Some(message.clone()),
            _ => None,
        });
        return Err(Error::Numerical(format!(
            "all {} restarts diverged ({})",
            outcomes.len(),
            first.unwrap_or_default()
        )));
    }
    Ok(outcomes)
}
