//! Projection-size selection over restarts, final restart choice and the
//! ensemble predictor.
//!
//! For every candidate size `J` the curves are projected onto a `J`-function
//! basis and `R` networks are fitted. Each restart is scored by validation
//! MSE and, when requested, by the Laplace evidence of its sparsified
//! parameters. Scores are averaged over the restarts that converged; the
//! chosen `J` maximizes mean evidence (or minimizes mean validation MSE), and
//! the reported network, mask and inclusion probabilities come from the
//! restart at that `J` with the lowest validation MSE. Predictions average
//! all converged restarts at the chosen `J`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{FunctionalDataset, Split, Standardization};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::evidence::{self, EvidenceOptions};
use crate::network::NetworkParams;
use crate::prior::{self, PipVector, SparsityHyper};
use crate::spline::{self, CurveSet, Grid, SplineBasis};
use crate::train::{self, RestartOutcome, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Evidence,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    pub j_candidates: Vec<usize>,
    pub criterion: Criterion,
    pub spline_degree: usize,
    /// Smooth the curves by least squares in each candidate basis before projecting.
    pub denoise: bool,
    pub train: TrainConfig,
    pub hyper: SparsityHyper,
    pub evidence: EvidenceOptions,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            j_candidates: vec![55, 60, 70, 80],
            criterion: Criterion::Evidence,
            spline_degree: 4,
            denoise: false,
            train: TrainConfig::default(),
            hyper: SparsityHyper::default(),
            evidence: EvidenceOptions::default(),
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j_candidates.is_empty() {
            return Err(Error::InvalidConfig("no candidate projection sizes".into()));
        }
        if let Some(j) = self
            .j_candidates
            .iter()
            .find(|&&j| j < self.spline_degree + 1)
        {
            return Err(Error::InvalidConfig(format!(
                "projection size {j} is below degree + 1 = {}",
                self.spline_degree + 1
            )));
        }
        let mut sorted = self.j_candidates.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.j_candidates.len() {
            return Err(Error::InvalidConfig(format!(
                "duplicate projection sizes in {:?}",
                self.j_candidates
            )));
        }
        self.train.validate()?;
        self.hyper.validate()?;
        prior::norm_threshold(&self.hyper, 1)?;
        Ok(())
    }
}

/// Scores of one restart at one projection size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartScore {
    pub restart: usize,
    pub seed: u64,
    pub diverged: bool,
    pub val_mse: Option<f64>,
    pub train_objective: Option<f64>,
    pub iterations_run: Option<usize>,
    pub n_selected: Option<usize>,
    pub log_evidence: Option<f64>,
    pub evidence_dim: Option<usize>,
    /// Why the evidence is missing, when it was requested but not computed.
    pub evidence_error: Option<String>,
}

/// Restart-aggregated scores of one projection size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionScore {
    pub j: usize,
    pub mean_evidence: Option<f64>,
    pub mean_val: Option<f64>,
    pub n_converged: usize,
    pub restarts: Vec<RestartScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub j_star: usize,
    /// Zero-based restart index at `j_star`.
    pub r_star: usize,
    pub criterion_requested: Criterion,
    pub criterion_used: Criterion,
    pub spline_degree: usize,
    pub denoise: bool,
    pub grid: Grid,
    pub standardization: Standardization,
    pub hyper: SparsityHyper,
    pub final_params: NetworkParams,
    pub final_mask: Vec<bool>,
    pub final_pip: PipVector,
    pub per_j: Vec<ProjectionScore>,
    /// Converged networks at `j_star`, in restart order.
    pub ensemble: Vec<NetworkParams>,
}

impl SelectionResult {
    pub fn basis(&self) -> Result<SplineBasis> {
        SplineBasis::new(self.j_star, self.spline_degree)
    }

    /// Zero-based indices of the selected features.
    pub fn selected(&self) -> Vec<usize> {
        self.final_mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Index of the best candidate: highest score when `maximize`, else lowest.
/// Candidates without a score are skipped; ties go to the smaller `key`.
pub fn argbest(scores: &[Option<f64>], keys: &[usize], maximize: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        let Some(s) = *s else { continue };
        if s.is_nan() {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bs)) => {
                let strictly = if maximize { s > bs } else { s < bs };
                strictly || (s == bs && keys[i] < keys[b])
            }
        };
        if better {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Position of the chosen projection size in `per_j`, and the criterion
/// actually applied.
pub fn select_projection(per_j: &[ProjectionScore], criterion: Criterion) -> Result<(usize, Criterion)> {
    let keys: Vec<usize> = per_j.iter().map(|p| p.j).collect();
    let usable: Vec<bool> = per_j.iter().map(|p| p.n_converged > 0).collect();
    if !usable.iter().any(|&u| u) {
        return Err(Error::Numerical(
            "every candidate projection size failed to produce a converged fit".into(),
        ));
    }
    let mut used = criterion;
    if criterion == Criterion::Evidence {
        let missing = per_j
            .iter()
            .zip(&usable)
            .any(|(p, &u)| u && p.mean_evidence.is_none());
        if missing {
            log::warn!("evidence unavailable for some projection sizes; selecting by validation loss");
            used = Criterion::Val;
        }
    }
    let scores: Vec<Option<f64>> = per_j
        .iter()
        .zip(&usable)
        .map(|(p, &u)| match used {
            _ if !u => None,
            Criterion::Evidence => p.mean_evidence,
            Criterion::Val => p.mean_val,
        })
        .collect();
    let index = argbest(&scores, &keys, used == Criterion::Evidence);
    index
        .map(|i| (i, used))
        .ok_or_else(|| Error::Numerical("no projection size has a finite score".into()))
}

/// Restart with the lowest validation MSE, ties to the smaller index.
pub fn select_restart(scores: &[RestartScore]) -> Option<usize> {
    let vals: Vec<Option<f64>> = scores.iter().map(|s| s.val_mse).collect();
    let keys: Vec<usize> = (0..scores.len()).collect();
    argbest(&vals, &keys, false)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}

/// Spline features of a set of curves, optionally smoothed first.
pub fn features(curves: &CurveSet, basis: &SplineBasis, denoise: bool) -> Result<DMatrix<f64>> {
    if denoise {
        spline::project(&spline::denoise(curves, basis)?, basis)
    } else {
        spline::project(curves, basis)
    }
}

struct CandidateRun {
    score: ProjectionScore,
    outcomes: Vec<RestartOutcome>,
    masks: Vec<Option<Vec<bool>>>,
}

fn run_candidate(
    j: usize,
    train_curves: &CurveSet,
    y_train: &[f64],
    val_curves: &CurveSet,
    y_val: &[f64],
    config: &SelectorConfig,
) -> Result<CandidateRun> {
    let basis = SplineBasis::new(j, config.spline_degree)?;
    let x_train = features(train_curves, &basis, config.denoise)?;
    let x_val = features(val_curves, &basis, config.denoise)?;
    let train_cfg = TrainConfig {
        seed: derive_seed(config.train.seed, j as u64),
        ..config.train.clone()
    };

    let outcomes = match train::fit_restarts(&x_train, y_train, &x_val, y_val, &config.hyper, &train_cfg) {
        Ok(o) => o,
        Err(Error::Numerical(msg)) => {
            log::warn!("projection size {j} excluded: {msg}");
            (1..=train_cfg.restarts as u64)
                .map(|r| RestartOutcome::Diverged {
                    seed: train_cfg.seed.wrapping_add(r),
                    message: msg.clone(),
                })
                .collect()
        }
        Err(e) => return Err(e),
    };

    let scored: Vec<(RestartScore, Option<Vec<bool>>)> = outcomes
        .par_iter()
        .enumerate()
        .map(|(r, outcome)| -> Result<_> {
            let fit = match outcome {
                RestartOutcome::Diverged { seed, .. } => {
                    return Ok((
                        RestartScore {
                            restart: r,
                            seed: *seed,
                            diverged: true,
                            val_mse: None,
                            train_objective: None,
                            iterations_run: None,
                            n_selected: None,
                            log_evidence: None,
                            evidence_dim: None,
                            evidence_error: None,
                        },
                        None,
                    ))
                }
                RestartOutcome::Fitted(fit) => fit,
            };
            let sparse = evidence::sparsify(&fit.params, &config.hyper)?;
            let (log_evidence, evidence_dim, evidence_error) = if config.criterion == Criterion::Evidence {
                match evidence::laplace_log_evidence(&sparse, &x_train, y_train, &config.hyper, &config.evidence) {
                    Ok(rep) => (Some(rep.log_evidence), Some(rep.retained_dim), None),
                    Err(e @ (Error::EvidenceTooLarge { .. } | Error::Numerical(_))) => {
                        log::warn!("evidence skipped for J = {j}, restart {r}: {e}");
                        (None, None, Some(e.to_string()))
                    }
                    Err(e) => return Err(e),
                }
            } else {
                (None, None, None)
            };
            Ok((
                RestartScore {
                    restart: r,
                    seed: fit.seed_used,
                    diverged: false,
                    val_mse: Some(fit.val_mse),
                    train_objective: Some(fit.train_objective),
                    iterations_run: Some(fit.iterations_run),
                    n_selected: Some(sparse.mask.iter().filter(|&&m| m).count()),
                    log_evidence,
                    evidence_dim,
                    evidence_error,
                },
                Some(sparse.mask),
            ))
        })
        .collect::<Result<_>>()?;

    let (restarts, masks): (Vec<_>, Vec<_>) = scored.into_iter().unzip();
    let n_converged = restarts.iter().filter(|s| !s.diverged).count();
    let score = ProjectionScore {
        j,
        mean_evidence: mean(restarts.iter().filter_map(|s| s.log_evidence)),
        mean_val: mean(restarts.iter().filter_map(|s| s.val_mse)),
        n_converged,
        restarts,
    };
    Ok(CandidateRun {
        score,
        outcomes,
        masks,
    })
}

/// Run the full selection on the train and validation splits of `dataset`.
pub fn run_selection(dataset: &FunctionalDataset, config: &SelectorConfig) -> Result<SelectionResult> {
    config.validate()?;
    let (train_curves, _) = dataset.part(Split::Train);
    let (val_curves, _) = dataset.part(Split::Val);
    if val_curves.is_empty() {
        return Err(Error::Data("dataset has no validation rows".into()));
    }
    let y_train = dataset.standardized(Split::Train);
    let y_val = dataset.standardized(Split::Val);

    let runs: Vec<CandidateRun> = config
        .j_candidates
        .par_iter()
        .map(|&j| run_candidate(j, &train_curves, &y_train, &val_curves, &y_val, config))
        .collect::<Result<_>>()?;

    let per_j: Vec<ProjectionScore> = runs.iter().map(|r| r.score.clone()).collect();
    let (index, criterion_used) = select_projection(&per_j, config.criterion)?;
    let chosen = runs.into_iter().nth(index).expect("index within candidates");
    let r_star = select_restart(&chosen.score.restarts)
        .ok_or_else(|| Error::Numerical("no converged restart at the selected size".into()))?;

    let final_params = chosen.outcomes[r_star]
        .fit()
        .expect("selected restart converged")
        .params
        .clone();
    let final_mask = chosen.masks[r_star].clone().expect("selected restart has a mask");
    let final_pip = prior::pip(&final_params, &config.hyper)?;
    let ensemble = chosen
        .outcomes
        .iter()
        .filter_map(|o| o.fit().map(|f| f.params.clone()))
        .collect();

    Ok(SelectionResult {
        j_star: chosen.score.j,
        r_star,
        criterion_requested: config.criterion,
        criterion_used,
        spline_degree: config.spline_degree,
        denoise: config.denoise,
        grid: dataset.grid().clone(),
        standardization: dataset.standardization(),
        hyper: config.hyper,
        final_params,
        final_mask,
        final_pip,
        per_j,
        ensemble,
    })
}

fn check_grid(expected: &Grid, curves: &CurveSet) -> Result<()> {
    if curves.grid() != expected {
        return Err(Error::Data(
            "curves are not observed on the grid the model was fitted on".into(),
        ));
    }
    Ok(())
}

/// Ensemble mean prediction on the original response scale.
pub fn predict_ensemble(result: &SelectionResult, curves: &CurveSet) -> Result<Vec<f64>> {
    check_grid(&result.grid, curves)?;
    if result.ensemble.is_empty() {
        return Err(Error::InvalidConfig("selection result has an empty ensemble".into()));
    }
    let basis = result.basis()?;
    let x = features(curves, &basis, result.denoise)?.transpose();
    let mut total = vec![0.0; curves.len()];
    for params in &result.ensemble {
        for (acc, p) in total.iter_mut().zip(params.forward_cols(&x)) {
            *acc += p;
        }
    }
    let r = result.ensemble.len() as f64;
    total.iter_mut().for_each(|v| *v /= r);
    result.standardization.destandardize(&total)
}

/// Single-network prediction for one curve on `grid`, on the original response scale.
pub fn predict_point(
    params: &NetworkParams,
    basis: &SplineBasis,
    grid: &Grid,
    curve: &[f64],
    standardization: &Standardization,
) -> Result<f64> {
    let curves = CurveSet::from_rows(grid.clone(), &[curve.to_vec()])?;
    let x = spline::project(&curves, basis)?;
    let row: Vec<f64> = x.row(0).iter().copied().collect();
    let z = params.forward(&row)?;
    Ok(standardization.destandardize(&[z])?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(j: usize, ev: Option<f64>, val: Option<f64>) -> ProjectionScore {
        ProjectionScore {
            j,
            mean_evidence: ev,
            mean_val: val,
            n_converged: usize::from(val.is_some()),
            restarts: vec![],
        }
    }

    fn restart(r: usize, val: Option<f64>) -> RestartScore {
        RestartScore {
            restart: r,
            seed: r as u64,
            diverged: val.is_none(),
            val_mse: val,
            train_objective: None,
            iterations_run: None,
            n_selected: None,
            log_evidence: None,
            evidence_dim: None,
            evidence_error: None,
        }
    }

    #[test]
    fn argbest_ties_prefer_smaller_key() {
        let scores = [Some(1.0), Some(3.0), Some(3.0), None];
        assert_eq!(argbest(&scores, &[10, 30, 20, 5], true), Some(2));
        assert_eq!(argbest(&scores, &[10, 30, 20, 5], false), Some(0));
        assert_eq!(argbest(&[None, None], &[1, 2], true), None);
    }

    #[test]
    fn evidence_and_validation_selection() {
        let per_j = vec![
            score(55, Some(-10.0), Some(0.5)),
            score(60, Some(-8.0), Some(0.4)),
            score(70, Some(-9.0), Some(0.3)),
            score(80, Some(-12.0), Some(0.6)),
        ];
        assert_eq!(select_projection(&per_j, Criterion::Evidence).unwrap(), (1, Criterion::Evidence));
        assert_eq!(select_projection(&per_j, Criterion::Val).unwrap(), (2, Criterion::Val));
    }

    #[test]
    fn missing_evidence_falls_back_to_validation() {
        let per_j = vec![score(55, None, Some(0.5)), score(60, Some(-8.0), Some(0.4))];
        assert_eq!(select_projection(&per_j, Criterion::Evidence).unwrap(), (1, Criterion::Val));
        let per_j = vec![score(55, None, None), score(60, None, None)];
        assert!(select_projection(&per_j, Criterion::Val).is_err());
    }

    #[test]
    fn excluded_sizes_do_not_block_evidence() {
        let per_j = vec![score(55, None, None), score(60, Some(-3.0), Some(0.9)), score(70, Some(-4.0), Some(0.1))];
        assert_eq!(select_projection(&per_j, Criterion::Evidence).unwrap(), (1, Criterion::Evidence));
    }

    #[test]
    fn restart_selection_skips_diverged() {
        let scores = vec![restart(0, None), restart(1, Some(0.3)), restart(2, Some(0.2)), restart(3, Some(0.2))];
        assert_eq!(select_restart(&scores), Some(2));
        assert_eq!(select_restart(&[restart(0, None)]), None);
    }

    #[test]
    fn config_validation() {
        assert!(SelectorConfig::default().validate().is_ok());
        let bad = SelectorConfig {
            j_candidates: vec![],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SelectorConfig {
            j_candidates: vec![4],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SelectorConfig {
            j_candidates: vec![55, 55],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
