//! Synthetic functional data: cosine-expansion curves, localized coefficient
//! functions, nonlinear links and SNR-calibrated noise.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{FunctionalDataset, Split};
use crate::error::{Error, Result};
use crate::region::Region;
use crate::spline::{CurveSet, Grid, Interval};

/// Number of cosine terms in each latent curve.
pub const N_TERMS: usize = 50;

/// Refinement factor of the quadrature grid used for the true index.
const FINE_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaKind {
    Simple,
    Medium,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    Linear,
    Logistic,
    Sinusoidal,
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimScenario {
    pub beta: BetaKind,
    pub link: LinkKind,
    pub response_snr: f64,
    pub curve_snr: f64,
    pub grid_len: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        Self {
            beta: BetaKind::Simple,
            link: LinkKind::Linear,
            response_snr: 10.0,
            curve_snr: 10.0,
            grid_len: 101,
            n_train: 1000,
            n_val: 200,
            n_test: 200,
            seed: 0,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.response_snr > 0.0 && self.curve_snr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "signal-to-noise ratios must be positive, got {} and {}",
                self.response_snr, self.curve_snr
            )));
        }
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("every split needs at least one sample".into()));
        }
        if self.grid_len < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid_len must be at least 2, got {}",
                self.grid_len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub true_region: Region,
    pub beta_on_grid: Vec<f64>,
    /// Calibrated response noise variance.
    pub sigma_eps_sq: f64,
    /// Empirical variance of the noiseless responses.
    pub signal_variance: f64,
}

/// Cosine coefficients of latent curves, one curve per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCurves {
    coefficients: DMatrix<f64>,
}

fn cosine_term(k: usize, t: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        std::f64::consts::SQRT_2 * (k as f64 * std::f64::consts::PI * t).cos()
    }
}

fn amplitude(k: usize) -> f64 {
    match k {
        0 => 20.0,
        1 | 2 => 15.0,
        _ => 1.0,
    }
}

impl LatentCurves {
    /// `c_ik = z_k r_ik` with `r_ik ~ Unif(−√3, √3)`.
    pub fn draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let bound = 3f64.sqrt();
        let mut coefficients = DMatrix::zeros(n, N_TERMS);
        for i in 0..n {
            for k in 0..N_TERMS {
                coefficients[(i, k)] = amplitude(k) * rng.random_range(-bound..bound);
            }
        }
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    /// Curve values on `points`, one curve per row.
    pub fn evaluate(&self, points: &[f64]) -> DMatrix<f64> {
        let basis = DMatrix::from_fn(N_TERMS, points.len(), |k, l| cosine_term(k, points[l]));
        &self.coefficients * basis
    }
}

/// `n` noiseless curves on a uniform grid of `grid_len` points.
pub fn gen_curves(n: usize, grid_len: usize, seed: u64) -> Result<CurveSet> {
    let grid = Grid::uniform(grid_len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent = LatentCurves::draw(n, &mut rng);
    let values = latent.evaluate(grid.points());
    CurveSet::new(grid, values)
}

/// Quadratic bump on `[a, b]` with peak value 1 at the midpoint, zero elsewhere.
fn bump(t: f64, a: f64, b: f64) -> f64 {
    if t < a || t > b {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    (t - a) * (b - t) / (half * half)
}

const COMPLEX_INTERVALS: [(f64, f64); 2] = [(0.05, 0.15), (0.75, 0.85)];

pub fn beta_true(kind: BetaKind, t: f64) -> f64 {
    match kind {
        BetaKind::Simple => 5.0 * bump(t, 0.4, 0.6),
        BetaKind::Medium => 5.0 * bump(t, 0.1, 0.3),
        BetaKind::Complex => {
            let envelope: f64 = COMPLEX_INTERVALS.iter().map(|&(a, b)| bump(t, a, b)).sum();
            2.5 * envelope * (2.0 * std::f64::consts::PI * (t + 0.1)).sin()
        }
    }
}

pub fn true_region(kind: BetaKind) -> Region {
    let pieces: Vec<Interval> = match kind {
        BetaKind::Simple => vec![Interval::new(0.4, 0.6)],
        BetaKind::Medium => vec![Interval::new(0.1, 0.3)],
        BetaKind::Complex => COMPLEX_INTERVALS.iter().map(|&(a, b)| Interval::new(a, b)).collect(),
    };
    Region::from_union(pieces).expect("fixed intervals are valid")
}

pub fn link(kind: LinkKind, u: f64) -> f64 {
    match kind {
        LinkKind::Linear => u,
        LinkKind::Logistic => 1.0 / (1.0 + u.exp()),
        LinkKind::Sinusoidal => u.sin(),
        LinkKind::Composite => u.tanh() + (4.0 * u).sin() * (-0.01 * u * u).exp(),
    }
}

fn population_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
}

/// Simulated dataset with splits laid out train, val, test in row order.
pub fn gen_dataset(scenario: &SimScenario) -> Result<(FunctionalDataset, SimTruth)> {
    let kind = scenario.beta;
    generate(scenario, &|t| beta_true(kind, t), true_region(kind))
}

fn generate(
    scenario: &SimScenario,
    beta: &dyn Fn(f64) -> f64,
    region: Region,
) -> Result<(FunctionalDataset, SimTruth)> {
    scenario.validate()?;
    let n = scenario.n_train + scenario.n_val + scenario.n_test;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let latent = LatentCurves::draw(n, &mut rng);

    let grid = Grid::uniform(scenario.grid_len)?;
    let fine = Grid::uniform(FINE_FACTOR * (scenario.grid_len - 1) + 1)?;
    let fine_values = latent.evaluate(fine.points());
    let weighted_beta: Vec<f64> = fine
        .points()
        .iter()
        .zip(fine.trapezoid_weights())
        .map(|(&t, w)| w * beta(t))
        .collect();
    let signal: Vec<f64> = (0..n)
        .map(|i| {
            let index: f64 = fine_values
                .row(i)
                .iter()
                .zip(&weighted_beta)
                .map(|(x, wb)| x * wb)
                .sum();
            link(scenario.link, index)
        })
        .collect();

    let signal_variance = population_variance(signal.iter().copied());
    if !(signal_variance > 1e-12 && signal_variance.is_finite()) {
        return Err(Error::Calibration(format!(
            "signal variance {signal_variance:e} is degenerate; cannot calibrate the response SNR"
        )));
    }
    let sigma_eps_sq = signal_variance / scenario.response_snr;
    let noise_sd = sigma_eps_sq.sqrt();
    let responses: Vec<f64> = signal
        .iter()
        .map(|s| s + noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let mut observed = latent.evaluate(grid.points());
    for l in 0..grid.len() {
        let var = population_variance(observed.column(l).iter().copied());
        let sd = (var / scenario.curve_snr).sqrt();
        for i in 0..n {
            observed[(i, l)] += sd * rng.sample::<f64, _>(StandardNormal);
        }
    }

    let split = (0..n)
        .map(|i| {
            if i < scenario.n_train {
                Split::Train
            } else if i < scenario.n_train + scenario.n_val {
                Split::Val
            } else {
                Split::Test
            }
        })
        .collect();
    let beta_on_grid = grid.points().iter().map(|&t| beta(t)).collect();
    let dataset = FunctionalDataset::new(CurveSet::new(grid, observed)?, responses, split)?;
    Ok((
        dataset,
        SimTruth {
            true_region: region,
            beta_on_grid,
            sigma_eps_sq,
            signal_variance,
        },
    ))
}
