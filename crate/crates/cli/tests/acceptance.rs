//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use funcsel_core::dataset::Split;
use funcsel_core::evidence::{self, EvidenceOptions, LogPosterior};
use funcsel_core::network::NetworkParams;
use funcsel_core::prior::{self, SparsityHyper};
use funcsel_core::region::{self, RegionMetrics};
use funcsel_core::selector::{self, Criterion, ProjectionScore, RestartScore, SelectorConfig};
use funcsel_core::sim::{self, BetaKind, LinkKind, SimScenario};
use funcsel_core::spline::{self, CurveSet, Grid, SplineBasis};
use funcsel_core::train::{self, TrainConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn budget(name: &str, elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("{name} took {elapsed:.1?}, limit {limit:?}"))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn random_hyper(rng: &mut ChaCha8Rng) -> SparsityHyper {
    let sigma0_sq = 10f64.powf(rng.random_range(-1.5..-0.3));
    SparsityHyper {
        lambda: rng.random_range(0.05..0.95),
        sigma0_sq,
        sigma1_sq: sigma0_sq * rng.random_range(2.0..20.0),
        sigma_sq: rng.random_range(0.3..3.0),
        noise_var: rng.random_range(0.3..3.0),
    }
}

/// 1. Analytic objective gradient against central differences.
fn gradient_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let depth = rng.random_range(1..=3);
        let mut widths = vec![rng.random_range(1..=6)];
        widths.extend((0..depth).map(|_| rng.random_range(1..=6)));
        widths.push(1);
        // biases are random too: zero biases behind a dead layer put a ReLU exactly on its kink
        let n_params: usize = widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum();
        let flat: Vec<f64> = (0..n_params).map(|_| rng.random_range(-1.0..1.0)).collect();
        let params = NetworkParams::from_flat(&widths, &flat).unwrap();
        let batch = rng.random_range(1..=16);
        let x = DMatrix::from_fn(batch, widths[0], |_, _| rng.random_range(-1.5..1.5));
        let y: Vec<f64> = (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect();
        let hyper = random_hyper(&mut rng);

        let (_, grad) = train::objective_and_grad(&params, &x, &y, &hyper).unwrap();
        let analytic = grad.to_flat();
        let theta = params.to_flat();
        let mut fd = vec![0.0; theta.len()];
        for k in 0..theta.len() {
            let h = 1e-5 * theta[k].abs().max(1.0);
            let mut p = theta.clone();
            p[k] += h;
            let fp = train::objective(&NetworkParams::from_flat(&widths, &p).unwrap(), &x, &y, &hyper).unwrap();
            p[k] -= 2.0 * h;
            let fm = train::objective(&NetworkParams::from_flat(&widths, &p).unwrap(), &x, &y, &hyper).unwrap();
            fd[k] = (fp - fm) / (2.0 * h);
        }
        let diff: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        let rel = diff / scale;
        worst = worst.max(rel);
        ensure(rel < 1e-6, || format!("case {case} widths {widths:?}: relative error {rel:.3e}"))?;
    }
    budget("gradient oracle", start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("50 configurations, worst relative error {worst:.2e}"))
}

/// 2. Inclusion probabilities against a direct two-component Bayes computation.
fn pip_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_logodds: f64 = 0.0;
    let mut worst_half: f64 = 0.0;
    for draw in 0..1000 {
        let sigma0_sq = 10f64.powf(rng.random_range(-6.0..-1.0));
        let hyper = SparsityHyper {
            lambda: 10f64.powf(rng.random_range(-6.0..-0.31)),
            sigma0_sq,
            sigma1_sq: sigma0_sq * 10f64.powf(rng.random_range(0.2..4.0)),
            ..SparsityHyper::default()
        };
        let width = rng.random_range(1..=64);
        let tau = prior::norm_threshold(&hyper, width).unwrap();
        let target = tau * rng.random_range(-1.0f64..1.0).exp();
        let raw: Vec<f64> = (0..width).map(|_| rng.random_range(-1.0..1.0)).collect();
        let raw_sq: f64 = raw.iter().map(|v| v * v).sum();
        let w: Vec<f64> = raw.iter().map(|v| v * (target / raw_sq).sqrt()).collect();
        let norm_sq: f64 = w.iter().map(|v| v * v).sum();

        let log_phi = |v: f64, var: f64| -0.5 * (2.0 * PI * var).ln() - v * v / (2.0 * var);
        let slab: f64 = hyper.lambda.ln() + w.iter().map(|&v| log_phi(v, hyper.sigma1_sq)).sum::<f64>();
        let spike: f64 = (1.0 - hyper.lambda).ln() + w.iter().map(|&v| log_phi(v, hyper.sigma0_sq)).sum::<f64>();
        let direct = slab - spike;
        let ours = prior::inclusion_log_odds(norm_sq, width, &hyper);
        worst_logodds = worst_logodds.max((direct - ours).abs());
        ensure((direct - ours).abs() <= 1e-12, || {
            format!("draw {draw}: log-odds {ours} vs direct {direct}")
        })?;

        let q = prior::inclusion_probability(norm_sq, width, &hyper);
        ensure((q > 0.5) == (norm_sq > tau), || {
            format!("draw {draw}: q = {q} but |w|^2 = {norm_sq} vs tau = {tau}")
        })?;
        let at_tau = prior::inclusion_probability(tau, width, &hyper);
        worst_half = worst_half.max((at_tau - 0.5).abs());
        ensure((at_tau - 0.5).abs() <= 1e-10, || format!("draw {draw}: q(tau) = {at_tau}"))?;
    }
    budget("pip oracle", start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "1000 draws, max log-odds gap {worst_logodds:.1e}, max |q(tau) - 1/2| {worst_half:.1e}"
    ))
}

/// 3. Partition of unity, projection of the constant curve, trapezoid convergence.
fn spline_suite() -> Check {
    let start = Instant::now();
    let points: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
    let mut worst_pou: f64 = 0.0;
    for (j, p) in [(55, 4), (80, 4), (20, 8)] {
        let basis = SplineBasis::new(j, p).unwrap();
        for &t in &points {
            let s: f64 = basis.eval_all(t).unwrap().iter().sum();
            worst_pou = worst_pou.max((s - 1.0).abs());
        }
    }
    ensure(worst_pou <= 1e-12, || format!("partition of unity off by {worst_pou:.2e}"))?;

    let grid = Grid::uniform(101).unwrap();
    let ones = CurveSet::new(grid, DMatrix::from_element(1, 101, 1.0)).unwrap();
    let mut worst_one: f64 = 0.0;
    for (j, p) in [(55, 4), (80, 4), (20, 8)] {
        let x = spline::project(&ones, &SplineBasis::new(j, p).unwrap()).unwrap();
        worst_one = worst_one.max((x.sum() - 1.0).abs());
    }
    ensure(worst_one <= 1e-10, || format!("features of X = 1 sum off by {worst_one:.2e}"))?;

    let basis = SplineBasis::new(20, 4).unwrap();
    let f = |t: f64| (2.0 * PI * t).sin() + t * t;
    let project_on = |len: usize| {
        let grid = Grid::uniform(len).unwrap();
        let values = DMatrix::from_fn(1, len, |_, c| f(grid.points()[c]));
        spline::project(&CurveSet::new(grid, values).unwrap(), &basis).unwrap()
    };
    let reference = {
        // composite Simpson on a fine grid is exact to far below the trapezoid errors compared
        let m = 20_000;
        let mut acc = DMatrix::zeros(1, 20);
        for i in 0..=m {
            let t = i as f64 / m as f64;
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            } / (3.0 * m as f64);
            for (k, b) in basis.eval_all(t).unwrap().into_iter().enumerate() {
                acc[(0, k)] += w * f(t) * b;
            }
        }
        acc
    };
    let coarse = (project_on(101) - &reference).amax();
    let fine = (project_on(201) - &reference).amax();
    let ratio = coarse / fine;
    ensure((3.6..=4.4).contains(&ratio), || format!("error ratio {ratio:.3} under grid doubling"))?;
    budget("spline suite", start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "partition of unity within {worst_pou:.1e}, constant curve within {worst_one:.1e}, error ratio {ratio:.3}"
    ))
}

/// `y = Xθ + ε`, `ε ~ N(0, s²I)`, `θ ~ N(0, p²I)`; the objective omits the likelihood normalizer.
struct Conjugate {
    x: DMatrix<f64>,
    y: DVector<f64>,
    noise_var: f64,
    prior_var: f64,
}

impl LogPosterior for Conjugate {
    fn dim(&self) -> usize {
        self.x.ncols()
    }
    fn n_obs(&self) -> usize {
        self.x.nrows()
    }
    fn objective(&self, theta: &[f64]) -> funcsel_core::Result<f64> {
        let t = DVector::from_column_slice(theta);
        let r = &self.y - &self.x * &t;
        let d = theta.len() as f64;
        Ok(r.norm_squared() / (2.0 * self.noise_var)
            + t.norm_squared() / (2.0 * self.prior_var)
            + 0.5 * d * (2.0 * PI * self.prior_var).ln())
    }
    fn gradient(&self, theta: &[f64]) -> funcsel_core::Result<Vec<f64>> {
        let t = DVector::from_column_slice(theta);
        let r = &self.y - &self.x * &t;
        let g = -(self.x.transpose() * r) / self.noise_var + t / self.prior_var;
        Ok(g.as_slice().to_vec())
    }
}

/// 4. Laplace evidence against the closed-form marginal likelihood.
fn laplace_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let n = rng.random_range(20..=200);
        let d = rng.random_range(1..=8);
        let noise_var: f64 = rng.random_range(0.2..2.0);
        let prior_var = rng.random_range(0.2..3.0);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let theta_true = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let y = &x * &theta_true + DVector::from_fn(n, |_, _| noise_var.sqrt() * rng.random_range(-1.7..1.7));
        let model = Conjugate {
            x: x.clone(),
            y: y.clone(),
            noise_var,
            prior_var,
        };

        let precision = x.transpose() * &x / noise_var + DMatrix::identity(d, d) / prior_var;
        let mode = precision.clone().cholesky().unwrap().solve(&(x.transpose() * &y / noise_var));
        let retained: Vec<usize> = (0..d).collect();
        let ours = evidence::laplace_at(&model, mode.as_slice(), &retained, &EvidenceOptions::default())
            .unwrap()
            .log_evidence;

        let cov = DMatrix::identity(n, n) * noise_var + &x * x.transpose() * prior_var;
        let chol = cov.cholesky().unwrap();
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let quad = y.dot(&chol.solve(&y));
        let log_marginal = -0.5 * (n as f64 * (2.0 * PI).ln() + logdet + quad);
        let closed = log_marginal + 0.5 * n as f64 * (2.0 * PI * noise_var).ln();
        worst = worst.max((ours - closed).abs());
        ensure((ours - closed).abs() < 1e-4, || {
            format!("case {case} (n {n}, d {d}): {ours} vs closed form {closed}")
        })?;
    }
    budget("laplace oracle", start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("20 problems, max gap {worst:.2e}"))
}

fn scenario(beta: BetaKind, link: LinkKind, seed: u64) -> SimScenario {
    SimScenario {
        beta,
        link,
        response_snr: 10.0,
        seed,
        ..SimScenario::default()
    }
}

fn end_to_end_config(seed: u64) -> SelectorConfig {
    SelectorConfig {
        train: TrainConfig {
            max_iters: 20_001,
            seed,
            ..TrainConfig::default()
        },
        ..SelectorConfig::default()
    }
}

// Medians from the first full run of criterion 5, kept as regression values.
const FROZEN_MEDIAN_F1: f64 = 0.9197064690795098;
const FROZEN_MEDIAN_RECALL: f64 = 0.9196428571428574;

/// 5. Region recovery on the easy scenario.
fn region_recovery() -> Check {
    let start = Instant::now();
    let mut metrics: Vec<RegionMetrics> = Vec::new();
    let mut criteria = Vec::new();
    for rep in 0..10u64 {
        let (ds, truth) = sim::gen_dataset(&scenario(BetaKind::Simple, LinkKind::Linear, 500 + rep)).unwrap();
        let result = selector::run_selection(&ds, &end_to_end_config(rep)).map_err(|e| e.to_string())?;
        let est = region::features_to_region(&result.selected(), &result.basis().unwrap()).unwrap();
        let m = region::region_metrics(&est, &truth.true_region);
        println!(
            "    replicate {rep}: J* {} selected {} f1 {:.4} recall {:.4} precision {:.4}",
            result.j_star,
            result.selected().len(),
            m.f1,
            m.recall,
            m.precision
        );
        criteria.push(result.criterion_used);
        metrics.push(m);
    }
    let f1 = median(&metrics.iter().map(|m| m.f1).collect::<Vec<_>>());
    let recall = median(&metrics.iter().map(|m| m.recall).collect::<Vec<_>>());
    let summary = format!(
        "median F1 {f1} recall {recall} (criterion used: {:?}) in {:.0?}",
        criteria[0],
        start.elapsed()
    );
    ensure(f1 >= 0.7 && recall >= 0.9, || summary.clone())?;
    if !FROZEN_MEDIAN_F1.is_nan() {
        ensure(f1 == FROZEN_MEDIAN_F1 && recall == FROZEN_MEDIAN_RECALL, || {
            format!("{summary}; frozen medians were F1 {FROZEN_MEDIAN_F1} recall {FROZEN_MEDIAN_RECALL}")
        })?;
    }
    Ok(summary)
}

/// Ridge regression of standardized responses on spline features, with the
/// projection size and penalty chosen on the validation split.
fn ridge_baseline_rmse(ds: &funcsel_core::dataset::FunctionalDataset, sizes: &[usize]) -> f64 {
    let (ct, _) = ds.part(Split::Train);
    let (cv, _) = ds.part(Split::Val);
    let (cs, y_test) = ds.part(Split::Test);
    let yt = DVector::from_vec(ds.standardized(Split::Train));
    let yv = ds.standardized(Split::Val);
    let stats = ds.standardization();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for &j in sizes {
        let basis = SplineBasis::new(j, 4).unwrap();
        let ft = spline::project(&ct, &basis).unwrap();
        let fv = spline::project(&cv, &basis).unwrap();
        let fs = spline::project(&cs, &basis).unwrap();
        let mean = ft.row_mean();
        let center = |f: &DMatrix<f64>| {
            let mut c = f.clone();
            for mut row in c.row_iter_mut() {
                row -= &mean;
            }
            c
        };
        let (ft, fv, fs) = (center(&ft), center(&fv), center(&fs));
        let y_mean = yt.mean();
        let yc = yt.add_scalar(-y_mean);
        let gram = ft.transpose() * &ft;
        let rhs = ft.transpose() * &yc;
        for e in -8..=3 {
            let alpha = 10f64.powi(e) * ft.nrows() as f64;
            let coef = (&gram + DMatrix::identity(j, j) * alpha).cholesky().unwrap().solve(&rhs);
            let pv = (&fv * &coef).add_scalar(y_mean);
            let val: f64 = pv.iter().zip(&yv).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / yv.len() as f64;
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                let ps = (&fs * &coef).add_scalar(y_mean);
                best = Some((val, ps.iter().map(|z| z * stats.sd + stats.mean).collect()));
            }
        }
    }
    let preds = best.unwrap().1;
    region::prediction_metrics(&preds, &y_test).unwrap().rmse
}

/// 6. Ensemble test RMSE against a ridge single-index baseline on a nonlinear scenario.
fn nonlinearity_advantage() -> Check {
    let start = Instant::now();
    let mut wins = 0;
    for rep in 0..10u64 {
        let (ds, _) = sim::gen_dataset(&scenario(BetaKind::Medium, LinkKind::Composite, 600 + rep)).unwrap();
        let config = end_to_end_config(rep);
        let result = selector::run_selection(&ds, &config).map_err(|e| e.to_string())?;
        let (test_curves, y_test) = ds.part(Split::Test);
        let pred = selector::predict_ensemble(&result, &test_curves).unwrap();
        let ours = region::prediction_metrics(&pred, &y_test).unwrap().rmse;
        let ridge = ridge_baseline_rmse(&ds, &config.j_candidates);
        println!("    seed {rep}: ensemble RMSE {ours:.4} ridge RMSE {ridge:.4}");
        if ours < ridge {
            wins += 1;
        }
    }
    let summary = format!("ensemble beats ridge on {wins} of 10 seeds in {:.0?}", start.elapsed());
    ensure(wins >= 7, || summary.clone())?;
    Ok(summary)
}

/// 7. `reproduce --replicates 2 --seed 7` twice gives identical metric tables.
fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{
  "selector": {
    "j_candidates": [20, 25],
    "train": { "hidden": [16, 16], "max_iters": 3001, "patience_iters": 1000, "restarts": 2 }
  },
  "scenario": { "n_train": 300, "n_val": 60, "n_test": 60 }
}"#,
    )
    .unwrap();
    let run = |out: &Path, threads: &str| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_funcsel"))
            .args(["reproduce", "--config"])
            .arg(&config)
            .args(["--replicates", "2", "--seed", "7", "--out"])
            .arg(out)
            .env("FUNCSEL_THREADS", threads)
            .env("RUST_LOG", "error")
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("reproduce exited with {status}"))
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a, "1")?;
    run(&b, "3")?;
    for name in ["metrics.csv", "summary.csv"] {
        let strip = |p: &Path| -> Result<String, String> {
            let text = fs::read_to_string(p.join(name)).map_err(|e| e.to_string())?;
            // the provenance line names the output directory, which differs between the runs
            Ok(text.lines().skip(1).collect::<Vec<_>>().join("\n"))
        };
        let (ta, tb) = (strip(&a)?, strip(&b)?);
        ensure(ta == tb, || format!("{name} differs between runs"))?;
        ensure(ta.lines().count() > 1, || format!("{name} is empty"))?;
    }
    Ok("metrics.csv and summary.csv identical across two runs (1 and 3 threads)".into())
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

/// 8. Exhaustive selection arithmetic over 4-candidate grids.
fn selection_arithmetic() -> Check {
    const LEVELS: [Option<f64>; 4] = [Some(1.0), Some(2.0), Some(3.0), None];
    let decode = |mut code: usize| -> [Option<f64>; 4] {
        let mut out = [None; 4];
        for slot in &mut out {
            *slot = LEVELS[code % 4];
            code /= 4;
        }
        out
    };
    let orders: [[usize; 4]; 4] = [[55, 60, 70, 80], [80, 70, 60, 55], [60, 80, 55, 70], [70, 55, 80, 60]];
    let mut checked = 0usize;

    // reference: best finite score, ties to the smaller key
    let reference = |scores: &[Option<f64>], keys: &[usize], maximize: bool| -> Option<usize> {
        let present: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_some()).collect();
        let target = present
            .iter()
            .map(|&i| scores[i].unwrap())
            .reduce(|a, b| if maximize { a.max(b) } else { a.min(b) })?;
        present
            .into_iter()
            .filter(|&i| scores[i] == Some(target))
            .min_by_key(|&i| keys[i])
    };

    for keys in &orders {
        for ev_code in 0..256 {
            for val_code in 0..256 {
                let ev = decode(ev_code);
                let val = decode(val_code);
                let per_j: Vec<ProjectionScore> = (0..4)
                    .map(|i| ProjectionScore {
                        j: keys[i],
                        mean_evidence: ev[i],
                        mean_val: val[i],
                        n_converged: usize::from(val[i].is_some()),
                        restarts: vec![],
                    })
                    .collect();
                let usable: Vec<usize> = (0..4).filter(|&i| val[i].is_some()).collect();
                let ev_complete = usable.iter().all(|&i| ev[i].is_some());
                for criterion in [Criterion::Evidence, Criterion::Val] {
                    let got = selector::select_projection(&per_j, criterion);
                    let expected = if usable.is_empty() {
                        None
                    } else if criterion == Criterion::Evidence && ev_complete {
                        let masked: Vec<Option<f64>> =
                            (0..4).map(|i| if val[i].is_some() { ev[i] } else { None }).collect();
                        reference(&masked, keys, true).map(|i| (i, Criterion::Evidence))
                    } else {
                        reference(&val, keys, false).map(|i| (i, Criterion::Val))
                    };
                    match (got, expected) {
                        (Ok(g), Some(e)) => ensure(g == e, || {
                            format!("keys {keys:?} ev {ev:?} val {val:?} {criterion:?}: got {g:?}, want {e:?}")
                        })?,
                        (Err(_), None) => {}
                        (g, e) => {
                            return Err(format!(
                                "keys {keys:?} ev {ev:?} val {val:?} {criterion:?}: got {g:?}, want {e:?}"
                            ))
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    for code in 0..256 {
        let vals = decode(code);
        let scores: Vec<RestartScore> = (0..4).map(|r| restart(r, vals[r])).collect();
        let expected = reference(&vals, &[0, 1, 2, 3], false);
        let got = selector::select_restart(&scores);
        ensure(got == expected, || format!("restarts {vals:?}: got {got:?}, want {expected:?}"))?;
        checked += 1;
    }
    Ok(format!("{checked} score tables"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("1 gradient oracle", gradient_oracle),
        ("2 PIP/threshold oracle", pip_oracle),
        ("3 spline suite", spline_suite),
        ("4 Laplace oracle", laplace_oracle),
        ("5 end-to-end region recovery", region_recovery),
        ("6 nonlinearity advantage", nonlinearity_advantage),
        ("7 determinism", determinism),
        ("8 selection arithmetic", selection_arithmetic),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
